"""Hot kernels: matrix permanents and many-photon transfer amplitudes.

``transfer_columns`` returns ``<out|U|in> = Per(W[out, in]) / sqrt(prod n! prod m!)``
for every pair of configurations, given as sorted mode lists plus their
``prod n!`` normalisers.

Every kernel exists twice, a numba version (``*_nb``) and a vectorised numpy
version (``*_np``). The public names bind to one of them at import time, see
:mod:`sparsetomo._accel`.
"""
import numpy as np

from ._accel import USE_NUMBA, njit, prange

MAX_PERMANENT_SIZE = 12


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------


@njit(cache=True)
def _perm_small_nb(a, n):
    if n == 1:
        return a[0, 0]
    if n == 2:
        return a[0, 0] * a[1, 1] + a[0, 1] * a[1, 0]
    return (
        a[0, 0] * (a[1, 1] * a[2, 2] + a[1, 2] * a[2, 1])
        + a[0, 1] * (a[1, 0] * a[2, 2] + a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] + a[1, 1] * a[2, 0])
    )


@njit(cache=True)
def _perm_ryser_nb(a, n):
    # Gray-code Ryser: one column enters or leaves the subset per step.
    rowsum = np.zeros(n, dtype=np.complex128)
    total = 0.0j
    prev_gray = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        diff = gray ^ prev_gray
        j = 0
        while (diff >> j) & 1 == 0:
            j += 1
        if gray & diff:
            for i in range(n):
                rowsum[i] += a[i, j]
        else:
            for i in range(n):
                rowsum[i] -= a[i, j]
        prod = 1.0 + 0.0j
        for i in range(n):
            prod *= rowsum[i]
        bits = 0
        g = gray
        while g:
            bits += g & 1
            g >>= 1
        if bits & 1:
            total -= prod
        else:
            total += prod
        prev_gray = gray
    if n & 1:
        return -total
    return total


@njit(cache=True)
def permanent_nb(a):
    n = a.shape[0]
    if n <= 3:
        return _perm_small_nb(a, n)
    return _perm_ryser_nb(a, n)


@njit(cache=True, parallel=True)
def transfer_columns_nb(w, out_modes, in_modes, out_norm, in_norm):
    n_out, n = out_modes.shape
    n_in = in_modes.shape[0]
    res = np.empty((n_out, n_in), dtype=np.complex128)
    for i in prange(n_out):
        sub = np.empty((n, n), dtype=np.complex128)
        for j in range(n_in):
            for r in range(n):
                for c in range(n):
                    sub[r, c] = w[out_modes[i, r], in_modes[j, c]]
            if n <= 3:
                p = _perm_small_nb(sub, n)
            else:
                p = _perm_ryser_nb(sub, n)
            res[i, j] = p / np.sqrt(out_norm[i] * in_norm[j])
    return res


# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------


def batch_permanent_np(a):
    """Permanents of a stack of square matrices, shape ``(B, n, n)``."""
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[-1]
    if n == 1:
        return a[:, 0, 0].copy()
    if n == 2:
        return a[:, 0, 0] * a[:, 1, 1] + a[:, 0, 1] * a[:, 1, 0]
    if n == 3:
        return (
            a[:, 0, 0] * (a[:, 1, 1] * a[:, 2, 2] + a[:, 1, 2] * a[:, 2, 1])
            + a[:, 0, 1] * (a[:, 1, 0] * a[:, 2, 2] + a[:, 1, 2] * a[:, 2, 0])
            + a[:, 0, 2] * (a[:, 1, 0] * a[:, 2, 1] + a[:, 1, 1] * a[:, 2, 0])
        )
    total = np.zeros(a.shape[0], dtype=np.complex128)
    rowsum = np.zeros(a.shape[:2], dtype=np.complex128)
    prev_gray = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        diff = gray ^ prev_gray
        j = diff.bit_length() - 1
        if gray & diff:
            rowsum += a[:, :, j]
        else:
            rowsum -= a[:, :, j]
        if bin(gray).count("1") & 1:
            total -= rowsum.prod(axis=1)
        else:
            total += rowsum.prod(axis=1)
        prev_gray = gray
    return -total if n & 1 else total


def permanent_np(a):
    return batch_permanent_np(np.asarray(a)[None])[0]


def transfer_columns_np(w, out_modes, in_modes, out_norm, in_norm):
    w = np.asarray(w, dtype=np.complex128)
    res = np.empty((out_modes.shape[0], in_modes.shape[0]), dtype=np.complex128)
    rows = out_modes[:, :, None]
    for j in range(in_modes.shape[0]):
        sub = w[rows, in_modes[j][None, None, :]]
        res[:, j] = batch_permanent_np(sub) / np.sqrt(out_norm * in_norm[j])
    return res


if USE_NUMBA:
    permanent_kernel = permanent_nb
    transfer_columns = transfer_columns_nb
else:
    permanent_kernel = permanent_np
    transfer_columns = transfer_columns_np
