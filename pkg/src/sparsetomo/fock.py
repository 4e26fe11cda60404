"""Fixed photon-number Fock configurations and multi-photon amplitudes.

A configuration is a tuple of occupation numbers, one per waveguide. Internally
configurations are also carried as sorted 0-based mode lists, e.g. the
occupation ``(2, 0, 1)`` is the mode list ``(0, 0, 2)``; this is the form the
permanent kernels consume.
"""
from itertools import combinations_with_replacement
from math import comb, factorial, prod

import numpy as np

from . import kernels
from .kernels import MAX_PERMANENT_SIZE

MAX_CONFIGS = 2**31 - 1
NORM_TOL = 1e-9


def occupations_from_modes(modes, n_waveguides):
    occ = [0] * n_waveguides
    for m in modes:
        occ[m] += 1
    return tuple(occ)


def modes_from_occupations(occ):
    return tuple(k for k, n in enumerate(occ) for _ in range(n))


def config_from_waveguides(n_waveguides, occupied):
    """Build an occupation tuple from 1-based ``{waveguide: photons}``.

    ``config_from_waveguides(20, {3: 2, 16: 1})`` is the state |2_3 1_16>.
    """
    occ = [0] * n_waveguides
    for wg, n in occupied.items():
        if not 1 <= wg <= n_waveguides:
            raise IndexError(f"waveguide {wg} outside [1, {n_waveguides}]")
        if n < 0:
            raise ValueError("occupation numbers must be nonnegative")
        occ[wg - 1] += int(n)
    return tuple(occ)


def _norm(occ):
    return float(prod(factorial(n) for n in occ))


class ConfigIndex:
    """All ``n_photons``-photon configurations over ``n_waveguides`` modes.

    Ordering is descending lexicographic on occupation vectors, which is the
    order ``combinations_with_replacement`` yields mode lists in; for two modes
    and three photons: (3,0), (2,1), (1,2), (0,3).
    """

    def __init__(self, n_waveguides, n_photons):
        if n_waveguides < 1 or n_photons < 1:
            raise ValueError("need n_waveguides >= 1 and n_photons >= 1")
        size = comb(n_waveguides + n_photons - 1, n_photons)
        if size > MAX_CONFIGS:
            raise OverflowError(
                f"{size} configurations for N_w={n_waveguides}, N={n_photons} exceeds {MAX_CONFIGS}"
            )
        self.n_waveguides = n_waveguides
        self.n_photons = n_photons
        self.modes = np.array(
            list(combinations_with_replacement(range(n_waveguides), n_photons)),
            dtype=np.int64,
        ).reshape(size, n_photons)
        occ = np.zeros((size, n_waveguides), dtype=np.int64)
        rows = np.repeat(np.arange(size), n_photons)
        np.add.at(occ, (rows, self.modes.ravel()), 1)
        self.occupations = occ
        self._lookup = {tuple(map(int, o)): i for i, o in enumerate(occ)}
        fact = np.array([factorial(k) for k in range(n_photons + 1)], dtype=float)
        self.norm = fact[occ].prod(axis=1)
        self.occupations.flags.writeable = False
        self.modes.flags.writeable = False
        self.norm.flags.writeable = False

    def __len__(self):
        return self.modes.shape[0]

    def __iter__(self):
        return (self.config_of(i) for i in range(len(self)))

    def index_of(self, config):
        try:
            return self._lookup[tuple(int(n) for n in config)]
        except KeyError:
            raise KeyError(f"{tuple(config)} is not a {self.n_photons}-photon configuration "
                           f"over {self.n_waveguides} waveguides") from None

    def config_of(self, i):
        return tuple(int(n) for n in self.occupations[i])


_INDEX_CACHE = {}


def enumerate_configs(n_waveguides, n_photons):
    key = (int(n_waveguides), int(n_photons))
    idx = _INDEX_CACHE.get(key)
    if idx is None:
        idx = _INDEX_CACHE[key] = ConfigIndex(*key)
    return idx


def permanent(m):
    """Permanent of a square complex matrix (direct for n <= 3, Ryser to n = 12)."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n < 1:
        raise ValueError("permanent needs n >= 1")
    if n > MAX_PERMANENT_SIZE:
        raise ValueError(f"permanent limited to n <= {MAX_PERMANENT_SIZE}, got {n}")
    return complex(kernels.permanent_kernel(np.ascontiguousarray(m)))


def _as_matrix(w):
    return np.ascontiguousarray(getattr(w, "matrix", w), dtype=np.complex128)


def transition_amplitude(w, input, output):
    """<output| U |input> for the many-photon evolution induced by ``w``."""
    w = _as_matrix(w)
    if sum(input) != sum(output):
        raise ValueError(f"photon number mismatch: {sum(input)} in, {sum(output)} out")
    if len(input) != w.shape[0] or len(output) != w.shape[0]:
        raise ValueError("configuration length does not match propagator size")
    ins = modes_from_occupations(input)
    outs = modes_from_occupations(output)
    if not ins:
        return 1.0 + 0.0j
    sub = w[np.ix_(outs, ins)]
    return permanent(sub) / np.sqrt(_norm(input) * _norm(output))


def _check_terms(terms):
    terms = [(complex(a), tuple(int(n) for n in c)) for a, c in terms]
    if not terms:
        raise ValueError("empty input state")
    photons = {sum(c) for _, c in terms}
    if len(photons) != 1:
        raise ValueError(f"photon number mismatch between terms: {sorted(photons)}")
    acc = {}
    for a, c in terms:
        acc[c] = acc.get(c, 0) + a
    norm = sum(abs(a) ** 2 for a in acc.values())
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"input state not normalised: sum |a|^2 = {norm!r}")
    return list(acc.items()), photons.pop()


def output_amplitudes(w, terms, index=None):
    w = _as_matrix(w)
    acc, n = _check_terms(terms)
    if index is None:
        index = enumerate_configs(w.shape[0], n)
    ins = np.array([modes_from_occupations(c) for c, _ in acc], dtype=np.int64)
    norm_in = np.array([_norm(c) for c, _ in acc])
    alpha = np.array([a for _, a in acc])
    cols = kernels.transfer_columns(w, index.modes, ins, index.norm, norm_in)
    return cols @ alpha


def output_distribution(w, terms, index=None):
    """Probability of every output configuration for a (superposed) Fock input.

    ``terms`` is a list of ``(amplitude, occupations)``; the result is indexed
    by :func:`enumerate_configs` for the input photon number.
    """
    return np.abs(output_amplitudes(w, terms, index)) ** 2


def transfer_matrix(w, index):
    """Full many-photon transfer matrix ``T[m, c] = <m|U|c>`` on ``index``."""
    w = _as_matrix(w)
    return kernels.transfer_columns(w, index.modes, index.modes, index.norm, index.norm)
