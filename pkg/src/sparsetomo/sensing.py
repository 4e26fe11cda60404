"""G-fold coincidence measurements and the sensing matrix ``Gamma = M p``.

Entries are normally ordered correlations: for a multiset of output
waveguides with multiplicities ``g_q`` and an output configuration ``m`` the
contribution is ``prod_q m_q (m_q - 1) ... (m_q - g_q + 1)``. Same-waveguide
entries (``q == r`` for G = 2) are therefore included, which presumes
number-resolving detectors.
"""
import hashlib
import json
import struct
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import comb, factorial, perm

import numpy as np

from .basis import basis_from_descriptor
from .fock import enumerate_configs, modes_from_occupations
from . import kernels
from .lattice import LatticeSpec, propagator

MAGIC = b"QSTM"
FORMAT_VERSION = 1
DEFAULT_DEGENERACY_TOL = 1e-8


class CacheFormatError(ValueError):
    pass


class CoincidenceIndex:
    """Multisets of ``order`` output waveguides, stored as sorted 0-based tuples."""

    def __init__(self, n_waveguides, order):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.n_waveguides = n_waveguides
        self.order = order
        self.modes = np.array(
            list(combinations_with_replacement(range(n_waveguides), order)), dtype=np.int64
        ).reshape(-1, order)
        g = np.zeros((len(self.modes), n_waveguides), dtype=np.int64)
        np.add.at(g, (np.repeat(np.arange(len(self.modes)), order), self.modes.ravel()), 1)
        self.multiplicities = g
        fact = np.array([factorial(k) for k in range(order + 1)], dtype=float)
        # number of ordered tuples that collapse onto each multiset
        self.weights = factorial(order) / fact[g].prod(axis=1)
        self._lookup = {tuple(map(int, m)): i for i, m in enumerate(self.modes)}

    def __len__(self):
        return len(self.modes)

    def index_of(self, waveguides):
        """Row of a multiset given as 1-based waveguide numbers in any order."""
        return self._lookup[tuple(sorted(int(w) - 1 for w in waveguides))]

    def labels(self):
        """1-based waveguide tuples, one per row."""
        return [tuple(int(q) + 1 for q in m) for m in self.modes]


def coincidence_map(n_waveguides, n_photons, order):
    """Matrix ``F`` with ``Gamma = F @ P`` for an output distribution ``P``."""
    if not 1 <= order <= n_photons:
        raise ValueError(f"order must be in [1, {n_photons}], got {order}")
    outs = enumerate_configs(n_waveguides, n_photons).occupations
    cidx = CoincidenceIndex(n_waveguides, order)
    # falling[n, k] = n (n-1) ... (n-k+1), zero when k > n
    falling = np.array(
        [[perm(n, k) for k in range(order + 1)] for n in range(n_photons + 1)], dtype=float
    )
    f = np.ones((len(cidx), len(outs)))
    for q in range(n_waveguides):
        f *= falling[outs[:, q][None, :], cidx.multiplicities[:, q][:, None]]
    return f, cidx


@dataclass
class SensingMatrix:
    data: np.ndarray
    spec: LatticeSpec
    basis: dict  # descriptor
    order: int
    _groups: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def shape(self):
        return self.data.shape

    @property
    def n_photons(self):
        return int(self.basis["n_photons"])

    def metadata(self):
        return {
            "spec": self.spec.to_dict(),
            "basis": self.basis,
            "basis_hash": basis_hash(self.basis),
            "order": self.order,
        }

    def degenerate_groups(self, tol=DEFAULT_DEGENERACY_TOL):
        key = float(tol)
        if key not in self._groups:
            self._groups[key] = degenerate_column_groups(self, tol)
        return self._groups[key]


def basis_hash(descriptor):
    blob = json.dumps(descriptor, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def element_amplitudes(w, element, index):
    """Output amplitudes over ``index`` for one basis element."""
    ins = np.array([modes_from_occupations(c) for _, c in element.terms], dtype=np.int64)
    norm_in = np.array([np.prod([float(factorial(n)) for n in c]) for _, c in element.terms])
    alpha = np.array([a for a, _ in element.terms], dtype=np.complex128)
    w = np.ascontiguousarray(getattr(w, "matrix", w), dtype=np.complex128)
    cols = kernels.transfer_columns(w, index.modes, ins, index.norm, norm_in)
    return cols @ alpha


def coincidence_column(w, element, order):
    """Normally ordered ``order``-fold correlations of one basis element."""
    w_mat = getattr(w, "matrix", w)
    nw = w_mat.shape[0]
    n = element.photon_number
    if not 1 <= order <= n:
        raise ValueError(f"order must be in [1, {n}], got {order}")
    index = enumerate_configs(nw, n)
    p = np.abs(element_amplitudes(w, element, index)) ** 2
    f, _ = coincidence_map(nw, n, order)
    return f @ p


def build_sensing_matrix(spec, basis, order):
    if basis.n_waveguides != spec.n_waveguides:
        raise ValueError(
            f"basis has {basis.n_waveguides} waveguides, lattice has {spec.n_waveguides}"
        )
    if not 1 <= order <= basis.n_photons:
        raise ValueError(f"order must be in [1, {basis.n_photons}], got {order}")
    w = propagator(spec).matrix
    index = enumerate_configs(basis.n_waveguides, basis.n_photons)
    t = kernels.transfer_columns(w, index.modes, index.modes, index.norm, index.norm)

    amps = np.empty((len(index), len(basis)), dtype=np.complex128)
    for i, el in enumerate(basis.elements):
        if len(el.terms) == 1:
            a, c = el.terms[0]
            amps[:, i] = a * t[:, index.index_of(c)]
        else:
            cols = [index.index_of(c) for _, c in el.terms]
            amps[:, i] = t[:, cols] @ np.array([a for a, _ in el.terms])
    f, _ = coincidence_map(basis.n_waveguides, basis.n_photons, order)
    data = f @ (amps.real**2 + amps.imag**2)
    return SensingMatrix(data, spec, basis.descriptor(), int(order))


def conservation_sums(m):
    """Per-column multiplicity-weighted sums; equal N!/(N-G)! for every column."""
    cidx = CoincidenceIndex(m.spec.n_waveguides, m.order)
    return cidx.weights @ m.data


def degenerate_column_groups(m, tol):
    """Groups (size >= 2) of column indices whose columns agree to ``tol`` in max-norm."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    a = np.asarray(getattr(m, "data", m), dtype=float)
    n_m, n_b = a.shape
    sq = np.einsum("ij,ij->j", a, a)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (a.T @ a)
    # Gram-based distances only shortlist pairs; each is verified exactly below
    slack = n_m * tol**2 + 1e-9 * max(sq.max(initial=0.0), 1.0)
    ii, jj = np.nonzero(np.triu(d2 <= slack, k=1))
    parent = list(range(n_b))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in zip(ii.tolist(), jj.tolist()):
        if np.abs(a[:, i] - a[:, j]).max() <= tol:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for k in sorted(set(ii.tolist()) | set(jj.tolist())):
        groups.setdefault(find(k), []).append(k)
    return sorted((g for g in groups.values() if len(g) >= 2), key=lambda g: g[0])


# --------------------------------------------------------------------------
# cache file
# --------------------------------------------------------------------------

_HEADER = struct.Struct("<4sIIIIQQ")


def save_matrix(path, m):
    data = np.ascontiguousarray(m.data, dtype="<f8")
    n_m, n_b = data.shape
    meta = json.dumps(m.metadata(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, m.spec.n_waveguides, m.n_photons,
                              m.order, n_m, n_b))
        fh.write(data.tobytes(order="C"))
        fh.write(struct.pack("<Q", len(meta)))
        fh.write(meta)


def load_matrix(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise CacheFormatError("file too short for header")
    magic, version, nw, n, g, n_m, n_b = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise CacheFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CacheFormatError(f"unsupported format version {version}")
    if n_m != comb(nw + g - 1, g) or n_b != comb(nw + n - 1, n):
        raise CacheFormatError(f"dimensions {n_m}x{n_b} inconsistent with N_w={nw}, N={n}, G={g}")
    off = _HEADER.size
    nbytes = 8 * n_m * n_b
    if len(raw) < off + nbytes + 8:
        raise CacheFormatError("truncated matrix data")
    data = np.frombuffer(raw, dtype="<f8", count=n_m * n_b, offset=off).reshape(n_m, n_b)
    off += nbytes
    (mlen,) = struct.unpack_from("<Q", raw, off)
    off += 8
    if len(raw) != off + mlen:
        raise CacheFormatError("metadata length mismatch")
    meta = json.loads(raw[off:off + mlen].decode("utf-8"))
    spec = LatticeSpec.from_dict(meta["spec"])
    desc = meta["basis"]
    if (spec.n_waveguides, int(desc["n_waveguides"]), int(desc["n_photons"]), int(meta["order"])) != (nw, nw, n, g):
        raise CacheFormatError("metadata disagrees with header")
    if meta.get("basis_hash") not in (None, basis_hash(desc)):
        raise CacheFormatError("basis hash does not match basis descriptor")
    return SensingMatrix(np.array(data, dtype=float), spec, desc, int(g))


def basis_of(m):
    """Rebuild the full :class:`Basis` a matrix was computed for."""
    return basis_from_descriptor(m.basis)

