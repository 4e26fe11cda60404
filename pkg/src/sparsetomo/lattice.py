"""Coupled waveguide array: single-particle Hamiltonian and propagator."""
from dataclasses import dataclass

import numpy as np

UNITARITY_TOL = 1e-10


class NumericalError(RuntimeError):
    """A numerical self-check failed (e.g. a propagator is not unitary)."""


@dataclass(frozen=True)
class LatticeSpec:
    """Physical parameters of an open nearest-neighbour waveguide chain.

    ``coupling`` and ``beta`` are in inverse length units, ``z`` is the
    propagation distance.
    """

    n_waveguides: int
    coupling: float = 1.0
    beta: float = 0.0
    z: float = 2.5

    def __post_init__(self):
        if int(self.n_waveguides) != self.n_waveguides or self.n_waveguides < 2:
            raise ValueError(f"n_waveguides must be an integer >= 2, got {self.n_waveguides!r}")
        if not self.coupling > 0:
            raise ValueError(f"coupling must be > 0, got {self.coupling!r}")
        if not self.z >= 0:
            raise ValueError(f"z must be >= 0, got {self.z!r}")
        if not np.isfinite(self.beta):
            raise ValueError("beta must be finite")
        object.__setattr__(self, "n_waveguides", int(self.n_waveguides))

    def to_dict(self):
        return {
            "n_waveguides": self.n_waveguides,
            "coupling": float(self.coupling),
            "beta": float(self.beta),
            "z": float(self.z),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n_waveguides"]), float(d["coupling"]), float(d["beta"]), float(d["z"]))


@dataclass(frozen=True)
class Propagator:
    """Single-particle evolution matrix ``W = exp(i z H)``.

    A photon entering waveguide ``k`` leaves in waveguide ``n`` with amplitude
    ``W[n, k]``. ``W`` is complex symmetric, so the row/column convention does
    not matter.
    """

    matrix: np.ndarray
    spec: LatticeSpec


def build_hamiltonian(spec):
    """Real symmetric tridiagonal single-particle Hamiltonian (open chain)."""
    n = spec.n_waveguides
    h = np.diag(np.full(n, float(spec.beta)))
    off = np.full(n - 1, float(spec.coupling))
    h += np.diag(off, 1) + np.diag(off, -1)
    return h


def chain_modes(n_waveguides):
    """Closed-form eigenvectors of the open chain, columns ``k = 1..N``.

    Returns ``(cosines, vectors)`` where the eigenvalue of mode ``k`` is
    ``beta + 2 C cosines[k-1]``.
    """
    n = n_waveguides
    k = np.arange(1, n + 1)
    theta = k * np.pi / (n + 1)
    sites = np.arange(1, n + 1)
    vecs = np.sqrt(2.0 / (n + 1)) * np.sin(np.outer(sites, theta))
    return np.cos(theta), vecs


def propagator(spec, check=True):
    """Unitary propagator of the array over distance ``spec.z``."""
    if spec.z == 0:
        return Propagator(np.eye(spec.n_waveguides, dtype=np.complex128), spec)
    cosines, v = chain_modes(spec.n_waveguides)
    # beta only contributes a global phase; applied separately to keep the
    # mode phases small for large beta*z
    phases = np.exp(1j * spec.z * 2.0 * spec.coupling * cosines)
    w = (v * phases) @ v.T
    w *= np.exp(1j * spec.beta * spec.z)
    w = 0.5 * (w + w.T)
    if check:
        err = np.abs(w.conj().T @ w - np.eye(spec.n_waveguides)).max()
        if err >= UNITARITY_TOL:
            raise NumericalError(f"propagator not unitary: max |W^H W - I| = {err:.3e}")
    return Propagator(w, spec)


def impulse_response(spec, input_waveguide):
    """Output probabilities for one photon injected at ``input_waveguide`` (1-based)."""
    if not 1 <= input_waveguide <= spec.n_waveguides:
        raise IndexError(
            f"input_waveguide {input_waveguide} outside [1, {spec.n_waveguides}]"
        )
    w = propagator(spec).matrix
    return np.abs(w[:, input_waveguide - 1]) ** 2


def bessel_reference(n_waveguides, cz, input_waveguide):
    """Infinite-array impulse response ``J_{k-k0}(2 C z)^2``."""
    from scipy.special import jv

    k = np.arange(1, n_waveguides + 1)
    return jv(k - input_waveguide, 2.0 * cz) ** 2
