"""Ground-truth states, depolarisation and noisy coincidence measurements."""
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class MeasurementVector:
    values: np.ndarray
    snr_db: float = math.inf
    depolarization: float = 0.0
    seed: int = None
    clean: np.ndarray = field(default=None, repr=False)


def trial_seeds(seed):
    """Independent (state, noise) seed sequences derived from one integer seed."""
    return np.random.SeedSequence([int(seed), 0]), np.random.SeedSequence([int(seed), 1])


def random_sparse_state(n_basis, sparsity, seed):
    """K-sparse probability vector: uniform support, flat Dirichlet weights."""
    if not 1 <= sparsity <= n_basis:
        raise ValueError(f"sparsity must be in [1, {n_basis}], got {sparsity}")
    rng = np.random.default_rng(seed)
    support = rng.choice(n_basis, size=sparsity, replace=False)
    p = np.zeros(n_basis)
    p[support] = rng.dirichlet(np.ones(sparsity))
    return p


def depolarize(p, lam):
    """(1 - lam) p + lam / N_b, the depolarising channel in coefficient space."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"depolarization must be in [0, 1], got {lam}")
    p = np.asarray(p, dtype=float)
    return (1.0 - lam) * p + lam / p.size


def synthesize_measurements(m, p, snr_db=math.inf, seed=None):
    """Gamma = M p plus Gaussian noise rescaled to exactly ``snr_db`` (energy ratio).

    ``snr_db = inf`` gives the noiseless measurement. Entries are not clamped.
    """
    data = getattr(m, "data", m)
    p = np.asarray(p, dtype=float)
    if data.shape[1] != p.size:
        raise ValueError(f"state has {p.size} entries, matrix has {data.shape[1]} columns")
    clean = data @ p
    values = clean.copy()
    if math.isfinite(snr_db):
        e = np.random.default_rng(seed).standard_normal(clean.size)
        target = np.linalg.norm(clean) * 10.0 ** (-snr_db / 20.0)
        values += e * (target / np.linalg.norm(e))
    seed_out = seed if isinstance(seed, (int, np.integer)) or seed is None else None
    return MeasurementVector(values, float(snr_db), 0.0, seed_out, clean)
