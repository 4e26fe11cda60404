"""Sparse nonnegative recovery: OMP with a nonnegative least-squares refit.

l1 minimisation is useless here since every probability vector has unit l1
norm, so the solver is greedy: pick the atom best aligned with the residual,
refit all picked atoms under x >= 0, repeat.
"""
from dataclasses import dataclass, field

import numpy as np

from .sensing import DEFAULT_DEGENERACY_TOL


@dataclass(frozen=True)
class SolverOptions:
    max_support: int = 120
    rel_residual_tol: float = 0.005
    min_coefficient: float = 1e-6
    enforce_unit_sum: bool = True
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL

    def __post_init__(self):
        if self.max_support < 1:
            raise ValueError("max_support must be >= 1")
        if not (self.rel_residual_tol > 0 and self.min_coefficient > 0 and self.degeneracy_tol > 0):
            raise ValueError("tolerances must be > 0")


@dataclass
class RecoveryResult:
    coefficients: np.ndarray  # dense, unit sum when enforced
    raw_coefficients: np.ndarray  # dense NNLS output before renormalisation
    support: list
    iterations: int
    final_rel_residual: float
    degenerate_groups_touched: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    zero_measurement: bool = False

    def to_json(self):
        """External form; basis indices are 1-based."""
        return {
            "support": [int(i) + 1 for i in self.support],
            "coefficients": [float(self.coefficients[i]) for i in self.support],
            "raw_coefficients": [float(self.raw_coefficients[i]) for i in self.support],
            "iterations": int(self.iterations),
            "final_rel_residual": float(self.final_rel_residual),
            "degenerate_groups_touched": [[int(i) + 1 for i in g] for g in self.degenerate_groups_touched],
        }


def nnls(a, b, max_iter=None, x0=None):
    """min ||a x - b||_2 subject to x >= 0 (Lawson-Hanson active set).

    Rank-deficient ``a`` is allowed; a minimiser is returned. ``x0`` warm-starts
    the active set; it must be feasible and least-squares optimal on its own
    positive entries (e.g. the solution for a subset of the columns, zero-padded).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = a.shape
    x = np.zeros(n)
    if n == 0:
        return x
    atb = a.T @ b
    scale = np.abs(atb).max()
    if scale == 0:
        return x
    tol = 1e-12 * scale * max(m, n)
    max_iter = max_iter or 3 * n + 10

    passive = np.zeros(n, dtype=bool)
    rejected = np.zeros(n, dtype=bool)
    if x0 is not None:
        x[:] = np.clip(x0, 0.0, None)
        passive = x > 0
    w = a.T @ (b - a @ x) if passive.any() else atb.copy()
    for _ in range(max_iter):
        cand = ~passive & ~rejected & (w > tol)
        if not cand.any():
            break
        j = int(np.argmax(np.where(cand, w, -np.inf)))
        passive[j] = True
        changed = False
        for _ in range(n + 1):
            idx = np.flatnonzero(passive)
            z = np.linalg.lstsq(a[:, idx], b, rcond=None)[0]
            if np.all(z > 0):
                x[:] = 0.0
                x[idx] = z
                changed = True
                break
            if not changed and passive[j] and z[np.searchsorted(idx, j)] <= 0:
                # j only looked profitable through round-off (dependent column)
                passive[j] = False
                rejected[j] = True
                break
            neg = z <= 0
            xi = x[idx]
            alpha = np.min(xi[neg] / (xi[neg] - z[neg]))
            x[idx] = xi + alpha * (z - xi)
            changed = True
            drop = idx[x[idx] <= 1e-15 * max(xi.max(initial=0.0), 1.0)]
            x[drop] = 0.0
            passive[drop] = False
        if changed:
            rejected[:] = False
        w = a.T @ (b - a @ x)
    return x


def _result_from(n_b, x, support, iterations, rel, history, groups, opts):
    raw = np.zeros(n_b)
    raw[support] = x
    coef = raw.copy()
    s = coef.sum()
    if opts.enforce_unit_sum and s > 0:
        coef /= s
    sup = set(int(i) for i in support)
    touched = [list(g) for g in groups if sup.intersection(g)]
    return RecoveryResult(coef, raw, [int(i) for i in support], iterations, rel, touched, history)


def constrained_omp(m, gamma, opts=None, groups=None):
    """Recover a sparse probability vector from coincidences ``gamma ~ M p``.

    Parameters
    ----------
    m : SensingMatrix or ndarray
        Sensing matrix, shape ``(N_m, N_b)``.
    gamma : MeasurementVector or ndarray
        Measured coincidences, length ``N_m``.
    opts : SolverOptions, optional
    groups : list of lists, optional
        Degenerate column groups. Taken from ``m`` when it is a SensingMatrix.

    Returns
    -------
    RecoveryResult
    """
    opts = opts or SolverOptions()
    a = np.asarray(getattr(m, "data", m), dtype=float)
    y = np.asarray(getattr(gamma, "values", gamma), dtype=float)
    if a.shape[0] != y.size:
        raise ValueError(f"{y.size} measurements for a matrix with {a.shape[0]} rows")
    if groups is None:
        groups = m.degenerate_groups(opts.degeneracy_tol) if hasattr(m, "degenerate_groups") else []
    n_b = a.shape[1]
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0:
        res = _result_from(n_b, np.zeros(0), [], 0, 0.0, [0.0], groups, opts)
        res.zero_measurement = True
        return res

    norms = np.linalg.norm(a, axis=0)
    usable = norms > 0
    inv_norms = np.where(usable, 1.0 / np.where(usable, norms, 1.0), 0.0)
    in_support = ~usable
    support = []
    x = np.zeros(0)
    r = y.copy()
    rnorm = ynorm
    history = [rnorm]
    while rnorm > opts.rel_residual_tol * ynorm and len(support) < opts.max_support:
        corr = (a.T @ r) * inv_norms
        corr[in_support] = -np.inf
        j = int(np.argmax(corr))
        if not corr[j] > 0:
            break
        support.append(j)
        in_support[j] = True
        x = nnls(a[:, support], y, x0=np.append(x, 0.0))
        r = y - a[:, support] @ x
        rnorm = float(np.linalg.norm(r))
        history.append(rnorm)
    iterations = len(support)

    support = np.array(support, dtype=np.int64)
    keep = x >= opts.min_coefficient
    support = support[keep]
    x = nnls(a[:, support], y) if support.size else np.zeros(0)
    nz = x > 0
    support, x = support[nz], x[nz]
    order = np.argsort(support, kind="stable")
    support, x = support[order], x[order]
    rel = float(np.linalg.norm(y - a[:, support] @ x)) / ynorm
    return _result_from(n_b, x, support, iterations, rel, history, groups, opts)
