"""Fidelity of recovered coefficient vectors and trial statistics."""
from dataclasses import asdict, dataclass

import numpy as np

SUCCESS_THRESHOLD = 0.95
NEG_TOL = 1e-12


@dataclass
class TrialRecord:
    K: int
    snr_db: float
    depolarization: float
    seed: int
    fidelity: float
    residual: float
    iterations: int
    success: bool

    CSV_COLUMNS = ("K", "snr_db", "lambda", "seed", "fidelity", "residual", "iterations", "success")

    def csv_row(self):
        d = asdict(self)
        return [
            d["K"], _fmt(d["snr_db"]), _fmt(d["depolarization"]), d["seed"],
            _fmt(d["fidelity"]), _fmt(d["residual"]), d["iterations"], int(d["success"]),
        ]


def _fmt(x):
    return repr(float(x))


def fidelity(p, q):
    """Bhattacharyya overlap sum_i sqrt(p_i q_i) of the unit-sum normalised vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    if p.min(initial=0.0) < -NEG_TOL or q.min(initial=0.0) < -NEG_TOL:
        raise ValueError("fidelity needs nonnegative vectors")
    p = np.clip(p, 0.0, None)
    q = np.clip(q, 0.0, None)
    sp, sq = p.sum(), q.sum()
    if sp == 0 or sq == 0:
        return 0.0
    f = float(np.sqrt(p / sp * (q / sq)).sum())
    return min(f, 1.0)


def merge_groups(p, groups):
    """Sum the coefficients of each degenerate group into its first index."""
    p = np.array(p, dtype=float)
    for g in groups:
        g = list(g)
        p[g[0]] = p[g].sum()
        p[g[1:]] = 0.0
    return p


def recovery_probability(records, threshold=SUCCESS_THRESHOLD):
    """Fraction of trials with fidelity strictly above ``threshold``."""
    records = list(records)
    if not records:
        raise ValueError("no trial records")
    f = np.array([r.fidelity if isinstance(r, TrialRecord) else float(r) for r in records])
    return float(np.mean(f > threshold))
