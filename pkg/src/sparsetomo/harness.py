"""Seeded Monte Carlo trials and parameter sweeps over a fixed sensing matrix."""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .metrics import TrialRecord, fidelity, merge_groups, recovery_probability
from .simulate import depolarize, random_sparse_state, synthesize_measurements, trial_seeds
from .solver import SolverOptions, constrained_omp

WORKERS_ENV = "SPARSETOMO_WORKERS"
SWEEP_COLUMNS = ("axis", "value", "K", "snr_db", "lambda", "trials",
                 "mean_fidelity", "std_fidelity", "recovery_probability")


def worker_count():
    """Thread count for sweeps; ``SPARSETOMO_WORKERS`` caps it."""
    n = os.cpu_count() or 1
    cap = os.environ.get(WORKERS_ENV, "").strip()
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {cap!r}") from None
    return n


@dataclass(frozen=True)
class ExperimentPlan:
    axis: str  # "sparsity" or "snr"
    values: tuple
    sparsity: int = 7  # fixed K on the snr axis
    snr_db: float = math.inf  # fixed SNR on the sparsity axis
    depolarization: float = 0.0
    trials: int = 100
    base_seed: int = 0
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.axis not in ("sparsity", "snr"):
            raise ValueError(f"axis must be 'sparsity' or 'snr', got {self.axis!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        vals = tuple(self.values)
        if not vals:
            raise ValueError("sweep values must be non-empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if self.axis == "sparsity":
            vals = tuple(int(v) for v in vals)
        else:
            vals = tuple(float(v) for v in vals)
        object.__setattr__(self, "values", vals)
        if not 0.0 <= self.depolarization <= 1.0:
            raise ValueError("depolarization must be in [0, 1]")

    def point(self, value):
        """(K, snr_db) at one sweep value."""
        if self.axis == "sparsity":
            return int(value), float(self.snr_db)
        return int(self.sparsity), float(value)


def run_trial(m, sparsity, snr_db, depolarization, seed, opts=None, merge=True):
    """Draw a state, measure it, recover it, and score against the clean truth.

    With ``merge`` the fidelity is taken after summing each degenerate column
    group, since the split inside a group cannot be identified.
    """
    opts = opts or SolverOptions()
    state_seed, noise_seed = trial_seeds(seed)
    n_b = m.shape[1]
    p = random_sparse_state(n_b, sparsity, state_seed)
    gamma = synthesize_measurements(m, depolarize(p, depolarization), snr_db, noise_seed)
    res = constrained_omp(m, gamma, opts)
    q = res.coefficients
    if merge:
        groups = m.degenerate_groups(opts.degeneracy_tol) if hasattr(m, "degenerate_groups") else []
        p, q = merge_groups(p, groups), merge_groups(q, groups)
    f = fidelity(p, q)
    return TrialRecord(int(sparsity), float(snr_db), float(depolarization), int(seed), f,
                       res.final_rel_residual, res.iterations, f > 0.95)


def run_trials(m, jobs, opts=None, workers=None, merge=True):
    """Run ``(K, snr_db, lambda, seed)`` jobs, sorted by (K, snr_db, seed)."""
    workers = workers or worker_count()
    if hasattr(m, "degenerate_groups"):
        # fill the group cache once before threads share the matrix
        m.degenerate_groups((opts or SolverOptions()).degeneracy_tol)

    def one(job):
        return run_trial(m, *job, opts=opts, merge=merge)

    if workers == 1:
        recs = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            recs = list(ex.map(one, jobs))
    return sorted(recs, key=lambda r: (r.K, r.snr_db, r.seed))


def aggregate(plan, value, records):
    f = np.array([r.fidelity for r in records])
    k, snr = plan.point(value)
    return {
        "axis": plan.axis,
        "value": value,
        "K": k,
        "snr_db": snr,
        "lambda": plan.depolarization,
        "trials": len(records),
        "mean_fidelity": float(f.mean()),
        "std_fidelity": float(f.std(ddof=1)) if f.size > 1 else 0.0,
        "recovery_probability": recovery_probability(records),
    }


def run_sweep(m, plan, workers=None, merge=True):
    """Execute a sweep; returns ``(rows, records)`` in sweep order.

    Trial ``t`` at every sweep value uses seed ``base_seed + t``.
    """
    jobs = []
    for v in plan.values:
        k, snr = plan.point(v)
        jobs.extend((k, snr, plan.depolarization, plan.base_seed + t) for t in range(plan.trials))
    records = run_trials(m, jobs, plan.solver, workers, merge)
    rows = []
    for v in plan.values:
        k, snr = plan.point(v)
        recs = [r for r in records if r.K == k and r.snr_db == snr]
        rows.append(aggregate(plan, v, recs))
    return rows, records


def sweep_csv(rows):
    lines = [",".join(SWEEP_COLUMNS)]
    for r in rows:
        cells = []
        for c in SWEEP_COLUMNS:
            v = r[c]
            cells.append(repr(float(v)) if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
