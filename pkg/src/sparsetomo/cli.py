"""Command-line entry point: ``sparsetomo <subcommand> [--flags]``.

Every flag can also come from a JSON file given with ``--config``; keys are
flag names (``"snr-db"`` or ``"snr_db"``), either at top level or nested under
the subcommand name. Flags on the command line win over the file.

Exit codes: 0 ok, 2 invalid arguments, 3 data or format error, 4 numerical failure.
"""
import argparse
import json
import math
import os
import sys

import numpy as np

from . import io as sio
from .basis import entangled_basis, fock_basis
from .harness import ExperimentPlan, run_sweep, sweep_csv
from .lattice import LatticeSpec, NumericalError, bessel_reference, impulse_response
from .metrics import TrialRecord, fidelity, merge_groups
from .sensing import (CacheFormatError, basis_hash, build_sensing_matrix, load_matrix,
                      save_matrix)
from .simulate import depolarize, random_sparse_state, synthesize_measurements, trial_seeds
from .solver import SolverOptions, constrained_omp

EXIT_OK, EXIT_ARGS, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _float(s):
    s = str(s).strip().lower()
    if s in ("inf", "+inf", "infinity", "none"):
        return math.inf
    return float(s)


def _pair(v):
    if isinstance(v, (list, tuple)):
        parts = list(v)
    else:
        parts = str(v).split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two waveguides like 3,7, got {v!r}")
    return int(parts[0]), int(parts[1])


def _values(v):
    """``"1,2,5"`` or ``"1:30"`` (inclusive) or ``"20:40:5"``; lists pass through."""
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    out = []
    for part in str(v).split(","):
        part = part.strip()
        if ":" in part:
            bits = [float(x) for x in part.split(":")]
            lo, hi = bits[0], bits[1]
            step = bits[2] if len(bits) > 2 else 1.0
            if step <= 0:
                raise argparse.ArgumentTypeError("range step must be > 0")
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            out.extend(lo + i * step for i in range(max(n, 0)))
        elif part:
            out.append(_float(part))
    return out


def _add_lattice(p, with_photons=True):
    p.add_argument("--waveguides", type=int, default=20)
    if with_photons:
        p.add_argument("--photons", type=int, default=3)
        p.add_argument("--order", type=int, default=2)
    p.add_argument("--coupling", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--z", type=float, default=None, help="propagation distance (default 2.5)")
    p.add_argument("--cz", type=float, default=None, help="coupling times distance; sets z")


def _add_basis(p):
    p.add_argument("--basis", choices=("fock", "entangled"), default="fock")
    p.add_argument("--pair", type=_pair, default=None, help="entangled pair, e.g. 3,7")


def _add_solver(p):
    d = SolverOptions()
    p.add_argument("--max-support", type=int, default=d.max_support)
    p.add_argument("--rel-tol", type=float, default=d.rel_residual_tol)
    p.add_argument("--min-coefficient", type=float, default=d.min_coefficient)
    p.add_argument("--no-unit-sum", action="store_true", default=False)


def _add_noise(p):
    p.add_argument("--snr-db", type=_float, default=math.inf)
    p.add_argument("--depolarization", type=float, default=0.0)


def build_parser():
    parser = argparse.ArgumentParser(prog="sparsetomo", allow_abbrev=False,
                                     description="Sparse recovery of multi-photon states "
                                                 "from coincidence measurements.")
    parser.add_argument("--config", default=None, help="JSON file supplying any flag")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("build-matrix", allow_abbrev=False, help="compute and cache a sensing matrix")
    _add_lattice(p)
    _add_basis(p)
    p.add_argument("--output", default=None)

    p = sub.add_parser("simulate", allow_abbrev=False,
                       help="synthesize measurements for a state and recover it")
    p.add_argument("--matrix", default=None)
    p.add_argument("--state", default=None, help="state JSON (otherwise a random K-sparse state)")
    p.add_argument("--sparsity", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    _add_noise(p)
    _add_solver(p)
    p.add_argument("--output", default=None, help="recovery JSON (default stdout)")
    p.add_argument("--record", default=None, help="append the trial CSV row here")
    p.add_argument("--measurements-out", default=None)
    p.add_argument("--state-out", default=None)

    p = sub.add_parser("recover", allow_abbrev=False, help="recover a state from a measurement CSV")
    p.add_argument("--matrix", default=None)
    p.add_argument("--measurements", default=None)
    p.add_argument("--truth", default=None, help="state JSON to score the recovery against")
    _add_solver(p)
    p.add_argument("--output", default=None)

    p = sub.add_parser("sweep", allow_abbrev=False, help="Monte Carlo sweep over K or SNR")
    p.add_argument("--matrix", default=None)
    p.add_argument("--axis", choices=("sparsity", "snr"), default="sparsity")
    p.add_argument("--values", type=_values, default=None)
    p.add_argument("--sparsity", type=int, default=7)
    _add_noise(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--no-merge", action="store_true", default=False,
                   help="score without merging degenerate columns")
    _add_solver(p)
    p.add_argument("--output", default=None)
    p.add_argument("--records", default=None, help="per-trial CSV")

    p = sub.add_parser("impulse", allow_abbrev=False, help="single-photon impulse response CSV")
    _add_lattice(p, with_photons=False)
    p.add_argument("--input", type=int, default=None, help="1-based input waveguide (default centre)")
    p.add_argument("--bessel", action="store_true", default=False,
                   help="add the infinite-array Bessel column")
    p.add_argument("--output", default=None)

    for p in sub.choices.values():
        p.add_argument("--config", default=None, help="JSON file supplying any flag")
    return parser


def _config_defaults(parser, argv):
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config", default=None)
    known, rest = pre.parse_known_args(argv)
    if known.config is None:
        return
    try:
        with open(known.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise DataError("config must be a JSON object")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = cfg.get("command")
    for tok in rest:
        if tok in subparsers.choices:
            command = tok
            break
    if command not in subparsers.choices:
        raise UsageError("no subcommand given")
    sp = subparsers.choices[command]
    nested = cfg.get(command, {})
    if not isinstance(nested, dict):
        raise DataError(f"config section {command!r} must be an object")
    known_anywhere = {a.dest for p in subparsers.choices.values() for a in p._actions}
    dests = {a.dest: a for a in sp._actions if a.dest not in ("help", "config")}
    defaults = {}
    items = [(k, v, False) for k, v in cfg.items()
             if k not in ("command", "config") and k not in subparsers.choices]
    items += [(k, v, True) for k, v in nested.items()]
    for key, val, strict in items:
        dest = key.lstrip("-").replace("-", "_")
        if dest not in dests:
            if strict or dest not in known_anywhere:
                raise UsageError(f"unknown config key {key!r} for {command}")
            continue
        action = dests[dest]
        if action.type is not None and not isinstance(val, bool):
            try:
                val = action.type(val) if isinstance(val, str) or action.type in (_pair, _values) else val
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and val not in action.choices:
            raise UsageError(f"config key {key!r}: {val!r} not one of {sorted(action.choices)}")
        defaults[dest] = val
    sp.set_defaults(**defaults)
    if command not in argv:
        argv.append(command)


def _spec(args):
    if args.z is not None and args.cz is not None:
        raise UsageError("give --z or --cz, not both")
    if args.coupling is None or not args.coupling > 0:
        raise UsageError("--coupling must be > 0")
    z = 2.5 if args.z is None and args.cz is None else args.z
    if args.cz is not None:
        z = args.cz / args.coupling
    try:
        return LatticeSpec(args.waveguides, args.coupling, args.beta, z)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _solver_opts(args):
    try:
        return SolverOptions(max_support=args.max_support, rel_residual_tol=args.rel_tol,
                             min_coefficient=args.min_coefficient,
                             enforce_unit_sum=not args.no_unit_sum)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(path):
    if path is None:
        raise UsageError("--matrix is required")
    try:
        return load_matrix(path)
    except OSError as exc:
        raise DataError(f"cannot read matrix cache: {exc}") from None


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def group_report(m):
    groups = m.degenerate_groups()
    lines = [f"matrix {m.shape[0]}x{m.shape[1]}  basis {m.basis['kind']}  "
             f"hash {basis_hash(m.basis)[:16]}",
             f"degenerate column groups: {len(groups)}"]
    lines += ["  " + " ".join(str(i + 1) for i in g) for g in groups]
    return "\n".join(lines) + "\n"


def cmd_build_matrix(args):
    if args.output is None:
        raise UsageError("--output is required")
    spec = _spec(args)
    if args.photons < 1 or not 1 <= args.order < args.photons + 1:
        raise UsageError("need photons >= 1 and 1 <= order <= photons")
    try:
        if args.basis == "entangled":
            if args.pair is None:
                raise UsageError("--basis entangled needs --pair")
            basis = entangled_basis(args.waveguides, args.photons, *args.pair)
        else:
            basis = fock_basis(args.waveguides, args.photons)
    except (ValueError, IndexError, OverflowError) as exc:
        raise UsageError(str(exc)) from None
    m = build_sensing_matrix(spec, basis, args.order)
    save_matrix(args.output, m)
    sys.stdout.write(group_report(m))
    return EXIT_OK


def _score(m, truth, res):
    groups = m.degenerate_groups()
    return fidelity(merge_groups(truth, groups), merge_groups(res.coefficients, groups))


def cmd_simulate(args):
    m = _load(args.matrix)
    opts = _solver_opts(args)
    if not 0 <= args.depolarization <= 1:
        raise UsageError("--depolarization must be in [0, 1]")
    state_seed, noise_seed = trial_seeds(args.seed)
    if args.state is not None:
        p, desc = sio.read_state(args.state, m.shape[1])
        if basis_hash(desc) != basis_hash(m.basis):
            raise DataError("state basis does not match the matrix basis (hash mismatch)")
        if not np.isclose(p.sum(), 1.0, atol=1e-9):
            raise DataError(f"state coefficients sum to {p.sum()!r}, expected 1")
    else:
        if args.sparsity is None:
            raise UsageError("give --state or --sparsity")
        if not 1 <= args.sparsity <= m.shape[1]:
            raise UsageError(f"--sparsity must be in [1, {m.shape[1]}]")
        p = random_sparse_state(m.shape[1], args.sparsity, state_seed)
    gamma = synthesize_measurements(m, depolarize(p, args.depolarization), args.snr_db, noise_seed)
    res = constrained_omp(m, gamma, opts)
    f = _score(m, p, res)
    rec = TrialRecord(int(np.count_nonzero(p)), args.snr_db, args.depolarization, args.seed,
                      f, res.final_rel_residual, res.iterations, f > 0.95)
    if args.measurements_out:
        sio.write_measurements(args.measurements_out, gamma, m.spec.n_waveguides, m.order)
    if args.state_out:
        sio.write_state(args.state_out, p, m.basis)
    out = res.to_json()
    out["fidelity"] = f
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.output)
    if args.record:
        fresh = not os.path.exists(args.record) or os.path.getsize(args.record) == 0
        with open(args.record, "a", encoding="utf-8", newline="") as fh:
            fh.write(sio.trial_csv([rec], header=fresh))
    else:
        sys.stderr.write(sio.trial_csv([rec]))
    return EXIT_OK


def cmd_recover(args):
    m = _load(args.matrix)
    opts = _solver_opts(args)
    if args.measurements is None:
        raise UsageError("--measurements is required")
    try:
        gamma = sio.read_measurements(args.measurements, m.spec.n_waveguides, m.order)
    except OSError as exc:
        raise DataError(str(exc)) from None
    res = constrained_omp(m, gamma, opts)
    out = res.to_json()
    out["basis_hash"] = basis_hash(m.basis)
    if args.truth is not None:
        p, desc = sio.read_state(args.truth, m.shape[1])
        if basis_hash(desc) != basis_hash(m.basis):
            raise DataError("truth basis does not match the matrix basis (hash mismatch)")
        out["fidelity"] = _score(m, p, res)
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_OK


def cmd_sweep(args):
    m = _load(args.matrix)
    if args.values is None:
        raise UsageError("--values is required")
    try:
        plan = ExperimentPlan(args.axis, tuple(args.values), sparsity=args.sparsity,
                              snr_db=args.snr_db, depolarization=args.depolarization,
                              trials=args.trials, base_seed=args.base_seed,
                              solver=_solver_opts(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ks = [plan.point(v)[0] for v in plan.values]
    if any(not 1 <= k <= m.shape[1] for k in ks):
        raise UsageError(f"sparsity values must lie in [1, {m.shape[1]}]")
    if args.workers is not None and args.workers < 1:
        raise UsageError("--workers must be >= 1")
    rows, records = run_sweep(m, plan, workers=args.workers, merge=not args.no_merge)
    _emit(sweep_csv(rows), args.output)
    if args.records:
        _emit(sio.trial_csv(records), args.records)
    return EXIT_OK


def cmd_impulse(args):
    spec = _spec(args)
    k0 = args.input if args.input is not None else (spec.n_waveguides + 1) // 2
    try:
        probs = impulse_response(spec, k0)
    except IndexError as exc:
        raise UsageError(str(exc)) from None
    cols = ["waveguide", "probability"]
    ref = None
    if args.bessel:
        ref = bessel_reference(spec.n_waveguides, spec.coupling * spec.z, k0)
        cols.append("bessel")
    lines = [",".join(cols)]
    for k, pk in enumerate(probs, start=1):
        row = [str(k), repr(float(pk))]
        if ref is not None:
            row.append(repr(float(ref[k - 1])))
        lines.append(",".join(row))
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


COMMANDS = {
    "build-matrix": cmd_build_matrix,
    "simulate": cmd_simulate,
    "recover": cmd_recover,
    "sweep": cmd_sweep,
    "impulse": cmd_impulse,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _config_defaults(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_ARGS if exc.code else EXIT_OK
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_ARGS
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ARGS
    except (DataError, CacheFormatError, sio.FormatError) as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA
    except OSError as exc:
        sys.stderr.write(f"i/o error: {exc}\n")
        return EXIT_DATA
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except FloatingPointError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
