"""Compare the numba and numpy kernels on the default workload.

Run with ``python3 benchmarks/bench_kernels.py [--repeat 3]``. Both kernel
families are called directly, so the result does not depend on
``SPARSETOMO_NO_NUMBA``.
"""
import argparse
import time

import numpy as np

from sparsetomo import kernels
from sparsetomo.fock import enumerate_configs
from sparsetomo.lattice import LatticeSpec, propagator


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--waveguides", type=int, default=20)
    ap.add_argument("--photons", type=int, default=3)
    ap.add_argument("--ryser-size", type=int, default=10)
    args = ap.parse_args()

    w = np.ascontiguousarray(propagator(LatticeSpec(args.waveguides)).matrix)
    idx = enumerate_configs(args.waveguides, args.photons)
    cases = {
        "transfer matrix": (
            lambda: kernels.transfer_columns_nb(w, idx.modes, idx.modes, idx.norm, idx.norm),
            lambda: kernels.transfer_columns_np(w, idx.modes, idx.modes, idx.norm, idx.norm),
        ),
    }
    rng = np.random.default_rng(0)
    n = args.ryser_size
    stack = rng.standard_normal((200, n, n)) + 1j * rng.standard_normal((200, n, n))
    cases[f"200 permanents {n}x{n}"] = (
        lambda: np.array([kernels.permanent_nb(a) for a in stack]),
        lambda: kernels.batch_permanent_np(stack),
    )

    print(f"{'case':<28}{'numba s':>10}{'numpy s':>10}{'speedup':>9}{'max diff':>11}")
    for name, (fast, slow) in cases.items():
        t0 = time.perf_counter()
        fast()  # compile or load the cached machine code
        warm = time.perf_counter() - t0
        t_nb, a = best_of(fast, args.repeat)
        t_np, b = best_of(slow, args.repeat)
        diff = float(np.abs(a - b).max())
        print(f"{name:<28}{t_nb:>10.3f}{t_np:>10.3f}{t_np / t_nb:>9.1f}{diff:>11.1e}"
              f"   (first numba call {warm:.2f}s)")


if __name__ == "__main__":
    main()
