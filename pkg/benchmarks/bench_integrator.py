"""Compare the compiled and pure-numpy integrator backends on one workload.

Runs the same fixed-step integration of the coupled network several times per
backend and reports wall-clock medians. The compiled backend is warmed once so
JIT compilation does not pollute the timing. Usage:

    python3 benchmarks/bench_integrator.py [--steps 200000] [--agents 10] [--repeat 5]
"""

from __future__ import annotations

import argparse
import os
import statistics
import subprocess
import sys
import time


def bench_once(steps: int, agents: int, repeat: int) -> float:
    import numpy as np

    from swconsensus import _kernels
    from swconsensus.dynamics import builtin_dynamics
    from swconsensus.graphs import Topology, TopologySet
    from swconsensus.riccati import build_gain, solve_riccati
    from swconsensus.simulate import system_matrix

    dyn = builtin_dynamics("bounded_sine", 2, alpha=1.0)
    w = np.zeros((agents, agents))
    for k in range(agents):
        w[(k + 1) % agents, k] = 1.0
    ts = TopologySet((Topology(agents, w, "ring"),), mu=0.3)
    sol = solve_riccati(dyn.dim, ts.mu, 1.0)
    gain = build_gain(sol, 10.0)
    A = system_matrix(ts, 0, gain, dyn)
    rng = np.random.default_rng(0)
    w0 = rng.normal(size=agents * dyn.dim)
    params = np.asarray(dyn.phi_params, dtype=float)

    # warm-up triggers JIT compilation when the compiled backend is active
    _kernels.rk4_run(A, w0, 1e-4, 100, dyn.dim, dyn.phi_kind, params)

    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        _kernels.rk4_run(A, w0, 1e-4, steps, dyn.dim, dyn.phi_kind, params)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--agents", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--backend", choices=["numba", "numpy"], help="internal: run one backend")
    args = ap.parse_args()

    if args.backend:
        # child process: the backend flag must be set before the package imports
        from swconsensus import _kernels

        label = _kernels.active_backend(1)
        median = bench_once(args.steps, args.agents, args.repeat)
        print(f"{label} {median:.6f}")
        return 0

    results = {}
    for backend, env_val in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, SWCONSENSUS_DISABLE_NUMBA=env_val)
        cmd = [
            sys.executable, __file__,
            "--backend", backend,
            "--steps", str(args.steps),
            "--agents", str(args.agents),
            "--repeat", str(args.repeat),
        ]
        out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
        label, median = out.stdout.split()[-2:]
        results[label] = float(median)
        print(f"{label:>6}: {float(median):.4f} s median over {args.repeat} runs "
              f"({args.steps} steps, {args.agents} agents)")

    if "numba" in results and "numpy" in results and results["numba"] > 0:
        print(f"speedup: {results['numpy'] / results['numba']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
