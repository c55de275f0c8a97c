"""Command-line front end: run scenarios, sweeps, validation, signal generation, plots.

Exit codes for `run`:
  0  certified and converged (also degenerate zero-horizon runs)
  1  parse error or unexpected failure
  2  scenario validation failed (nothing simulated)
  3  trajectory diverged
  4  certificate verdict uncertified (or converged-but-uncertified mixtures)
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_DIVERGED = 3
EXIT_UNCERTIFIED = 4

OUT_ROOT_ENV = "SWCONSENSUS_OUT_ROOT"


def _out_dir(args, scenario_path: Path, configured: str | None) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    if configured:
        return scenario_path.parent / configured
    root = os.environ.get(OUT_ROOT_ENV, "runs")
    return Path(root) / scenario_path.stem


def _load(args):
    from .scenario import load_scenario

    sc = load_scenario(args.scenario)
    if getattr(args, "dt", None):
        from .simulate import SimulationConfig

        sc.sim = SimulationConfig(
            dt=float(args.dt),
            horizon=sc.sim.horizon,
            record_stride=sc.sim.record_stride,
            divergence_guard=sc.sim.divergence_guard,
        )
    return sc


def cmd_validate(args) -> int:
    from .scenario import validate_scenario

    sc = _load(args)
    rep = validate_scenario(sc)
    for entry in rep["topology_report"]["topologies"]:
        status = "connected" if entry["spectral_connected"] else "disconnected"
        agree = "ok" if entry["oracles_agree"] else "ORACLE DISAGREEMENT"
        print(f"topology {entry['label'] or entry['index']}: {status} ({agree})")
    if rep["valid"]:
        print("scenario valid")
        return EXIT_OK
    for v in rep["violations"]:
        print(f"violation: {v}")
    return EXIT_INVALID


def cmd_run(args) -> int:
    from .certificate import certify_run
    from .report import (
        decay_rate_fit,
        write_json,
        write_switches_csv,
        write_trajectory_csv,
        write_vtrace_csv,
    )
    from .scenario import validate_scenario
    from .simulate import simulate

    scenario_path = Path(args.scenario)
    sc = _load(args)
    out = _out_dir(args, scenario_path, sc.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    validation = validate_scenario(sc)
    if not validation["valid"]:
        write_json(out / "summary.json", {"outcome": "invalid", "validation": validation})
        for v in validation["violations"]:
            print(f"validation failure: {v}", file=sys.stderr)
        return EXIT_INVALID

    traj = simulate(sc.ts, sc.sig, sc.gain, sc.dyn, sc.init, sc.sim)
    write_trajectory_csv(out / "trajectory.csv", traj)
    write_switches_csv(out / "switches.csv", traj)

    final_err = float(traj.consensus_error[-1])
    max_err = float(traj.consensus_error.max())
    zero_horizon = sc.sim.horizon is not None and sc.sim.horizon == 0.0

    if zero_horizon:
        summary = {
            "outcome": "zero-horizon",
            "final_error": final_err,
            "max_error": max_err,
            "decay_rate_fit": None,
            "validation": validation,
            "config": sc.raw,
        }
        write_json(out / "summary.json", summary)
        print(f"zero horizon: initial disagreement {final_err:.6g}")
        return EXIT_OK

    rep = certify_run(traj, sc.ts, sc.sig, sc.gain, sc.sol, sc.ell, sc.adt, sc.dyn)
    write_vtrace_csv(out / "vtrace.csv", rep)
    write_json(out / "certificate.json", rep.to_dict())

    converged = final_err < sc.converged_tol and (
        max_err <= 0
        or final_err <= max_err * 10.0 ** (-sc.converged_orders)
    )
    summary = {
        "outcome": (
            "diverged"
            if traj.diverged
            else ("certified" if rep.certified else "uncertified")
        ),
        "converged": converged,
        "final_error": final_err,
        "max_error": max_err,
        "decay_rate_fit": decay_rate_fit(traj.t, traj.consensus_error),
        "verdict": rep.verdict,
        "gain": {"g": sc.gain.g, "mu": sc.sol.mu, "a": sc.sol.a, "ell": sc.ell,
                 "K0": sc.gain.K0.tolist(), "K": sc.gain.K.tolist(),
                 "P": sc.sol.P.tolist()},
        "validation": validation,
        "config": sc.raw,
    }
    write_json(out / "summary.json", summary)
    print(f"verdict: {rep.verdict}; final error {final_err:.6g}; artifacts in {out}")
    if traj.diverged:
        return EXIT_DIVERGED
    if rep.certified and converged:
        return EXIT_OK
    return EXIT_UNCERTIFIED


def _sweep_cell(payload: dict) -> list:
    """Worker for one (g, tau) cell; reconstructs everything from primitives."""
    from .certificate import certify_run
    from .dynamics import builtin_dynamics
    from .graphs import TopologySet
    from .riccati import build_gain, solve_riccati
    from .scenario import parse_topology_set
    from .simulate import SimulationConfig, simulate
    from .switching import AdtParams, generate_signal

    ts = parse_topology_set(payload["topo_text"], payload["topo_source"])
    if payload.get("mu"):
        ts = TopologySet(ts.topologies, mu=payload["mu"])
    dyn = builtin_dynamics(payload["dyn_name"], payload["dim"], **payload["dyn_params"])
    sol = solve_riccati(dyn.dim, payload["mu_gain"], payload["a"])
    gain = build_gain(sol, payload["g"])
    adt = AdtParams(tau=payload["tau"], n0=payload["n0"], T0=payload["T0"])
    cfg = SimulationConfig(dt=payload["dt"], horizon=payload["horizon"])
    rows = []
    for seed in payload["seeds"]:
        rng = np.random.default_rng(seed)
        init = rng.normal(size=ts.node_count * dyn.dim) * 2.0
        try:
            sig = generate_signal(ts, adt, payload["horizon"], seed)
            traj = simulate(ts, sig, gain, dyn, init, cfg)
            rep = certify_run(traj, ts, sig, gain, sol, payload["ell"], adt, dyn)
            final = float(traj.consensus_error[-1])
            rows.append((payload["g"], payload["tau"], seed,
                         final < payload["converged_tol"], rep.certified, final))
        except Exception:
            rows.append((payload["g"], payload["tau"], seed, False, False, float("nan")))
    return rows


def cmd_sweep(args) -> int:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib

    from .scenario import load_scenario

    sweep_path = Path(args.sweepfile)
    doc = tomllib.loads(sweep_path.read_text())
    base = sweep_path.parent / doc["scenario"]
    sc = load_scenario(base)
    grid = doc["sweep"]
    g_grid = [float(g) for g in grid["g"]]
    tau_grid = [float(t) for t in grid["tau"]]
    seeds = [int(s) for s in grid.get("seeds", [0, 1, 2])]
    workers = int(args.workers or grid.get("workers", 1))

    topo_file = (base.parent / sc.raw["topologies"]["file"]).resolve()
    common = {
        "topo_text": topo_file.read_text(),
        "topo_source": str(topo_file),
        "mu": sc.raw["topologies"].get("mu"),
        "mu_gain": sc.sol.mu,
        "dyn_name": sc.dyn.name,
        "dim": sc.dyn.dim,
        "dyn_params": {
            k: v for k, v in sc.raw["dynamics"].items() if k not in ("name", "dim")
        },
        "a": sc.sol.a,
        "ell": sc.ell,
        "n0": sc.adt.n0,
        "T0": sc.adt.T0,
        "horizon": sc.sim.horizon if sc.sim.horizon is not None else sc.sig.total_duration,
        "dt": sc.sim.dt,
        "seeds": seeds,
        "converged_tol": sc.converged_tol,
    }
    cells = [dict(common, g=g, tau=tau) for g in g_grid for tau in tau_grid]

    rows = []
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            for cell_rows in pool.map(_sweep_cell, cells):
                rows.extend(cell_rows)
    else:
        for cell in cells:
            rows.extend(_sweep_cell(cell))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))

    out = Path(args.out) if args.out else _out_dir(args, sweep_path, None)
    out.mkdir(parents=True, exist_ok=True)
    table = out / "sweep.csv"
    with open(table, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["g", "tau", "seed", "converged", "certified", "final_error"])
        for g, tau, seed, conv, cert, err in rows:
            wr.writerow(
                [format(g, ".17g"), format(tau, ".17g"), seed,
                 int(conv), int(cert), format(err, ".17g")]
            )
    print(f"wrote {len(rows)} rows to {table}")
    return EXIT_OK


def cmd_gen_signal(args) -> int:
    from .scenario import parse_topology_set
    from .switching import AdtParams, generate_signal

    topo_path = Path(args.topologies)
    ts = parse_topology_set(topo_path.read_text(), str(topo_path))
    adt = AdtParams(tau=args.tau, n0=args.n0, T0=args.T0)
    sig = generate_signal(ts, adt, args.horizon, args.seed)
    for idx, dur in sig.intervals:
        label = ts.topologies[idx].label or str(idx)
        print(f"{label} {dur:.17g}")
    return EXIT_OK


def cmd_plot(args) -> int:
    from .report import emit_plot_data

    written = emit_plot_data(Path(args.rundir))
    for path in written:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swconsensus", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate and certify a scenario")
    run.add_argument("scenario")
    run.add_argument("--out", help="output directory")
    run.add_argument("--dt", type=float, help="override integration step")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="validate a scenario without running it")
    val.add_argument("scenario")
    val.set_defaults(func=cmd_validate)

    sw = sub.add_parser("sweep", help="run a (g, tau) grid sweep")
    sw.add_argument("sweepfile")
    sw.add_argument("--out", help="output directory")
    sw.add_argument("--workers", type=int, help="parallel worker count")
    sw.set_defaults(func=cmd_sweep)

    gen = sub.add_parser("gen-signal", help="generate an admissible switching signal")
    gen.add_argument("topologies", help="topology set file")
    gen.add_argument("--tau", type=float, required=True)
    gen.add_argument("--n0", type=int, required=True)
    gen.add_argument("--T0", type=float, required=True)
    gen.add_argument("--horizon", type=float, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(func=cmd_gen_signal)

    plot = sub.add_parser("plot", help="emit gnuplot-ready data from a run directory")
    plot.add_argument("rundir")
    plot.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing file {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
