"""Run artifacts: trajectory/certificate CSV + JSON writers and plot-data export."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

__all__ = [
    "write_trajectory_csv",
    "write_switches_csv",
    "write_vtrace_csv",
    "write_json",
    "decay_rate_fit",
    "emit_plot_data",
]


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(path: Path, traj) -> None:
    n, d = traj.n_agents, traj.dim
    header = (
        ["t", "topo"]
        + [f"y_{k+1}" for k in range(n)]
        + ["err"]
        + [f"w_{k+1}_{m+1}" for k in range(n) for m in range(d)]
    )
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for i in range(len(traj.t)):
            row = (
                [_fmt(traj.t[i]), str(int(traj.topo_index[i]))]
                + [_fmt(v) for v in traj.outputs[i]]
                + [_fmt(traj.consensus_error[i])]
                + [_fmt(v) for v in traj.states[i]]
            )
            wr.writerow(row)


def write_switches_csv(path: Path, traj) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "from", "to"])
        for ev in traj.switch_events:
            wr.writerow([_fmt(ev.t), str(ev.from_index), str(ev.to_index)])


def write_vtrace_csv(path: Path, report) -> None:
    tr = report.trace
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "V", "W", "sigma_clock", "active_topo", "phase"])
        for i in range(len(tr["t"])):
            wr.writerow(
                [
                    _fmt(tr["t"][i]),
                    _fmt(tr["V"][i]),
                    _fmt(tr["W"][i]),
                    _fmt(tr["clock"][i]),
                    str(int(tr["topo"][i])),
                    str(tr["phase"][i]),
                ]
            )


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_json_safe(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def decay_rate_fit(t: np.ndarray, err: np.ndarray) -> float:
    """Slope of log(err) over informative samples; nan when not enough data."""
    if len(t) < 3:
        return float("nan")
    floor = max(err.max() * 1e-12, 1e-300)
    mask = err > floor
    if mask.sum() < 3:
        return float("nan")
    slope = np.polyfit(t[mask], np.log(err[mask]), 1)[0]
    return float(slope)


def emit_plot_data(run_dir: Path) -> list:
    """Gnuplot-ready whitespace-separated files from a finished run directory."""
    run_dir = Path(run_dir)
    traj_path = run_dir / "trajectory.csv"
    vtrace_path = run_dir / "vtrace.csv"
    if not traj_path.exists():
        raise FileNotFoundError(traj_path)
    written = []

    with open(traj_path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    n_outputs = sum(1 for h in header if h.startswith("y_"))
    err_col = header.index("err")

    out = run_dir / "outputs.dat"
    with open(out, "w") as fh:
        fh.write("# t " + " ".join(f"y_{k+1}" for k in range(n_outputs)) + "\n")
        for row in data:
            fh.write(" ".join([row[0]] + row[2 : 2 + n_outputs]) + "\n")
    written.append(out)

    out = run_dir / "error.dat"
    with open(out, "w") as fh:
        fh.write("# t err log10_err\n")
        for row in data:
            err = float(row[err_col])
            log10 = math.log10(err) if err > 0 else float("-inf")
            fh.write(f"{row[0]} {row[err_col]} {log10:.17g}\n")
    written.append(out)

    if vtrace_path.exists():
        with open(vtrace_path, newline="") as fh:
            vrows = list(csv.reader(fh))[1:]
        out = run_dir / "vw.dat"
        with open(out, "w") as fh:
            fh.write("# t V W sigma_clock active_topo phase\n")
            for row in vrows:
                fh.write(" ".join(row) + "\n")
        written.append(out)

    sw_path = run_dir / "switches.csv"
    if sw_path.exists():
        with open(sw_path, newline="") as fh:
            srows = list(csv.reader(fh))[1:]
        out = run_dir / "switches.dat"
        with open(out, "w") as fh:
            fh.write("# t from to\n")
            for row in srows:
                fh.write(" ".join(row) + "\n")
        written.append(out)
    return written
