"""Scenario and topology-set file formats.

Topology sets are plain text: an optional ``mu`` line, then ``topology <label>``
blocks each holding ``nodes <N>`` and ``edge <k> <j> <weight>`` lines (1-based,
weight of the information flow j -> k). When ``mu`` is omitted it defaults to
the smallest nonzero eigenvalue real part across the set.

Scenarios are TOML with sections [topologies], [dynamics], [gain], [signal],
[adt], [simulation], [initial], [convergence]; see the bundled files under
scenarios/ for the schema.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import AgentDynamics, builtin_dynamics
from .graphs import Topology, TopologySet, validate_topology_set
from .riccati import GainDesign, RiccatiSolution, build_gain, find_ell, solve_riccati
from .simulate import SimulationConfig
from .switching import (
    AdtParams,
    SwitchingSignal,
    check_disconnected_bound,
    generate_signal,
    normalize_alternation,
)

__all__ = [
    "ScenarioError",
    "Scenario",
    "parse_topology_set",
    "load_scenario",
    "validate_scenario",
]


class ScenarioError(ValueError):
    pass


def parse_topology_set(text: str, source: str = "<string>") -> TopologySet:
    mu = None
    blocks = []  # (label, nodes, edges)
    label, nodes, edges = None, None, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        where = f"{source}:{lineno}"
        try:
            if parts[0] == "mu":
                mu = float(parts[1])
            elif parts[0] == "topology":
                if label is not None:
                    blocks.append((label, nodes, edges))
                label = parts[1] if len(parts) > 1 else f"topo{len(blocks)}"
                nodes, edges = None, []
            elif parts[0] == "nodes":
                nodes = int(parts[1])
            elif parts[0] == "edge":
                k, j, w = int(parts[1]), int(parts[2]), float(parts[3])
                edges.append((k, j, w))
            else:
                raise ScenarioError(f"{where}: unknown directive {parts[0]!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"{where}: cannot parse {line!r}: {exc}") from exc
    if label is not None:
        blocks.append((label, nodes, edges))
    if not blocks:
        raise ScenarioError(f"{source}: no topology blocks found")

    topologies = []
    for label, nodes, edges in blocks:
        if nodes is None:
            raise ScenarioError(f"{source}: topology {label!r} lacks a nodes line")
        weights = np.zeros((nodes, nodes))
        for k, j, w in edges:
            if not (1 <= k <= nodes and 1 <= j <= nodes):
                raise ScenarioError(
                    f"{source}: edge ({k}, {j}) out of range for topology {label!r}"
                )
            weights[k - 1, j - 1] = w
        topologies.append(Topology(node_count=nodes, weights=weights, label=label))

    if mu is None:
        probe = TopologySet(tuple(topologies), mu=1.0)
        mu = min(s.min_nonzero_real for s in probe.spectra)
        if not np.isfinite(mu):
            raise ScenarioError(
                f"{source}: cannot derive mu, no topology has a nonzero eigenvalue"
            )
    return TopologySet(tuple(topologies), mu=float(mu))


@dataclass
class Scenario:
    ts: TopologySet
    dyn: AgentDynamics
    sol: RiccatiSolution
    gain: GainDesign
    ell: float
    sig: SwitchingSignal
    adt: AdtParams
    sim: SimulationConfig
    init: np.ndarray
    converged_tol: float
    converged_orders: float
    out_dir: str | None
    raw: dict

    def label_of(self, index: int) -> str:
        return self.ts.topologies[index].label or str(index)


def _section(doc: dict, name: str, source: str) -> dict:
    if name not in doc:
        raise ScenarioError(f"{source}: missing [{name}] section")
    return doc[name]


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    source = str(path)

    topo_cfg = _section(doc, "topologies", source)
    if "file" not in topo_cfg:
        raise ScenarioError(f"{source}: [topologies] needs a 'file' entry")
    topo_path = (path.parent / topo_cfg["file"]).resolve()
    ts = parse_topology_set(topo_path.read_text(), str(topo_path))
    if "mu" in topo_cfg:
        ts = TopologySet(ts.topologies, mu=float(topo_cfg["mu"]))

    dyn_cfg = _section(doc, "dynamics", source)
    params = {k: v for k, v in dyn_cfg.items() if k not in ("name", "dim")}
    dyn = builtin_dynamics(dyn_cfg["name"], int(dyn_cfg.get("dim", 2)), **params)

    gain_cfg = _section(doc, "gain", source)
    mu = float(gain_cfg.get("mu", ts.mu))
    a = float(gain_cfg.get("a", 1.0))
    sol = solve_riccati(dyn.dim, mu, a)
    g = float(gain_cfg.get("g", 1.0))
    gain = build_gain(sol, g)
    ell = float(gain_cfg["ell"]) if "ell" in gain_cfg else find_ell(ts, sol)

    adt_cfg = _section(doc, "adt", source)
    adt = AdtParams(
        tau=float(adt_cfg["tau"]), n0=int(adt_cfg["n0"]), T0=float(adt_cfg["T0"])
    )

    sim_cfg = doc.get("simulation", {})
    sim = SimulationConfig(
        dt=float(sim_cfg.get("dt", 1e-3)),
        horizon=float(sim_cfg["horizon"]) if "horizon" in sim_cfg else None,
        record_stride=int(sim_cfg.get("record_stride", 10)),
        divergence_guard=float(sim_cfg.get("divergence_guard", 1e9)),
    )

    sig_cfg = _section(doc, "signal", source)
    if "intervals" in sig_cfg:
        labels = {t.label: i for i, t in enumerate(ts.topologies)}
        raw_pairs = []
        for entry in sig_cfg["intervals"]:
            lab, dur = entry[0], float(entry[1])
            if lab not in labels:
                raise ScenarioError(f"{source}: unknown topology label {lab!r} in signal")
            raw_pairs.append((labels[lab], dur))
        sig = normalize_alternation(raw_pairs, ts)
    elif "generate" in sig_cfg:
        gen = sig_cfg["generate"]
        gen_adt = AdtParams(
            tau=float(gen.get("tau", adt.tau)),
            n0=int(gen.get("n0", adt.n0)),
            T0=float(gen.get("T0", adt.T0)),
        )
        sig = generate_signal(ts, gen_adt, float(gen["horizon"]), int(gen.get("seed", 0)))
    else:
        raise ScenarioError(f"{source}: [signal] needs 'intervals' or 'generate'")

    init_cfg = doc.get("initial", {})
    n_state = ts.node_count * dyn.dim
    if "values" in init_cfg:
        init = np.asarray(init_cfg["values"], dtype=float)
        if init.shape != (n_state,):
            raise ScenarioError(
                f"{source}: initial values must have length {n_state}, got {init.size}"
            )
    else:
        rng = np.random.default_rng(int(init_cfg.get("seed", 0)))
        init = rng.normal(size=n_state) * float(init_cfg.get("scale", 2.0))

    conv = doc.get("convergence", {})
    out = doc.get("output", {})
    return Scenario(
        ts=ts,
        dyn=dyn,
        sol=sol,
        gain=gain,
        ell=ell,
        sig=sig,
        adt=adt,
        sim=sim,
        init=init,
        converged_tol=float(conv.get("threshold", 1e-6)),
        converged_orders=float(conv.get("orders", 6.0)),
        out_dir=out.get("dir"),
        raw=doc,
    )


def validate_scenario(sc: Scenario) -> dict:
    """Composed validators, run before any integration."""
    topo_report = validate_topology_set(sc.ts)
    alternation_ok = True  # normalize_alternation already enforced it
    t0_ok = check_disconnected_bound(sc.sig, sc.adt.T0)
    violations = []
    if not topo_report["valid"]:
        violations.append("topology set invalid (oracle disagreement or mu too large)")
    if not t0_ok:
        violations.append("a disconnected interval exceeds T0")
    return {
        "valid": not violations,
        "violations": violations,
        "topology_report": topo_report,
        "alternation_ok": alternation_ok,
        "disconnected_bound_ok": t0_ok,
    }
