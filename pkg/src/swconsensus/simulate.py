"""Closed-loop network integration across a switching signal."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dynamics import AgentDynamics, drift
from .graphs import TopologySet
from .riccati import GainDesign
from .switching import SwitchingSignal

__all__ = [
    "SimulationConfig",
    "SwitchEvent",
    "Trajectory",
    "DivergenceError",
    "system_matrix",
    "coupling_input",
    "closed_loop_field",
    "consensus_error",
    "simulate",
]


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 1e-3
    horizon: float | None = None     # None: run the whole signal
    record_stride: int = 10
    divergence_guard: float = 1e9

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.horizon is not None and self.horizon < 0:
            raise ValueError("horizon must be >= 0")


@dataclass(frozen=True)
class SwitchEvent:
    t: float
    from_index: int
    to_index: int
    state: np.ndarray


@dataclass
class Trajectory:
    t: np.ndarray                  # (ns,)
    states: np.ndarray             # (ns, N*d)
    topo_index: np.ndarray         # (ns,) active topology at each sample
    outputs: np.ndarray            # (ns, N)
    consensus_error: np.ndarray    # (ns,)
    switch_events: list = field(default_factory=list)
    diverged: bool = False
    n_agents: int = 0
    dim: int = 0


def system_matrix(ts: TopologySet, i: int, gain: GainDesign, dyn: AgentDynamics) -> np.ndarray:
    """(I (x) S) - (L_i (x) D_g K0 C) for the stacked state."""
    d = dyn.dim
    DgK0C = np.zeros((d, d))
    DgK0C[:, 0] = gain.K
    return np.kron(np.eye(ts.node_count), dyn.S) - np.kron(ts.laplacians[i].matrix, DgK0C)


def coupling_input(
    ts: TopologySet, i: int, gain: GainDesign, dyn: AgentDynamics, w_stack: np.ndarray
) -> np.ndarray:
    """Per-agent inputs u_k = K * sum_j a_kj (y_j - y_k); shape (N, d)."""
    n, d = ts.node_count, dyn.dim
    w = np.asarray(w_stack, dtype=float).reshape(n, d)
    y = w[:, 0]
    a = ts.topologies[i].weights
    nu = a @ y - a.sum(axis=1) * y
    return np.outer(nu, gain.K)


def _phi_stack(dyn: AgentDynamics, w: np.ndarray) -> np.ndarray:
    return np.array([float(dyn.phi(row)) for row in w])


def closed_loop_field(
    ts: TopologySet, i: int, gain: GainDesign, dyn: AgentDynamics, w_stack: np.ndarray
) -> np.ndarray:
    n, d = ts.node_count, dyn.dim
    w_stack = np.asarray(w_stack, dtype=float)
    out = system_matrix(ts, i, gain, dyn) @ w_stack
    out[d - 1 :: d] += _phi_stack(dyn, w_stack.reshape(n, d))
    if not np.all(np.isfinite(out)):
        raise DivergenceError("non-finite closed-loop field")
    return out


def consensus_error(w_stack: np.ndarray, dyn: AgentDynamics) -> float:
    """Output disagreement diameter: max pairwise |y_k - y_j|."""
    y = np.asarray(w_stack, dtype=float).reshape(-1, dyn.dim)[:, 0]
    return float(y.max() - y.min())


def simulate(
    ts: TopologySet,
    sig: SwitchingSignal,
    gain: GainDesign,
    dyn: AgentDynamics,
    init: np.ndarray,
    cfg: SimulationConfig,
) -> Trajectory:
    """Fixed-step RK4 across the signal; steps never straddle a switch.

    Each interval is split into floor(dur/dt) full steps plus one shortened
    remainder step; the state is continuous across switches. Samples are taken
    every record_stride steps and at each interval end; both-sided topology
    info at switches lives in switch_events.
    """
    n, d = ts.node_count, dyn.dim
    w = np.asarray(init, dtype=float).copy()
    if w.shape != (n * d,):
        raise ValueError(f"initial state must have shape ({n * d},)")
    if not np.all(np.isfinite(w)):
        raise ValueError("initial state must be finite")

    matrices = {}

    def mat(i):
        if i not in matrices:
            matrices[i] = system_matrix(ts, i, gain, dyn)
        return matrices[i]

    horizon = cfg.horizon if cfg.horizon is not None else sig.total_duration
    t = 0.0
    remaining = horizon
    first_topo = sig.intervals[0][0] if sig.intervals else 0
    times, states, topos = [0.0], [w.copy()], [first_topo]
    events = []
    diverged = False
    prev_idx = None

    for idx, dur in sig.intervals:
        if prev_idx is not None and remaining <= 0:
            break
        if prev_idx is not None:
            events.append(SwitchEvent(t=t, from_index=prev_idx, to_index=idx, state=w.copy()))
        prev_idx = idx

        dur_eff = min(dur, remaining)
        remaining -= dur_eff
        if dur_eff > 0:
            nfull = int(np.floor(dur_eff / cfg.dt + 1e-9))
            rem = dur_eff - nfull * cfg.dt
            if rem < 1e-12 * max(dur_eff, 1.0):
                rem = 0.0
            chunk = _kernels.rk4_run(
                mat(idx), w, cfg.dt, nfull, d, dyn.phi_kind, dyn.phi_params, dyn.phi
            )
            if rem > 0.0:
                tail = _kernels.rk4_run(
                    mat(idx), chunk[-1], rem, 1, d, dyn.phi_kind, dyn.phi_params, dyn.phi
                )
                chunk = np.vstack([chunk, tail[1:]])
            w = chunk[-1].copy()
            # sample every record_stride steps within the interval, plus the end
            local = list(range(cfg.record_stride, nfull + 1, cfg.record_stride))
            if not local or local[-1] != chunk.shape[0] - 1:
                local.append(chunk.shape[0] - 1)
            for s in local:
                ts_local = t + (s * cfg.dt if s <= nfull else dur_eff)
                times.append(ts_local)
                states.append(chunk[s].copy())
                topos.append(idx)
            t += dur_eff
            if not np.all(np.isfinite(w)) or np.abs(w).max() > cfg.divergence_guard:
                diverged = True
                break

    topo_arr = np.array(topos, dtype=int)
    t_arr = np.array(times)
    st_arr = np.array(states)
    y = st_arr[:, 0::d]
    err = y.max(axis=1) - y.min(axis=1)
    return Trajectory(
        t=t_arr,
        states=st_arr,
        topo_index=topo_arr,
        outputs=y,
        consensus_error=err,
        switch_events=events,
        diverged=diverged,
        n_agents=n,
        dim=d,
    )
