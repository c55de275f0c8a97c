"""Alternating connected/disconnected switching signals and average dwell-time checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import TopologySet

__all__ = [
    "SwitchingSignal",
    "AdtParams",
    "SignalError",
    "normalize_alternation",
    "check_alternation",
    "check_disconnected_bound",
    "check_adt",
    "tightest_adt",
    "generate_signal",
]


class SignalError(ValueError):
    pass


@dataclass(frozen=True)
class SwitchingSignal:
    """Ordered (topology_index, duration) pairs.

    1-based position: odd entries reference connected topologies, even entries
    disconnected ones. Zero-length intervals are allowed.
    """

    intervals: tuple  # of (int, float)

    def __post_init__(self):
        iv = tuple((int(i), float(dur)) for i, dur in self.intervals)
        object.__setattr__(self, "intervals", iv)
        if any(dur < 0 for _, dur in iv):
            raise SignalError("durations must be >= 0")

    def connected_durations(self) -> np.ndarray:
        return np.array([dur for p, (_, dur) in enumerate(self.intervals) if p % 2 == 0])

    def disconnected_durations(self) -> np.ndarray:
        return np.array([dur for p, (_, dur) in enumerate(self.intervals) if p % 2 == 1])

    @property
    def total_duration(self) -> float:
        return float(sum(dur for _, dur in self.intervals))


@dataclass(frozen=True)
class AdtParams:
    tau: float
    n0: int
    T0: float

    def __post_init__(self):
        if self.tau < 0:
            raise SignalError("tau must be >= 0")
        if self.n0 < 1:
            raise SignalError("n0 must be >= 1")
        if self.T0 <= 0:
            raise SignalError("T0 must be positive")


def check_alternation(sig: SwitchingSignal, ts: TopologySet) -> bool:
    """Odd positions connected, even positions disconnected (1-based)."""
    conn = set(ts.connected_indices)
    disc = set(ts.disconnected_indices)
    for pos, (idx, _) in enumerate(sig.intervals):
        if idx < 0 or idx >= len(ts.topologies):
            return False
        if pos % 2 == 0 and idx not in conn:
            return False
        if pos % 2 == 1 and idx not in disc:
            return False
    return True


def normalize_alternation(raw, ts: TopologySet) -> SwitchingSignal:
    """Insert zero-length separators of the opposite class so the signal alternates.

    Same-class consecutive entries get a zero-length separator (first topology
    of the needed class); a sequence starting disconnected gets a leading
    zero-length connected interval.
    """
    conn = set(ts.connected_indices)
    for idx, _ in raw:
        if idx < 0 or idx >= len(ts.topologies):
            raise SignalError(f"topology index {idx} out of range")

    def separator(need_connected: bool) -> tuple:
        pool = ts.connected_indices if need_connected else ts.disconnected_indices
        if not pool:
            kind = "connected" if need_connected else "disconnected"
            raise SignalError(f"topology set has no {kind} topology for a separator")
        return (pool[0], 0.0)

    out = []
    for idx, dur in raw:
        want_connected = len(out) % 2 == 0
        is_connected = idx in conn
        if is_connected != want_connected:
            out.append(separator(want_connected))
        out.append((idx, float(dur)))
    return SwitchingSignal(tuple(out))


def check_disconnected_bound(sig: SwitchingSignal, T0: float) -> bool:
    """Every disconnected interval no longer than T0 (boundary inclusive)."""
    disc = sig.disconnected_durations()
    return bool(disc.size == 0 or disc.max() <= T0)


def check_adt(sig: SwitchingSignal, tau: float, n0: int) -> bool:
    """Average dwell-time condition over every window of connected intervals.

    For all windows of q = n+1 consecutive connected durations the sum must be
    >= tau * (n - n0). O(#windows) via prefix sums; the exhaustive double loop
    lives in the test suite as the oracle.
    """
    c = sig.connected_durations()
    m = c.size
    if m == 0 or tau == 0.0:
        return True
    prefix = np.concatenate(([0.0], np.cumsum(c)))
    # condition: (prefix[e] - tau*e) - (prefix[s] - tau*s) + tau*(n0+1) >= 0 for all s < e
    gvals = prefix - tau * np.arange(m + 1)
    run_max = -np.inf
    slack = tau * (n0 + 1)
    # rounding slack so the condition holds exactly at tau = tightest_adt(sig, n0)
    tol = 1e-12 * (1.0 + prefix[-1] + tau * (m + n0))
    for e in range(1, m + 1):
        run_max = max(run_max, gvals[e - 1])
        if gvals[e] - run_max + slack < -tol:
            return False
    return True


def tightest_adt(sig: SwitchingSignal, n0: int) -> float:
    """Largest tau the signal satisfies: min over windows with n > n0 of sum/(n-n0)."""
    c = sig.connected_durations()
    m = c.size
    prefix = np.concatenate(([0.0], np.cumsum(c)))
    best = float("inf")
    for s in range(m):
        for e in range(s + 1, m + 1):
            n = e - s - 1  # window of n+1 connected intervals
            if n > n0:
                best = min(best, (prefix[e] - prefix[s]) / (n - n0))
    return best


def generate_signal(
    ts: TopologySet, params: AdtParams, horizon: float, seed: int
) -> SwitchingSignal:
    """Seeded sampler of admissible signals covering at least the given horizon.

    Connected durations uniform in [tau, 2 tau], disconnected in [0, T0]; up to
    n0 - 1 zero-length connected intervals are injected to exercise the slack.
    """
    if not ts.connected_indices or not ts.disconnected_indices:
        raise SignalError("need at least one connected and one disconnected topology")
    rng = np.random.default_rng(seed)
    intervals = []
    total = 0.0
    while total < horizon:
        c_idx = int(rng.choice(ts.connected_indices))
        c_dur = float(rng.uniform(params.tau, 2 * params.tau))
        intervals.append((c_idx, c_dur))
        total += c_dur
        d_idx = int(rng.choice(ts.disconnected_indices))
        d_dur = float(rng.uniform(0.0, params.T0))
        intervals.append((d_idx, d_dur))
        total += d_dur
        if params.tau == 0.0 and total == 0.0 and horizon > 0.0:
            raise SignalError("cannot cover a positive horizon with tau=0 and T0=0")
    n_zero = int(rng.integers(0, params.n0)) if params.n0 > 1 else 0
    for _ in range(n_zero):
        # splice a zero-length connected interval plus a zero-length disconnected
        # separator right after a random disconnected interval
        pos = int(rng.integers(0, len(intervals) // 2)) * 2 + 1
        c_idx = int(rng.choice(ts.connected_indices))
        d_idx = int(rng.choice(ts.disconnected_indices))
        intervals[pos + 1 : pos + 1] = [(c_idx, 0.0), (d_idx, 0.0)]
    sig = SwitchingSignal(tuple(intervals))
    if not (
        check_alternation(sig, ts)
        and check_adt(sig, params.tau, params.n0)
        and check_disconnected_bound(sig, params.T0)
    ):
        raise SignalError("generated signal failed validation")  # pragma: no cover
    return sig
