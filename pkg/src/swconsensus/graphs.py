"""Weighted directed communication topologies, Laplacians, and spectral connectivity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Topology",
    "Laplacian",
    "SpectralInfo",
    "TopologySet",
    "GraphError",
    "SpectralError",
    "build_laplacian",
    "spectral_analysis",
    "check_connected_reachability",
    "validate_topology_set",
]


class GraphError(ValueError):
    """Invalid topology data (negative weights, self-loops, bad dimensions)."""


class SpectralError(RuntimeError):
    """Eigen-solver failure during spectral analysis."""


@dataclass(frozen=True)
class Topology:
    """Directed graph on node_count nodes; weights[k, j] > 0 means info flows j -> k."""

    node_count: int
    weights: np.ndarray
    label: str = ""

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if self.node_count < 1:
            raise GraphError("node_count must be a positive integer")
        if w.shape != (self.node_count, self.node_count):
            raise GraphError(
                f"weights must be {self.node_count}x{self.node_count}, got {w.shape}"
            )
        if not np.all(np.isfinite(w)):
            raise GraphError("weights must be finite")
        if np.any(w < 0):
            raise GraphError("weights must be non-negative")
        if np.any(np.diag(w) != 0):
            raise GraphError("self-loops are not allowed (diagonal must be zero)")


@dataclass(frozen=True)
class Laplacian:
    """Zero-row-sum matrix with non-positive off-diagonal entries."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        n = m.shape[0]
        if m.shape != (n, n):
            raise GraphError("Laplacian must be square")
        tol = 1e-12 * n * max(np.abs(m).max(), 1.0)
        if np.abs(m.sum(axis=1)).max() > tol:
            raise GraphError("Laplacian row sums must be zero")
        off = m - np.diag(np.diag(m))
        if np.any(off > tol) or np.any(np.diag(m) < -tol):
            raise GraphError("Laplacian must have the Metzler sign pattern")

    @property
    def node_count(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectralInfo:
    eigenvalues: np.ndarray          # sorted by (Re, Im)
    zero_multiplicity: int
    is_connected: bool
    min_nonzero_real: float          # +inf when every eigenvalue is zero
    zero_tol: float


@dataclass(frozen=True)
class TopologySet:
    """Finite set of topologies with the lower bound mu on nonzero eigenvalue real parts."""

    topologies: tuple
    mu: float
    laplacians: tuple = field(default=None)
    spectra: tuple = field(default=None)
    connected_indices: tuple = field(default=None)
    disconnected_indices: tuple = field(default=None)

    def __post_init__(self):
        if self.mu <= 0:
            raise GraphError("mu must be positive")
        if not self.topologies:
            raise GraphError("TopologySet needs at least one topology")
        n = self.topologies[0].node_count
        if any(t.node_count != n for t in self.topologies):
            raise GraphError("all topologies must share the same node count")
        laps = tuple(build_laplacian(t) for t in self.topologies)
        specs = tuple(spectral_analysis(lap) for lap in laps)
        object.__setattr__(self, "laplacians", laps)
        object.__setattr__(self, "spectra", specs)
        object.__setattr__(
            self,
            "connected_indices",
            tuple(i for i, s in enumerate(specs) if s.is_connected),
        )
        object.__setattr__(
            self,
            "disconnected_indices",
            tuple(i for i, s in enumerate(specs) if not s.is_connected),
        )

    @property
    def node_count(self) -> int:
        return self.topologies[0].node_count


def build_laplacian(topo: Topology) -> Laplacian:
    """L[k, j] = -a_kj off the diagonal, row-sum of weights on it."""
    w = topo.weights
    lap = -w + np.diag(w.sum(axis=1))
    return Laplacian(lap)


def _default_zero_tol(matrix: np.ndarray) -> float:
    # relative to the 1-norm; tiny absolute floor so the zero matrix classifies as all-zero
    return 1e-9 * np.linalg.norm(matrix, 1) + 1e-30


def spectral_analysis(lap: Laplacian, zero_tol: float | None = None) -> SpectralInfo:
    """Eigenvalues sorted by real part (ties by imaginary part) and connectivity class."""
    m = lap.matrix
    if zero_tol is None:
        zero_tol = _default_zero_tol(m)
    if zero_tol <= 0:
        raise ValueError("zero_tol must be positive")
    try:
        eig = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - hard to trigger
        raise SpectralError(f"eigenvalue computation failed: {exc}") from exc
    order = np.lexsort((eig.imag, eig.real))
    eig = eig[order]
    zero_mask = np.abs(eig) < zero_tol
    rho = int(zero_mask.sum())
    nonzero_re = eig.real[~zero_mask]
    min_nonzero = float(nonzero_re.min()) if nonzero_re.size else float("inf")
    return SpectralInfo(
        eigenvalues=eig,
        zero_multiplicity=rho,
        is_connected=(rho == 1),
        min_nonzero_real=min_nonzero,
        zero_tol=float(zero_tol),
    )


def check_connected_reachability(topo: Topology) -> bool:
    """True iff some root node reaches all others following the information flow.

    weights[k, j] > 0 is a flow j -> k, so node j reaches node k along that edge.
    Independent graph-theoretic oracle for SpectralInfo.is_connected.
    """
    n = topo.node_count
    adj = topo.weights > 0  # adj[k, j]: edge j -> k
    for root in range(n):
        seen = np.zeros(n, dtype=bool)
        seen[root] = True
        stack = [root]
        while stack:
            j = stack.pop()
            for k in np.nonzero(adj[:, j])[0]:
                if not seen[k]:
                    seen[k] = True
                    stack.append(int(k))
        if seen.all():
            return True
    return False


def validate_topology_set(ts: TopologySet) -> dict:
    """Cross-check both connectivity oracles and the mu lower bound for every topology."""
    entries = []
    ok = True
    for i, (topo, spec) in enumerate(zip(ts.topologies, ts.spectra)):
        reach = check_connected_reachability(topo)
        agree = reach == spec.is_connected
        mu_ok = ts.mu <= spec.min_nonzero_real
        ok = ok and agree and mu_ok
        entries.append(
            {
                "index": i,
                "label": topo.label,
                "spectral_connected": spec.is_connected,
                "reachability_connected": reach,
                "oracles_agree": agree,
                "zero_multiplicity": spec.zero_multiplicity,
                "min_nonzero_real": spec.min_nonzero_real,
                "mu_ok": mu_ok,
            }
        )
    return {"valid": ok, "mu": ts.mu, "topologies": entries}
