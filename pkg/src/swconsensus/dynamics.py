"""Homogeneous nonlinear agent in prime form: w' = S w + B phi(w) + u, y = w_1."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "AgentDynamics",
    "DynamicsError",
    "shift_matrix",
    "drift",
    "output",
    "builtin_dynamics",
    "BUILTIN_NAMES",
]

# phi kinds the accelerated integrator kernels understand; a custom callable
# gets PHI_CUSTOM and forces the pure-numpy path.
PHI_ZERO = 0
PHI_BOUNDED_SINE = 1
PHI_SATURATED_DAMPING = 2
PHI_CUSTOM = -1

BUILTIN_NAMES = ("zero_phi", "bounded_sine", "saturated_damping")


class DynamicsError(ValueError):
    pass


def shift_matrix(dim: int) -> np.ndarray:
    return np.diag(np.ones(dim - 1), 1) if dim > 1 else np.zeros((1, 1))


@dataclass(frozen=True)
class AgentDynamics:
    """Prime-form triplet (S, B, C) plus a bounded globally Lipschitz nonlinearity.

    S, B, C are fixed by dim: shift matrix, last basis vector, first basis covector.
    """

    dim: int
    phi: Callable[[np.ndarray], float]
    phi_bound: float
    phi_lipschitz: float
    name: str = "custom"
    phi_kind: int = PHI_CUSTOM
    phi_params: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.dim < 1:
            raise DynamicsError("dim must be >= 1")
        if self.phi_bound <= 0:
            raise DynamicsError("phi_bound must be positive")
        if self.phi_lipschitz < 0:
            raise DynamicsError("phi_lipschitz must be >= 0")
        object.__setattr__(self, "phi_params", np.asarray(self.phi_params, dtype=float))

    @property
    def S(self) -> np.ndarray:
        return shift_matrix(self.dim)

    @property
    def B(self) -> np.ndarray:
        b = np.zeros(self.dim)
        b[-1] = 1.0
        return b

    @property
    def C(self) -> np.ndarray:
        c = np.zeros(self.dim)
        c[0] = 1.0
        return c


def drift(dyn: AgentDynamics, w: np.ndarray, u=0.0) -> np.ndarray:
    """S w + B phi(w) + u, with u broadcast as a full d-vector."""
    w = np.asarray(w, dtype=float)
    if w.shape != (dyn.dim,):
        raise DynamicsError(f"state must have shape ({dyn.dim},), got {w.shape}")
    p = float(dyn.phi(w))
    if not np.isfinite(p):
        raise DynamicsError("phi returned a non-finite value")
    out = dyn.S @ w
    out[-1] += p
    u = np.asarray(u, dtype=float)
    if u.ndim and u.shape != (dyn.dim,):
        raise DynamicsError(f"input must be scalar or shape ({dyn.dim},)")
    return out + u


def output(dyn: AgentDynamics, w: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    if w.shape != (dyn.dim,):
        raise DynamicsError(f"state must have shape ({dyn.dim},), got {w.shape}")
    return float(w[0])


def builtin_dynamics(name: str, dim: int, **params) -> AgentDynamics:
    """Library of example agents with documented bounds.

    zero_phi            phi = 0
    bounded_sine        phi(w) = alpha * sin(w_1),            bound alpha
    saturated_damping   phi(w) = -beta*tanh(w_1) - gamma*tanh(w_d), bound beta+gamma
    """
    if name == "zero_phi":
        if params:
            raise DynamicsError(f"zero_phi takes no parameters, got {params}")
        return AgentDynamics(
            dim=dim,
            phi=lambda w: 0.0,
            phi_bound=1.0,  # any positive constant dominates |phi| = 0
            phi_lipschitz=0.0,
            name=name,
            phi_kind=PHI_ZERO,
        )
    if name == "bounded_sine":
        alpha = float(params.pop("alpha", 1.0))
        if params:
            raise DynamicsError(f"unknown bounded_sine parameters {params}")
        if alpha <= 0:
            raise DynamicsError("alpha must be positive")
        return AgentDynamics(
            dim=dim,
            phi=lambda w: alpha * np.sin(w[0]),
            phi_bound=alpha,
            phi_lipschitz=alpha,
            name=name,
            phi_kind=PHI_BOUNDED_SINE,
            phi_params=np.array([alpha]),
        )
    if name == "saturated_damping":
        beta = float(params.pop("beta", 1.0))
        gamma = float(params.pop("gamma", 1.0))
        if params:
            raise DynamicsError(f"unknown saturated_damping parameters {params}")
        if beta <= 0 or gamma <= 0:
            raise DynamicsError("beta and gamma must be positive")
        return AgentDynamics(
            dim=dim,
            phi=lambda w: -beta * np.tanh(w[0]) - gamma * np.tanh(w[-1]),
            phi_bound=beta + gamma,
            phi_lipschitz=beta + gamma,
            name=name,
            phi_kind=PHI_SATURATED_DAMPING,
            phi_params=np.array([beta, gamma]),
        )
    raise DynamicsError(f"unknown dynamics name {name!r}; choose from {BUILTIN_NAMES}")
