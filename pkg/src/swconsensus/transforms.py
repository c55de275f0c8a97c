"""Disagreement coordinates: per-topology similarity transforms and the Lyapunov form.

For each Laplacian L the matrix M = L[1:, 1:] - 1 * L[0, 1:] is block-decoupled
with an ordered real Schur decomposition (zero-spectrum block first) followed by
a Sylvester solve, replacing an exact Jordan form. T = [[1, 0], [Upsilon]] with
Upsilon = [1 | J] then gives T^{-1} L T = [[0, L_12], [0, L_22]] with
L_22 = blkdiag(L_nc, L_c).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .graphs import Laplacian, SpectralInfo, spectral_analysis
from .riccati import GainDesign, RiccatiSolution

__all__ = [
    "TopologyTransform",
    "TransformError",
    "build_transform",
    "to_transformed",
    "from_transformed",
    "jump_map",
    "evaluate_V",
    "lyapunov_weight",
    "v_extremal_eigs",
    "upsilon_bar",
]


class TransformError(RuntimeError):
    pass


@dataclass(frozen=True)
class TopologyTransform:
    T: np.ndarray
    T_inv: np.ndarray
    J: np.ndarray
    J_inv: np.ndarray
    L_12: np.ndarray
    L_22: np.ndarray
    L_nc: np.ndarray     # zero-real-part block, dimension rho - 1
    L_c: np.ndarray      # positive-real-part block

    @property
    def node_count(self) -> int:
        return self.T.shape[0]

    @property
    def Upsilon(self) -> np.ndarray:
        return self.T[1:, :]

    @property
    def Upsilon_inv(self) -> np.ndarray:
        return self.T_inv[1:, :]


def build_transform(lap: Laplacian, spec: SpectralInfo | None = None) -> TopologyTransform:
    L = lap.matrix
    n = L.shape[0]
    if n < 2:
        raise TransformError("transform needs at least two agents")
    if spec is None:
        spec = spectral_analysis(lap)
    tol = spec.zero_tol
    M = L[1:, 1:] - np.outer(np.ones(n - 1), L[0, 1:])

    R, Q, sdim = scipy.linalg.schur(
        M, output="real", sort=lambda re, im: np.hypot(re, im) < tol
    )
    k = int(sdim)  # dimension of the zero-spectrum block (rho - 1)
    if k != spec.zero_multiplicity - 1:
        raise TransformError(
            f"Schur ordering found {k} zero-spectrum directions, expected "
            f"{spec.zero_multiplicity - 1}; zero tolerance likely misconfigured"
        )
    if k == 0 or k == n - 1:
        J = Q
        J_inv = Q.T
        L_22 = R
    else:
        A11, A12, A22 = R[:k, :k], R[:k, k:], R[k:, k:]
        try:
            X = scipy.linalg.solve_sylvester(A11, -A22, -A12)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise TransformError(
                "Sylvester decoupling failed; zero/nonzero spectra overlap "
                "(check the zero tolerance)"
            ) from exc
        Z = np.eye(n - 1)
        Z[:k, k:] = X
        Z_inv = np.eye(n - 1)
        Z_inv[:k, k:] = -X
        J = Q @ Z
        J_inv = Z_inv @ Q.T
        L_22 = np.zeros((n - 1, n - 1))
        L_22[:k, :k] = A11
        L_22[k:, k:] = A22
    L_nc = L_22[:k, :k]
    L_c = L_22[k:, k:]

    ones = np.ones(n - 1)
    T = np.zeros((n, n))
    T[0, 0] = 1.0
    T[1:, 0] = ones
    T[1:, 1:] = J
    T_inv = np.zeros((n, n))
    T_inv[0, 0] = 1.0
    T_inv[1:, 0] = -J_inv @ ones
    T_inv[1:, 1:] = J_inv

    tr = TopologyTransform(
        T=T, T_inv=T_inv, J=J, J_inv=J_inv,
        L_12=L[0, 1:] @ J, L_22=L_22, L_nc=L_nc, L_c=L_c,
    )
    _check_transform(tr, L)
    return tr


def _check_transform(tr: TopologyTransform, L: np.ndarray) -> None:
    n = L.shape[0]
    if np.abs(tr.T @ tr.T_inv - np.eye(n)).max() > 1e-10:
        raise TransformError("T * T^{-1} deviates from identity")
    Lt = tr.T_inv @ L @ tr.T
    scale = max(np.abs(L).max(), 1.0)
    if np.abs(Lt[1:, 0]).max() > 1e-8 * scale or abs(Lt[0, 0]) > 1e-8 * scale:
        raise TransformError("transformed Laplacian lacks the zero first column")


def _dg_powers(dim: int, g: float) -> np.ndarray:
    return g ** np.arange(1, dim + 1)


def to_transformed(tr: TopologyTransform, gain: GainDesign, w_stack: np.ndarray):
    """w -> (z1, zeta): z1 = w_1, z = (Upsilon^{-1} (x) I_d) w, zeta = (I (x) D_g^{-1}) z."""
    n = tr.node_count
    d = gain.K0.shape[0]
    w = np.asarray(w_stack, dtype=float).reshape(n, d)
    z1 = w[0].copy()
    z = tr.Upsilon_inv @ w          # (n-1, d)
    zeta = z / _dg_powers(d, gain.g)
    return z1, zeta.ravel()


def from_transformed(
    tr: TopologyTransform, gain: GainDesign, zeta: np.ndarray, z1: np.ndarray | None = None
) -> np.ndarray:
    n = tr.node_count
    d = gain.K0.shape[0]
    if z1 is None:
        z1 = np.zeros(d)
    z = np.asarray(zeta, dtype=float).reshape(n - 1, d) * _dg_powers(d, gain.g)
    w = np.empty((n, d))
    w[0] = z1
    w[1:] = np.outer(np.ones(n - 1), z1) + tr.J @ z
    return w.ravel()


def jump_map(
    tr_from: TopologyTransform, tr_to: TopologyTransform, gain: GainDesign, zeta: np.ndarray
) -> np.ndarray:
    """zeta+ = (J_to^{-1} J_from (x) I_d) zeta; D_g conjugation cancels."""
    n = tr_from.node_count
    d = gain.K0.shape[0]
    z = np.asarray(zeta, dtype=float).reshape(n - 1, d)
    return (tr_to.J_inv @ tr_from.J @ z).ravel()


def lyapunov_weight(n_agents: int, sol: RiccatiSolution, ell: float) -> np.ndarray:
    """Q = D(ell) (x) P^{-1} with D(ell) = diag(1, ell, ..., ell^{n_agents-2})."""
    if ell <= 0:
        raise ValueError("ell must be positive")
    D = np.diag(ell ** np.arange(n_agents - 1, dtype=float))
    return np.kron(D, np.linalg.inv(sol.P))


def v_extremal_eigs(n_agents: int, sol: RiccatiSolution, ell: float):
    """(lambda_under, lambda_bar) with lambda_under |zeta|^2 <= V <= lambda_bar |zeta|^2."""
    p_eigs = np.linalg.eigvalsh(np.linalg.inv(sol.P))
    d_entries = ell ** np.arange(n_agents - 1, dtype=float)
    return (
        float(d_entries.min() * p_eigs.min()),
        float(d_entries.max() * p_eigs.max()),
    )


def evaluate_V(sol: RiccatiSolution, ell: float, zeta: np.ndarray, n_agents: int | None = None) -> float:
    zeta = np.asarray(zeta, dtype=float)
    d = sol.dim
    if n_agents is None:
        if zeta.size % d:
            raise ValueError("zeta length is not a multiple of the agent dimension")
        n_agents = zeta.size // d + 1
    Q = lyapunov_weight(n_agents, sol, ell)
    return float(zeta @ Q @ zeta)


def upsilon_bar(transforms, dim: int) -> float:
    """Max spectral norm of J_j^{-1} J_i over all ordered topology pairs.

    Kron with I_d leaves the spectral norm unchanged, so dim only documents intent.
    """
    best = 0.0
    for ti in transforms:
        for tj in transforms:
            best = max(best, float(np.linalg.norm(tj.J_inv @ ti.J, 2)))
    return best
