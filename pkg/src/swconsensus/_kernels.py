"""Hot RK4 integration kernels: numba-jitted with a pure-numpy fallback.

The backend is picked once per call chain: set SWCONSENSUS_DISABLE_NUMBA=1 to
force the numpy path (also used automatically when numba is unavailable or the
nonlinearity is a custom Python callable the jitted kernel cannot evaluate).
"""

from __future__ import annotations

import os

import numpy as np

from .dynamics import PHI_BOUNDED_SINE, PHI_SATURATED_DAMPING, PHI_ZERO

__all__ = ["rk4_run", "active_backend", "numba_available"]

_DISABLE_ENV = "SWCONSENSUS_DISABLE_NUMBA"

try:
    if os.environ.get(_DISABLE_ENV, "").strip() not in ("", "0"):
        raise ImportError("numba disabled by environment flag")
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - environment dependent
    _HAVE_NUMBA = False


def numba_available() -> bool:
    return _HAVE_NUMBA


def active_backend(kind: int) -> str:
    if not _HAVE_NUMBA or kind < 0:
        return "numpy"
    return "numba"


# ---------------------------------------------------------------------------
# numpy path

def _phi_values_numpy(w, d, kind, params, custom_phi):
    """Per-agent phi values for a stacked state; w has shape (n_agents, d)."""
    if kind == PHI_ZERO:
        return np.zeros(w.shape[0])
    if kind == PHI_BOUNDED_SINE:
        return params[0] * np.sin(w[:, 0])
    if kind == PHI_SATURATED_DAMPING:
        return -params[0] * np.tanh(w[:, 0]) - params[1] * np.tanh(w[:, -1])
    return np.array([custom_phi(row) for row in w])


def _rhs_numpy(A, w, d, kind, params, custom_phi):
    out = A @ w
    out[d - 1 :: d] += _phi_values_numpy(w.reshape(-1, d), d, kind, params, custom_phi)
    return out


def _rk4_run_numpy(A, w0, dt, nsteps, d, kind, params, custom_phi):
    n = w0.shape[0]
    states = np.empty((nsteps + 1, n))
    states[0] = w0
    w = w0.copy()
    for s in range(nsteps):
        k1 = _rhs_numpy(A, w, d, kind, params, custom_phi)
        k2 = _rhs_numpy(A, w + 0.5 * dt * k1, d, kind, params, custom_phi)
        k3 = _rhs_numpy(A, w + 0.5 * dt * k2, d, kind, params, custom_phi)
        k4 = _rhs_numpy(A, w + dt * k3, d, kind, params, custom_phi)
        w = w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[s + 1] = w
    return states


# ---------------------------------------------------------------------------
# numba path

if _HAVE_NUMBA:

    @njit(cache=True)
    def _rhs_numba(A, w, d, kind, params, out):  # pragma: no cover - jitted
        n = w.shape[0]
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += A[i, j] * w[j]
            out[i] = acc
        n_agents = n // d
        for k in range(n_agents):
            base = k * d
            if kind == 1:
                p = params[0] * np.sin(w[base])
            elif kind == 2:
                p = -params[0] * np.tanh(w[base]) - params[1] * np.tanh(w[base + d - 1])
            else:
                p = 0.0
            out[base + d - 1] += p

    @njit(cache=True)
    def _rk4_run_numba(A, w0, dt, nsteps, d, kind, params):  # pragma: no cover - jitted
        n = w0.shape[0]
        states = np.empty((nsteps + 1, n))
        states[0] = w0
        w = w0.copy()
        k1 = np.empty(n)
        k2 = np.empty(n)
        k3 = np.empty(n)
        k4 = np.empty(n)
        tmp = np.empty(n)
        for s in range(nsteps):
            _rhs_numba(A, w, d, kind, params, k1)
            for i in range(n):
                tmp[i] = w[i] + 0.5 * dt * k1[i]
            _rhs_numba(A, tmp, d, kind, params, k2)
            for i in range(n):
                tmp[i] = w[i] + 0.5 * dt * k2[i]
            _rhs_numba(A, tmp, d, kind, params, k3)
            for i in range(n):
                tmp[i] = w[i] + dt * k3[i]
            _rhs_numba(A, tmp, d, kind, params, k4)
            for i in range(n):
                w[i] = w[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            states[s + 1] = w
        return states


def rk4_run(A, w0, dt, nsteps, d, kind, params, custom_phi=None):
    """Integrate nsteps fixed RK4 steps; returns states of shape (nsteps+1, n)."""
    A = np.ascontiguousarray(A, dtype=float)
    w0 = np.ascontiguousarray(w0, dtype=float)
    params = np.ascontiguousarray(params, dtype=float)
    if active_backend(kind) == "numba":
        return _rk4_run_numba(A, w0, float(dt), int(nsteps), int(d), int(kind), params)
    return _rk4_run_numpy(A, w0, float(dt), int(nsteps), int(d), int(kind), params, custom_phi)
