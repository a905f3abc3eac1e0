"""Model core: drift, demographic event table, covariance, diffusion factor.

State layout is (M_u, M_i, B, T): uninfected macrophages, infected
macrophages, extracellular bacteria, T cells (all concentrations per ml).
Every function accepts a state of shape (4,) or a batch of shape (4, n)
and evaluates elementwise over the batch.

The 11 demographic events (state change, rate):
     1  (+1, 0, 0, 0)   s_M                     recruitment of M_u
     2  (-1, 0, 0, 0)   mu_M * M_u              death of M_u
     3  (-1,+1, 0, 0)   beta * M_u * B          infection
     4  ( 0,-1,+N1,0)   b * M_i                 burst of M_i
     5  ( 0,-1,+N2,0)   gamma*M_i*T/(T+c*M_i)   T-cell killing of M_i
     6  ( 0, 0,+1, 0)   max(0, delta*B*(1-B/K)) proliferation of B
     7  ( 0, 0,-1, 0)   M_u*B*(eta+N3*beta)     phagocytosis loss of B
     8  ( 0, 0, 0,+1)   s_T                     recruitment of T
     9  ( 0, 0, 0,+1)   c_M*M_i*T/(e_M*T+1)     stimulation by M_i
    10  ( 0, 0, 0,+1)   c_B*B*T/(e_B*T+1)       stimulation by B
    11  ( 0, 0, 0,-1)   mu_T * T                death of T
"""

from __future__ import annotations

import numpy as np

from .params import DomainError, ModelParams

__all__ = [
    "N_EVENTS",
    "validate_state",
    "saturating_kill_rate",
    "drift",
    "drift_component_scales",
    "event_rates",
    "event_deltas",
    "covariance_matrix",
    "diffusion_matrix",
    "jacobian",
]

N_EVENTS = 11


def _as_state(state) -> np.ndarray:
    arr = np.asarray(state, dtype=np.float64)
    if arr.shape[:1] != (4,):
        raise DomainError(f"state must have leading dimension 4, got shape {arr.shape}")
    return arr


def validate_state(state) -> np.ndarray:
    """Check finiteness and nonnegativity; return the state as an array."""
    arr = _as_state(state)
    if not np.all(np.isfinite(arr)):
        raise DomainError("state components must be finite")
    if np.any(arr < 0.0):
        raise DomainError("state components must be >= 0")
    return arr


def saturating_kill_rate(state, params: ModelParams):
    """T-cell mediated killing rate gamma*M_i*T/(T + c*M_i).

    Algebraically equal to gamma*M_i*(T/M_i)/((T/M_i)+c) for M_i > 0 and
    continuously extended by 0 where T + c*M_i = 0.
    """
    arr = validate_state(state)
    m_i, t = arr[1], arr[3]
    denom = t + params.c * m_i
    safe = np.where(denom > 0.0, denom, 1.0)
    out = np.where(denom > 0.0, params.gamma * m_i * t / safe, 0.0)
    return float(out) if out.ndim == 0 else out


def _kill(m_i, t, gamma, c):
    denom = t + c * m_i
    safe = np.where(denom > 0.0, denom, 1.0)
    return np.where(denom > 0.0, gamma * m_i * t / safe, 0.0)


def drift(state, params: ModelParams, *, check: bool = True):
    """Right-hand side (f1, f2, f3, f4) of the deterministic model.

    The logistic proliferation term delta*B*(1-B/K) is kept unclamped here;
    only the event-rate view (event_rates) clamps it at 0.
    """
    arr = validate_state(state) if check else _as_state(state)
    m_u, m_i, b, t = arr
    p = params
    infection = p.beta * m_u * b
    kill = _kill(m_i, t, p.gamma, p.c)
    logistic = p.delta * b * (1.0 - b / p.K)
    f1 = p.s_M - p.mu_M * m_u - infection
    f2 = infection - p.b * m_i - kill
    f3 = logistic + p.N1 * p.b * m_i + p.N2 * kill - m_u * b * (p.eta + p.N3 * p.beta)
    f4 = (p.s_T + p.c_M * m_i * t / (p.e_M * t + 1.0)
          + p.c_B * b * t / (p.e_B * t + 1.0) - p.mu_T * t)
    return np.stack(np.broadcast_arrays(f1, f2, f3, f4))


def drift_component_scales(state, params: ModelParams):
    """Per-component magnitude scale: the sum of |term| over each f_i's terms.

    Used to express equilibrium residuals relative to the size of the
    competing fluxes rather than the (possibly tiny) net drift.
    """
    arr = _as_state(state)
    m_u, m_i, b, t = arr
    p = params
    infection = p.beta * m_u * b
    kill = _kill(m_i, t, p.gamma, p.c)
    logistic = np.abs(p.delta * b * (1.0 - b / p.K))
    s1 = p.s_M + p.mu_M * m_u + infection
    s2 = infection + p.b * m_i + kill
    s3 = logistic + p.N1 * p.b * m_i + p.N2 * kill + m_u * b * (p.eta + p.N3 * p.beta)
    s4 = (p.s_T + p.c_M * m_i * t / (p.e_M * t + 1.0)
          + p.c_B * b * t / (p.e_B * t + 1.0) + p.mu_T * t)
    return np.stack(np.broadcast_arrays(s1, s2, s3, s4))


def event_rates(state, params: ModelParams, *, check: bool = True):
    """The 11 event rates (p1..p11); p6 is clamped at 0 for B > K."""
    arr = validate_state(state) if check else _as_state(state)
    m_u, m_i, b, t = arr
    p = params
    rates = np.stack(np.broadcast_arrays(
        p.s_M,
        p.mu_M * m_u,
        p.beta * m_u * b,
        p.b * m_i,
        _kill(m_i, t, p.gamma, p.c),
        np.maximum(p.delta * b * (1.0 - b / p.K), 0.0),
        m_u * b * (p.eta + p.N3 * p.beta),
        p.s_T,
        p.c_M * m_i * t / (p.e_M * t + 1.0),
        p.c_B * b * t / (p.e_B * t + 1.0),
        p.mu_T * t,
    )).astype(np.float64, copy=False)
    return rates


def event_deltas(params: ModelParams) -> np.ndarray:
    """11x4 matrix of state-change vectors, with N1/N2 from ``params``."""
    return np.array([
        [1.0, 0.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [-1.0, 1.0, 0.0, 0.0],
        [0.0, -1.0, params.N1, 0.0],
        [0.0, -1.0, params.N2, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, -1.0],
    ])


def covariance_matrix(state, params: ModelParams) -> np.ndarray:
    """Event covariance Sigma = sum_k p_k (dX)_k (dX)_k^T, via its entry formulas."""
    p = event_rates(state, params)
    if p.ndim != 1:
        raise DomainError("covariance_matrix expects a single state of shape (4,)")
    n1, n2 = params.N1, params.N2
    sigma = np.zeros((4, 4))
    sigma[0, 0] = p[0] + p[1] + p[2]
    sigma[0, 1] = sigma[1, 0] = -p[2]
    sigma[1, 1] = p[2] + p[3] + p[4]
    sigma[1, 2] = sigma[2, 1] = -(n1 * p[3] + n2 * p[4])
    sigma[2, 2] = n1 * n1 * p[3] + n2 * n2 * p[4] + p[5] + p[6]
    sigma[3, 3] = p[7] + p[8] + p[9] + p[10]
    return sigma


def diffusion_matrix(state, params: ModelParams) -> np.ndarray:
    """4x11 diffusion factor with B B^T = covariance_matrix(state).

    One column per demographic event; entries are +/- sqrt(p_k), scaled by
    N1/N2 in the bacterial row for the release events.
    """
    p = event_rates(state, params)
    if p.ndim != 1:
        raise DomainError("diffusion_matrix expects a single state of shape (4,)")
    s = np.sqrt(p)
    mat = np.zeros((4, 11))
    mat[0, 0] = s[0]
    mat[0, 1] = -s[1]
    mat[0, 2] = -s[2]
    mat[1, 2] = s[2]
    mat[1, 3] = -s[3]
    mat[1, 4] = -s[4]
    mat[2, 3] = params.N1 * s[3]
    mat[2, 4] = params.N2 * s[4]
    mat[2, 5] = s[5]
    mat[2, 6] = -s[6]
    mat[3, 7] = s[7]
    mat[3, 8] = s[8]
    mat[3, 9] = s[9]
    mat[3, 10] = -s[10]
    return mat


def jacobian(state, params: ModelParams, *, check: bool = True) -> np.ndarray:
    """Analytic Jacobian of ``drift`` at a single state.

    The killing-term partials use the T*M_i/(T+c*M_i) form:
      d(kill)/dM_i = gamma * T^2 / (T+c*M_i)^2,
      d(kill)/dT   = gamma * c * M_i^2 / (T+c*M_i)^2.
    At T+c*M_i = 0 these are extended by their limits along M_i=0:
    gamma and 0, so the M_i column stays continuous at the trivial state.
    """
    arr = validate_state(state) if check else _as_state(state)
    if arr.ndim != 1:
        raise DomainError("jacobian expects a single state of shape (4,)")
    m_u, m_i, b, t = (float(v) for v in arr)
    p = params
    denom = t + p.c * m_i
    if denom > 0.0:
        kill_mi = p.gamma * t * t / (denom * denom)
        kill_t = p.gamma * p.c * m_i * m_i / (denom * denom)
    else:
        kill_mi = p.gamma
        kill_t = 0.0
    phag = p.eta + p.N3 * p.beta
    em1 = p.e_M * t + 1.0
    eb1 = p.e_B * t + 1.0
    jac = np.zeros((4, 4))
    jac[0, 0] = -p.mu_M - p.beta * b
    jac[0, 2] = -p.beta * m_u
    jac[1, 0] = p.beta * b
    jac[1, 1] = -p.b - kill_mi
    jac[1, 2] = p.beta * m_u
    jac[1, 3] = -kill_t
    jac[2, 0] = -b * phag
    jac[2, 1] = p.N1 * p.b + p.N2 * kill_mi
    jac[2, 2] = p.delta * (1.0 - 2.0 * b / p.K) - m_u * phag
    jac[2, 3] = p.N2 * kill_t
    jac[3, 1] = p.c_M * t / em1
    jac[3, 2] = p.c_B * t / eb1
    jac[3, 3] = (p.c_M * m_i / (em1 * em1) + p.c_B * b / (eb1 * eb1) - p.mu_T)
    return jac
