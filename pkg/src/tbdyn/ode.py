"""Deterministic integration and trajectory outcome classification.

The integrator is an explicit embedded Runge-Kutta pair of orders 4 and 5
(Dormand-Prince coefficients) with standard proportional step-size control.
The exact flow preserves the nonnegative orthant, but a discrete step can
overshoot it, so every accepted step is clamped at zero componentwise.
Dense output is linear interpolation on the stored accepted steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IntegrationError
from .model import drift, validate_state
from .params import ModelParams

__all__ = [
    "StepControl",
    "Trajectory",
    "OutcomeLabel",
    "integrate",
    "classify_outcome",
    "bacterial_log_slope",
]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                -92097 / 339200, 187 / 2100, 1 / 40])
_ERR = _B5 - _B4

_MAX_STEPS = 5_000_000


@dataclass(frozen=True)
class StepControl:
    """Adaptive step-size settings for :func:`integrate`."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 1.0

    def __post_init__(self):
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0 and self.max_step > 0.0):
            raise DomainError("step-control tolerances and max_step must be positive")


@dataclass
class Trajectory:
    """An accepted-step record of one deterministic solution."""

    times: np.ndarray          # strictly increasing, shape (n,)
    states: np.ndarray         # shape (n, 4)
    params: ModelParams

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.states = np.asarray(self.states, dtype=np.float64)
        if self.times.ndim != 1 or self.states.shape != (self.times.size, 4):
            raise DomainError("trajectory arrays must have shapes (n,) and (n, 4)")
        if self.times.size and np.any(np.diff(self.times) <= 0.0):
            raise DomainError("trajectory times must be strictly increasing")

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def terminal_state(self) -> np.ndarray:
        return self.states[-1]

    def sample(self, at_times) -> np.ndarray:
        """States at ``at_times`` by linear interpolation on stored steps."""
        at = np.atleast_1d(np.asarray(at_times, dtype=np.float64))
        if np.any(at < self.times[0]) or np.any(at > self.times[-1]):
            raise DomainError("sample times must lie inside the trajectory span")
        out = np.empty((at.size, 4))
        for k in range(4):
            out[:, k] = np.interp(at, self.times, self.states[:, k])
        return out


@dataclass
class OutcomeLabel:
    """Classification of a trajectory's long-run behaviour."""

    label: str                         # Clearance | LTBI | ActiveDisease | Undetermined
    terminal_state: np.ndarray = field(repr=False)


def integrate(init, params: ModelParams, t_end: float,
              step_control: StepControl | dict | None = None) -> Trajectory:
    """Solve the deterministic system from ``init`` to ``t_end``.

    Raises an integration-failure error (carrying the partial trajectory)
    if the step size underflows or the state leaves the finite range.
    """
    if step_control is None:
        step_control = StepControl()
    elif isinstance(step_control, dict):
        step_control = StepControl(**step_control)
    if not t_end > 0.0:
        raise DomainError("t_end must be positive")

    y = np.asarray(init, dtype=np.float64).copy()
    validate_state(y)

    rel, atol, hmax = step_control.rel_tol, step_control.abs_tol, step_control.max_step
    t = 0.0
    times = [0.0]
    states = [y.copy()]
    h = min(hmax, t_end, 1e-2)
    k = np.empty((7, 4))

    def _fail(reason: str) -> IntegrationError:
        traj = Trajectory(np.array(times), np.array(states), params)
        err = IntegrationError(f"integration failed at t={t:.6g}: {reason}")
        err.trajectory = traj
        return err

    steps = 0
    while t < t_end:
        if steps >= _MAX_STEPS:
            raise _fail("step budget exhausted")
        h = min(h, t_end - t)
        if h < 1e-14 * max(1.0, abs(t)):
            raise _fail("step size underflow")
        k[0] = drift(y, params, check=False)
        for i in range(1, 7):
            yi = y + h * (_A[i] @ k[:i])
            k[i] = drift(yi, params, check=False)
        y5 = y + h * (_B5 @ k)
        err_vec = h * (_ERR @ k)
        scale = atol + rel * np.maximum(np.abs(y), np.abs(y5))
        err_norm = np.sqrt(np.mean((err_vec / scale) ** 2))
        steps += 1
        if not np.isfinite(err_norm):
            raise _fail("non-finite state")
        if err_norm <= 1.0:
            t = t + h
            y = np.maximum(y5, 0.0)
            times.append(t)
            states.append(y.copy())
            grow = 0.9 * (err_norm + 1e-300) ** -0.2
            h = min(hmax, h * min(5.0, grow))
        else:
            h = h * max(0.2, 0.9 * err_norm ** -0.2)
    return Trajectory(np.array(times), np.array(states), params)


def classify_outcome(traj: Trajectory, clearance_eps: float = 1e-2,
                     active_floor: float = 1e6,
                     settle_window: float = 100.0) -> OutcomeLabel:
    """Label a trajectory by its behaviour over the final time window.

    Clearance: both B and M_i stay below ``clearance_eps``.
    ActiveDisease: B stays above ``active_floor``.
    LTBI: B has settled (relative drift < 1e-3) strictly between the two.
    Anything else: Undetermined.
    """
    if not (clearance_eps > 0.0 and active_floor > clearance_eps and settle_window > 0.0):
        raise DomainError("thresholds must satisfy 0 < clearance_eps < active_floor, window > 0")
    span = traj.times[-1] - traj.times[0]
    if span < settle_window:
        raise DomainError(
            f"trajectory spans {span:.6g} days; settle_window needs {settle_window:.6g}")
    window_times = np.linspace(traj.times[-1] - settle_window, traj.times[-1], 101)
    window = traj.sample(window_times)
    m_i = window[:, 1]
    b = window[:, 2]
    terminal = traj.terminal_state.copy()

    if max(float(b.max()), float(m_i.max())) < clearance_eps:
        return OutcomeLabel("Clearance", terminal)
    if float(b.min()) > active_floor:
        return OutcomeLabel("ActiveDisease", terminal)
    b_max = float(b.max())
    b_min = float(b.min())
    settled = b_max > 0.0 and (b_max - b_min) / b_max < 1e-3
    if settled and b_min >= clearance_eps and b_max <= active_floor:
        return OutcomeLabel("LTBI", terminal)
    return OutcomeLabel("Undetermined", terminal)


def bacterial_log_slope(traj: Trajectory, window: tuple[float, float] = (50.0, 250.0),
                        samples: int = 101) -> float:
    """Least-squares slope of ln B(t) over ``window`` (uniform samples).

    Quantifies early decline/growth of the bacterial load; positive means
    the load is growing over the window.
    """
    lo, hi = float(window[0]), float(window[1])
    if not (traj.times[0] <= lo < hi <= traj.times[-1]):
        raise DomainError("slope window must lie inside the trajectory span")
    ts = np.linspace(lo, hi, samples)
    b = traj.sample(ts)[:, 2]
    if np.any(b <= 0.0):
        raise DomainError("bacterial load must stay positive on the slope window")
    return float(np.polyfit(ts, np.log(b), 1)[0])
