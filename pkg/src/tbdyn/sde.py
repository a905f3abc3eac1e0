"""Stochastic simulation: Euler-Maruyama paths with reproducible noise.

Noise streams are derived from ``(seed, path_index)`` with the Philox
counter-based generator, so every path is reproducible bit-for-bit in
isolation, independent of scheduling or worker count.  Each step consumes
one row of 15 standard normal draws in a fixed layout: channels 0-10 drive
the demographic events, channels 11-14 the four mean-reverting parameter
processes.  Demographic-only runs draw the same 15-channel rows and use the
first 11, so the two models share their demographic noise given the same
seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ConfigError, DomainError, StepOverflowError
from .model import validate_state
from .params import ENV_TARGETS, EnvProcessParams, ModelParams

__all__ = [
    "SimConfig",
    "PathResult",
    "CHUNK_STEPS",
    "simulate_path",
    "em_step_demographic",
    "em_step_environmental",
    "ou_asymptotic_moments",
]

#: Steps per noise-generation chunk.  Results are invariant to this value.
CHUNK_STEPS = 8192

_MODELS = ("Demographic", "Environmental")


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step simulation settings."""

    t_end: float
    dt: float = 0.01
    record_stride: int = 1
    seed: int = 0
    model: str = "Demographic"
    env: EnvProcessParams | None = None

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ConfigError("dt must be positive and finite")
        if not (self.t_end >= self.dt):
            raise ConfigError("t_end must be at least one step long")
        if not (isinstance(self.record_stride, int) and self.record_stride >= 1):
            raise ConfigError("record_stride must be an integer >= 1")
        if self.model not in _MODELS:
            raise ConfigError(f"model must be one of {_MODELS}")
        if self.model == "Environmental" and self.env is None:
            raise ConfigError("the environmental model needs env parameters")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2 ** 64):
            raise ConfigError("seed must be an integer in [0, 2^64)")
        n = self.n_steps
        if abs(n * self.dt - self.t_end) > 1e-6 * self.dt:
            raise ConfigError("t_end must be an integer multiple of dt")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))


@dataclass
class PathResult:
    """One simulated path, sampled every ``record_stride`` steps."""

    times: np.ndarray                 # (n_rec,), starts at 0
    states: np.ndarray                # (n_rec, 4)
    env_values: np.ndarray | None     # (n_rec, 4) live (delta, b, gamma, eta), or None
    absorbed_at: float | None         # first time with M_i = 0 and B = 0
    b_zero_at: float | None           # first time with B = 0
    overflow: bool
    steps_completed: int
    path_index: int
    seed: int

    @property
    def terminal_state(self) -> np.ndarray:
        return self.states[-1]


def _make_generator(seed: int, path_index: int) -> np.random.Generator:
    key = np.array([seed, path_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def simulate_path(init, params: ModelParams, config: SimConfig,
                  path_index: int = 0) -> PathResult:
    """Simulate one path of the configured model from ``init``.

    A non-finite update aborts the path, returning the committed samples
    with the overflow flag set.
    """
    if not (isinstance(path_index, (int, np.integer)) and path_index >= 0):
        raise DomainError("path_index must be a nonnegative integer")
    y = np.array(init, dtype=np.float64).copy()
    validate_state(y)
    env_model = config.model == "Environmental"

    n_steps = config.n_steps
    stride = config.record_stride
    dt = config.dt
    n_full = n_steps // stride
    pvec = params.as_array()
    rec_states = np.empty((n_full, 4))
    if env_model:
        alpha, sigma, cs, c0 = config.env.as_arrays()
        live = c0.copy()
        rec_env = np.empty((n_full, 4))
    gen = _make_generator(config.seed, int(path_index))

    overflow = False
    steps_done = 0
    bzero_step = -1
    absorbed_step = -1
    for start in range(0, n_steps, CHUNK_STEPS):
        m = min(CHUNK_STEPS, n_steps - start)
        noise = gen.standard_normal((m, 15))
        if env_model:
            status, done, bz, ab = _backend.environmental_chunk(
                y, live, pvec, alpha, sigma, cs, dt, noise, start, stride,
                rec_states, rec_env)
        else:
            status, done, bz, ab = _backend.demographic_chunk(
                y, pvec, dt, noise, start, stride, rec_states)
        if bz >= 0 and bzero_step < 0:
            bzero_step = start + bz + 1
        if ab >= 0 and absorbed_step < 0:
            absorbed_step = start + ab + 1
        steps_done = start + done
        if status != 0:
            overflow = True
            break

    n_rows = steps_done // stride
    rec_steps = (np.arange(1, n_rows + 1, dtype=np.int64) * stride)
    if steps_done % stride != 0 or steps_done == 0:
        # append the last committed state (overflow mid-stride, or the
        # final step of a horizon that is not a stride multiple)
        rec_steps = np.concatenate([rec_steps, [steps_done]]) if steps_done else rec_steps
        extra_state = y.copy()[None, :] if steps_done % stride != 0 else None
    else:
        extra_state = None

    states = rec_states[:n_rows]
    if extra_state is not None:
        states = np.vstack([states, extra_state])
    states = np.vstack([np.array(init, dtype=np.float64)[None, :], states])
    times = np.concatenate([[0.0], rec_steps.astype(np.float64) * dt])
    env_values = None
    if env_model:
        env_values = rec_env[:n_rows]
        if extra_state is not None:
            env_values = np.vstack([env_values, live[None, :]])
        env_values = np.vstack([c0[None, :], env_values])

    return PathResult(
        times=times,
        states=states,
        env_values=env_values,
        absorbed_at=absorbed_step * dt if absorbed_step >= 0 else None,
        b_zero_at=bzero_step * dt if bzero_step >= 0 else None,
        overflow=overflow,
        steps_completed=steps_done,
        path_index=int(path_index),
        seed=config.seed,
    )


def em_step_demographic(state, params: ModelParams, dt: float, noise) -> np.ndarray:
    """One Euler-Maruyama step of the demographic model (11 noise draws)."""
    if not dt > 0.0:
        raise DomainError("dt must be positive")
    y = np.array(state, dtype=np.float64).copy()
    validate_state(y)
    w = np.asarray(noise, dtype=np.float64).reshape(-1)
    if w.size < 11:
        raise DomainError("the demographic step needs 11 noise draws")
    noise_row = np.ascontiguousarray(w[:11])[None, :]
    out = np.empty((1, 4))
    status, _, _, _ = _backend.demographic_chunk(
        y, params.as_array(), float(dt), noise_row, 0, 1, out)
    if status != 0:
        raise StepOverflowError("non-finite state after one step; reduce dt")
    return y


def em_step_environmental(state, live_params, base: ModelParams,
                          env: EnvProcessParams, dt: float, noise):
    """One Euler-Maruyama step of the environmental model (15 noise draws).

    The cell-state update uses the supplied pre-step live parameter values;
    the four parameter processes then advance with noise channels 11-14.
    Returns ``(new_state, new_live_params)``.
    """
    if not dt > 0.0:
        raise DomainError("dt must be positive")
    y = np.array(state, dtype=np.float64).copy()
    validate_state(y)
    live = np.array(live_params, dtype=np.float64).reshape(-1).copy()
    if live.shape != (4,) or not np.all(np.isfinite(live)) or np.any(live <= 0.0):
        raise DomainError("live_params must be 4 positive finite values (delta, b, gamma, eta)")
    w = np.asarray(noise, dtype=np.float64).reshape(-1)
    if w.size < 15:
        raise DomainError("the environmental step needs 15 noise draws")
    noise_row = np.ascontiguousarray(w[:15])[None, :]
    alpha, sigma, cs, _ = env.as_arrays()
    out = np.empty((1, 4))
    out_env = np.empty((1, 4))
    status, _, _, _ = _backend.environmental_chunk(
        y, live, base.as_array(), alpha, sigma, cs, float(dt), noise_row,
        0, 1, out, out_env)
    if status != 0:
        raise StepOverflowError("non-finite state after one step; reduce dt")
    return y, live


def ou_asymptotic_moments(env: EnvProcessParams) -> dict[str, tuple[float, float]]:
    """Long-run (mean, variance) of each mean-reverting parameter process.

    The variance is finite only when alpha > sigma^2 / 2; otherwise the
    variance entry is ``math.inf``.
    """
    out: dict[str, tuple[float, float]] = {}
    for name, ch in zip(ENV_TARGETS, env.channels()):
        if ch.sigma == 0.0:
            out[name] = (ch.C_s, 0.0)
            continue
        denom = 2.0 * ch.alpha - ch.sigma ** 2
        var = (ch.C_s ** 2 * ch.sigma ** 2) / denom if denom > 0.0 else math.inf
        out[name] = (ch.C_s, var)
    return out
