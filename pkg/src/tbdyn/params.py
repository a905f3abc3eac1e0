"""Model parameters, environmental-process parameters, and validation.

Parameter symbols and baseline values follow the in-host tuberculosis
model's published parameter table; see README for the table and units.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "ModelParams",
    "EnvProcessParams",
    "EnvChannel",
    "PARAM_NAMES",
    "PARAM_RANGES",
    "ENV_TARGETS",
    "DomainError",
]


#: Canonical field order; also the layout of ModelParams.as_array().
PARAM_NAMES = (
    "s_M", "s_T", "mu_M", "b", "mu_T", "beta", "eta", "gamma", "delta",
    "c_M", "c_B", "e_M", "e_B", "c", "K", "N1", "N2", "N3",
)

#: Documented sweep ranges for the bifurcation parameters.
PARAM_RANGES = {
    "delta": (0.0, 0.35),
    "b": (0.05, 0.5),
    "gamma": (0.1, 2.0),
    "eta": (1.25e-9, 1.25e-7),
}

#: Parameters that may carry a mean-reverting environmental process.
ENV_TARGETS = ("delta", "b", "gamma", "eta")


@dataclass(frozen=True)
class ModelParams:
    """The 18 model parameters with baseline defaults.

    All fields are finite and strictly positive (K >= 1); ``delta`` alone
    may be 0, which switches off extracellular proliferation (used by
    bifurcation scans that start a sweep at the origin).
    """

    s_M: float = 5000.0     # uninfected-macrophage recruitment (1/ml/day)
    s_T: float = 6.6        # T-cell recruitment (1/ml/day)
    mu_M: float = 0.01      # macrophage death rate (1/day)
    b: float = 0.11         # infected-macrophage loss rate (1/day)
    mu_T: float = 0.33      # T-cell death rate (1/day)
    beta: float = 2e-7      # macrophage infection rate (1/day per bacterium/ml)
    eta: float = 1.25e-8    # bacterial kill rate by phagocytosis (1/ml/day)
    gamma: float = 1.5      # cell-mediated immunity rate (1/day)
    delta: float = 5e-4     # extracellular bacterial proliferation rate (1/day)
    c_M: float = 1e-3       # T-cell stimulation by infected macrophages (1/day)
    c_B: float = 5e-3       # T-cell stimulation by bacteria (1/day)
    e_M: float = 1e-4       # saturation of macrophage-driven stimulation
    e_B: float = 1e-4       # saturation of bacteria-driven stimulation
    c: float = 3.0          # half-saturation ratio of T cells per infected cell
    K: float = 1e8          # bacterial carrying capacity (1/ml)
    N1: float = 50.0        # bacteria released per bursting infected macrophage
    N2: float = 20.0        # bacteria released per T-cell-killed macrophage
    N3: float = 25.0        # bacteria engulfed per newly infected macrophage

    def __post_init__(self) -> None:
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise DomainError(f"parameter {name!r} must be a real number")
            value = float(value)
            if not math.isfinite(value):
                raise DomainError(f"parameter {name!r} must be finite")
            if name == "delta":
                if value < 0.0:
                    raise DomainError("parameter 'delta' must be >= 0")
            elif value <= 0.0:
                raise DomainError(f"parameter {name!r} must be > 0")
            object.__setattr__(self, name, value)
        if self.K < 1.0:
            raise DomainError("parameter 'K' must be >= 1")

    def replace(self, **overrides: float) -> "ModelParams":
        """Return a copy with the named parameters replaced."""
        unknown = set(overrides) - set(PARAM_NAMES)
        if unknown:
            raise DomainError(f"unknown parameter(s): {sorted(unknown)}")
        return dataclasses.replace(self, **overrides)

    def as_array(self) -> np.ndarray:
        """Parameter vector in PARAM_NAMES order (used by the EM kernels)."""
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=np.float64)

    def to_dict(self) -> dict:
        return {n: getattr(self, n) for n in PARAM_NAMES}


@dataclass(frozen=True)
class EnvChannel:
    """Mean-reverting process settings for one target parameter.

    dC = alpha (C_s - C) dt + sigma C dW; ``alpha`` is the return rate
    toward the target mean ``C_s`` and ``C_0`` the initial value.
    """

    alpha: float
    sigma: float
    C_s: float
    C_0: float

    def __post_init__(self) -> None:
        for name in ("alpha", "sigma", "C_s", "C_0"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0.0:
                raise DomainError(f"environmental setting {name!r} must be finite and >= 0")
            if name in ("C_s", "C_0") and value == 0.0:
                raise DomainError(f"environmental setting {name!r} must be > 0")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class EnvProcessParams:
    """Environmental (mean-reverting) processes for delta, b, gamma, eta."""

    delta: EnvChannel
    b: EnvChannel
    gamma: EnvChannel
    eta: EnvChannel

    @classmethod
    def with_return_rate(cls, params: ModelParams, alpha: float,
                         sigma: float | None = None) -> "EnvProcessParams":
        """All four channels with a shared return rate.

        ``sigma`` defaults to sqrt(alpha/2), i.e. the alpha = 2 sigma^2
        relation under which the limiting variance is C_s^2/3.  Target
        means and initial values are the current values in ``params``.
        """
        if sigma is None:
            sigma = math.sqrt(alpha / 2.0)
        channels = {}
        for name in ENV_TARGETS:
            base = getattr(params, name)
            channels[name] = EnvChannel(alpha=alpha, sigma=sigma, C_s=base, C_0=base)
        return cls(**channels)

    def channels(self) -> tuple[EnvChannel, EnvChannel, EnvChannel, EnvChannel]:
        return (self.delta, self.b, self.gamma, self.eta)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(alpha, sigma, C_s, C_0) arrays in (delta, b, gamma, eta) order."""
        ch = self.channels()
        alpha = np.array([c.alpha for c in ch], dtype=np.float64)
        sigma = np.array([c.sigma for c in ch], dtype=np.float64)
        c_s = np.array([c.C_s for c in ch], dtype=np.float64)
        c_0 = np.array([c.C_0 for c in ch], dtype=np.float64)
        return alpha, sigma, c_s, c_0

    def check_moment_stability(self) -> None:
        """Require alpha > sigma^2/2 (finite limiting variance) on every noisy channel."""
        for name in ENV_TARGETS:
            ch = getattr(self, name)
            if ch.sigma == 0.0:
                continue
            if ch.alpha <= ch.sigma ** 2 / 2.0:
                raise DomainError(
                    f"channel {name!r}: alpha <= sigma^2/2 gives unbounded variance"
                )

    def to_dict(self) -> dict:
        return {
            name: {
                "alpha": getattr(self, name).alpha,
                "sigma": getattr(self, name).sigma,
                "C_s": getattr(self, name).C_s,
                "C_0": getattr(self, name).C_0,
            }
            for name in ENV_TARGETS
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EnvProcessParams":
        unknown = set(data) - set(ENV_TARGETS)
        if unknown:
            raise DomainError(f"unknown environmental channel(s): {sorted(unknown)}")
        missing = set(ENV_TARGETS) - set(data)
        if missing:
            raise DomainError(f"missing environmental channel(s): {sorted(missing)}")
        channels = {}
        for name in ENV_TARGETS:
            fields = dict(data[name])
            extra = set(fields) - {"alpha", "sigma", "C_s", "C_0"}
            if extra:
                raise DomainError(f"channel {name!r}: unknown key(s) {sorted(extra)}")
            channels[name] = EnvChannel(**fields)
        return cls(**channels)
