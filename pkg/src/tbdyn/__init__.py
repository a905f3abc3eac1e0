"""In-host bacterial infection dynamics: ODE/SDE simulation and analysis."""

__version__ = "1.0.0"

from .errors import (ConfigError, DomainError, EnsembleError, GridTooCoarseError,
                     IntegrationError, InternalConsistencyError, SingularityError,
                     StepOverflowError)
from .params import EnvChannel, EnvProcessParams, ModelParams
from .ode import (StepControl, Trajectory, bacterial_log_slope,
                  classify_outcome, integrate)
from .equilibria import (delta_threshold, eigen_closed_form, infected_equilibria,
                         lambda1_approx, lambda1_contour, trivial_equilibrium)
from .bifurcation import (branch_scan, boundary_trace_2d, classify_region,
                          detect_branch_point, detect_folds)
from .sde import SimConfig, PathResult, simulate_path, ou_asymptotic_moments
from .ensemble import (EnsembleSummary, histogram, rank_diff, run_ensemble,
                       summary_stats)
from .scenarios import (PRESET_NAMES, Scenario, parse_config, preset,
                        run_scenario, serialize_config)

__all__ = [
    "ConfigError", "DomainError", "EnsembleError", "GridTooCoarseError",
    "IntegrationError", "InternalConsistencyError", "SingularityError",
    "StepOverflowError",
    "EnvChannel", "EnvProcessParams", "ModelParams",
    "StepControl", "Trajectory", "bacterial_log_slope", "classify_outcome",
    "integrate",
    "delta_threshold", "eigen_closed_form", "infected_equilibria",
    "lambda1_approx", "lambda1_contour", "trivial_equilibrium",
    "branch_scan", "boundary_trace_2d", "classify_region",
    "detect_branch_point", "detect_folds",
    "SimConfig", "PathResult", "simulate_path", "ou_asymptotic_moments",
    "EnsembleSummary", "histogram", "rank_diff", "run_ensemble", "summary_stats",
    "PRESET_NAMES", "Scenario", "parse_config", "preset", "run_scenario",
    "serialize_config",
    "__version__",
]
