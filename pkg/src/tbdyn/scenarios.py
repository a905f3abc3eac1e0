"""Scenario configuration, named presets, and the run dispatcher.

A scenario is a single JSON document (``"schema": 1``) naming one run
mode plus the model parameters, initial state, simulation settings, and
requested output tables.  ``parse_config``/``serialize_config`` convert
between the JSON text and the in-memory :class:`Scenario`;
``run_scenario`` executes one scenario and returns the output tables.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

from .bifurcation import boundary_trace_2d, branch_scan
from .ensemble import histogram, rank_diff, run_ensemble
from .equilibria import (delta_threshold, infected_equilibria, lambda1_contour,
                         trivial_equilibrium)
from .errors import ConfigError, EnsembleError
from .model import validate_state
from .ode import integrate
from .params import ENV_TARGETS, PARAM_NAMES, PARAM_RANGES, EnvProcessParams, ModelParams
from .sde import SimConfig, simulate_path

__all__ = [
    "MODES",
    "PRESET_NAMES",
    "Case",
    "ContourGrid",
    "RankSpec",
    "Scan1D",
    "Scan2D",
    "Scenario",
    "Table",
    "parse_config",
    "preset",
    "run_scenario",
    "serialize_config",
]

MODES = (
    "ode",
    "sde-demographic",
    "sde-environmental",
    "equilibria",
    "scan1d",
    "scan2d",
    "contour",
    "rankdiff",
)

STATE_NAMES = ("M_u", "M_i", "B", "T")

# Output tables each mode may request; first entries are the defaults.
_MODE_OUTPUTS = {
    "ode": ("trajectory",),
    "sde-demographic": ("timeseries", "histograms", "paths", "endpoints"),
    "sde-environmental": ("timeseries", "histograms", "paths", "endpoints"),
    "equilibria": ("equilibria",),
    "scan1d": ("branches",),
    "scan2d": ("boundaries",),
    "contour": ("contour",),
    "rankdiff": ("rankdiff",),
}
_MODE_DEFAULT_OUTPUTS = {
    "ode": ("trajectory",),
    "sde-demographic": ("timeseries", "histograms"),
    "sde-environmental": ("timeseries", "histograms"),
    "equilibria": ("equilibria",),
    "scan1d": ("branches",),
    "scan2d": ("boundaries",),
    "contour": ("contour",),
    "rankdiff": ("rankdiff",),
}

_N_SAMPLE_PATHS = 4          # sample paths written by the "paths" output


@dataclass(frozen=True)
class Scan1D:
    """One-parameter equilibrium scan (branch diagram)."""

    parameter: str
    lo: float
    hi: float
    points: int = 240


@dataclass(frozen=True)
class Scan2D:
    """Fold/transcritical boundary trace in the (delta, parameter) plane."""

    parameter: str
    lo: float
    hi: float
    slices: int = 12
    points: int = 240


@dataclass(frozen=True)
class ContourGrid:
    """Rectangular (b, gamma) grid for leading-eigenvalue contours."""

    b_lo: float
    b_hi: float
    gamma_lo: float
    gamma_hi: float
    b_points: int = 60
    gamma_points: int = 60


@dataclass(frozen=True)
class RankSpec:
    """Rank-ordered comparison of one variable at two snapshot times."""

    times: tuple[float, float]
    variable: str = "B"


@dataclass(frozen=True)
class Case:
    """One labelled (init, params) variant inside an ODE scenario."""

    label: str
    params: ModelParams
    init: tuple[float, float, float, float] | None = None


@dataclass(frozen=True)
class Scenario:
    """A fully validated run description (one JSON document)."""

    name: str
    mode: str
    params: ModelParams
    init: tuple[float, float, float, float] | None = None
    sim: SimConfig | None = None
    n_paths: int | None = None
    scan: Scan1D | None = None
    scan2: Scan2D | None = None
    contour: ContourGrid | None = None
    rank: RankSpec | None = None
    cases: tuple[Case, ...] | None = None
    outputs: tuple[str, ...] = ()
    range_check: bool = False

    @property
    def env(self) -> EnvProcessParams | None:
        return self.sim.env if self.sim is not None else None


@dataclass
class Table:
    """One output table: a name (the CSV stem), a header, and rows."""

    name: str
    header: tuple[str, ...]
    rows: list[tuple]


# --------------------------------------------------------------------------
# parsing helpers
# --------------------------------------------------------------------------

def _need(data: dict, key: str, path: str):
    if key not in data:
        raise ConfigError(f"{path}{key}: required key is missing")
    return data[key]


def _reject_unknown(data: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{path}{unknown[0]}: unknown key")


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path}: value must be finite")
    return value


def _as_int(value, path: str) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected an integer")
    if isinstance(value, float):
        if value != int(value):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        value = int(value)
    if not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {type(value).__name__}")
    return value


def _parse_overrides(block, base: ModelParams, path: str,
                     range_check: bool) -> ModelParams:
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object of parameter overrides")
    overrides = {}
    for key, raw in block.items():
        if key not in PARAM_NAMES:
            raise ConfigError(f"{path}.{key}: unknown parameter")
        value = _as_number(raw, f"{path}.{key}")
        if value < 0.0 or (value == 0.0 and key != "delta"):
            raise ConfigError(f"{path}.{key}: parameter must be positive")
        overrides[key] = value
    params = base.replace(**overrides) if overrides else base
    if range_check:
        for key, (lo, hi) in PARAM_RANGES.items():
            value = getattr(params, key)
            if not (lo <= value <= hi):
                raise ConfigError(
                    f"{path}.{key}: value {value:g} outside the studied range [{lo:g}, {hi:g}]")
    return params


def _parse_init(block, path: str) -> tuple[float, float, float, float]:
    if not isinstance(block, list) or len(block) != 4:
        raise ConfigError(f"{path}: expected a list of 4 numbers (M_u, M_i, B, T)")
    values = tuple(_as_number(v, f"{path}[{i}]") for i, v in enumerate(block))
    if any(v < 0.0 for v in values):
        raise ConfigError(f"{path}: state components must be non-negative")
    return values


def _parse_sim(block, mode: str, env: EnvProcessParams | None,
               path: str) -> tuple[SimConfig, int | None]:
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object")
    _reject_unknown(block, {"t_end", "dt", "record_stride", "seed", "n_paths"}, f"{path}.")
    t_end = _as_number(_need(block, "t_end", f"{path}."), f"{path}.t_end")
    dt = _as_number(block.get("dt", 0.01), f"{path}.dt")
    stride = _as_int(block.get("record_stride", 1), f"{path}.record_stride")
    seed = _as_int(block.get("seed", 0), f"{path}.seed")
    n_paths = None
    if "n_paths" in block:
        if mode == "ode":
            raise ConfigError(f"{path}.n_paths: not valid for mode 'ode'")
        n_paths = _as_int(block["n_paths"], f"{path}.n_paths")
        if n_paths < 2:
            raise ConfigError(f"{path}.n_paths: need at least 2 paths")
    model = "Environmental" if mode == "sde-environmental" else "Demographic"
    try:
        sim = SimConfig(t_end=t_end, dt=dt, record_stride=stride, seed=seed,
                        model=model, env=env)
    except Exception as exc:                     # ConfigError from SimConfig
        raise ConfigError(f"{path}: {exc}") from exc
    return sim, n_paths


def _parse_outputs(block, mode: str, path: str) -> tuple[str, ...]:
    if block is None:
        return _MODE_DEFAULT_OUTPUTS[mode]
    if not isinstance(block, list) or not block:
        raise ConfigError(f"{path}: expected a non-empty list of table names")
    allowed = _MODE_OUTPUTS[mode]
    out: list[str] = []
    for i, item in enumerate(block):
        if item not in allowed:
            raise ConfigError(
                f"{path}[{i}]: {item!r} is not a valid output for mode {mode!r} "
                f"(choose from {list(allowed)})")
        if item in out:
            raise ConfigError(f"{path}[{i}]: duplicate output {item!r}")
        out.append(item)
    return tuple(out)


_LABEL_OK = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-")


def _check_label(label, path: str) -> str:
    if not isinstance(label, str) or not label:
        raise ConfigError(f"{path}: expected a non-empty string")
    if not set(label) <= _LABEL_OK:
        raise ConfigError(f"{path}: only letters, digits, '.', '_' and '-' are allowed")
    return label


def scenario_from_dict(data: dict) -> Scenario:
    """Validate a decoded JSON document and build the Scenario."""
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a JSON object")
    _reject_unknown(data, {"schema", "name", "mode", "params", "init", "sim", "env",
                           "scan", "scan2", "contour", "rank", "cases", "outputs",
                           "range_check"}, "")
    schema = _need(data, "schema", "")
    if schema != 1:
        raise ConfigError(f"schema: unsupported version {schema!r} (expected 1)")
    name = _check_label(_need(data, "name", ""), "name")
    mode = _need(data, "mode", "")
    if mode not in MODES:
        raise ConfigError(f"mode: {mode!r} is not one of {list(MODES)}")

    range_check = data.get("range_check", False)
    if not isinstance(range_check, bool):
        raise ConfigError("range_check: expected true or false")
    params = _parse_overrides(data.get("params", {}), ModelParams(), "params", range_check)

    needs_init = mode in ("ode", "sde-demographic", "sde-environmental", "rankdiff")
    init = None
    if "init" in data:
        if not needs_init:
            raise ConfigError(f"init: not valid for mode {mode!r}")
        init = _parse_init(data["init"], "init")
    elif needs_init:
        raise ConfigError(f"init: required for mode {mode!r}")

    env = None
    if "env" in data:
        if mode != "sde-environmental":
            raise ConfigError("env: only valid for mode 'sde-environmental'")
        try:
            env = EnvProcessParams.from_dict(data["env"])
        except Exception as exc:
            raise ConfigError(f"env: {exc}") from exc
    elif mode == "sde-environmental":
        raise ConfigError("env: required for mode 'sde-environmental'")

    needs_sim = mode in ("ode", "sde-demographic", "sde-environmental", "rankdiff")
    sim = n_paths = None
    if "sim" in data:
        if not needs_sim:
            raise ConfigError(f"sim: not valid for mode {mode!r}")
        sim, n_paths = _parse_sim(data["sim"], mode, env, "sim")
    elif needs_sim:
        raise ConfigError(f"sim: required for mode {mode!r}")
    if mode in ("sde-demographic", "sde-environmental", "rankdiff") and n_paths is None:
        raise ConfigError("sim.n_paths: required for ensemble modes")

    scan = None
    if "scan" in data:
        if mode != "scan1d":
            raise ConfigError("scan: only valid for mode 'scan1d'")
        block = data["scan"]
        if not isinstance(block, dict):
            raise ConfigError("scan: expected an object")
        _reject_unknown(block, {"parameter", "range", "points"}, "scan.")
        pname = _need(block, "parameter", "scan.")
        if pname not in PARAM_RANGES:
            raise ConfigError(
                f"scan.parameter: {pname!r} has no documented sweep range "
                f"(choose from {sorted(PARAM_RANGES)})")
        rng = _need(block, "range", "scan.")
        if not isinstance(rng, list) or len(rng) != 2:
            raise ConfigError("scan.range: expected [lo, hi]")
        lo = _as_number(rng[0], "scan.range[0]")
        hi = _as_number(rng[1], "scan.range[1]")
        if not lo < hi:
            raise ConfigError("scan.range: must be increasing")
        points = _as_int(block.get("points", 240), "scan.points")
        if points < 200:
            raise ConfigError("scan.points: need at least 200 grid points")
        scan = Scan1D(pname, lo, hi, points)
    elif mode == "scan1d":
        raise ConfigError("scan: required for mode 'scan1d'")

    scan2 = None
    if "scan2" in data:
        if mode != "scan2d":
            raise ConfigError("scan2: only valid for mode 'scan2d'")
        block = data["scan2"]
        if not isinstance(block, dict):
            raise ConfigError("scan2: expected an object")
        _reject_unknown(block, {"parameter", "range", "slices", "points"}, "scan2.")
        pname = _need(block, "parameter", "scan2.")
        if pname not in ("b", "gamma", "eta"):
            raise ConfigError("scan2.parameter: must be one of 'b', 'gamma', 'eta'")
        rng = _need(block, "range", "scan2.")
        if not isinstance(rng, list) or len(rng) != 2:
            raise ConfigError("scan2.range: expected [lo, hi]")
        lo = _as_number(rng[0], "scan2.range[0]")
        hi = _as_number(rng[1], "scan2.range[1]")
        if not lo < hi:
            raise ConfigError("scan2.range: must be increasing")
        slices = _as_int(block.get("slices", 12), "scan2.slices")
        if slices < 2:
            raise ConfigError("scan2.slices: need at least 2 slices")
        points = _as_int(block.get("points", 240), "scan2.points")
        if points < 200:
            raise ConfigError("scan2.points: need at least 200 grid points")
        scan2 = Scan2D(pname, lo, hi, slices, points)
    elif mode == "scan2d":
        raise ConfigError("scan2: required for mode 'scan2d'")

    contour = None
    if "contour" in data:
        if mode != "contour":
            raise ConfigError("contour: only valid for mode 'contour'")
        block = data["contour"]
        if not isinstance(block, dict):
            raise ConfigError("contour: expected an object")
        _reject_unknown(block, {"b_range", "gamma_range", "points"}, "contour.")
        ranges = {}
        for key in ("b_range", "gamma_range"):
            rng = _need(block, key, "contour.")
            if not isinstance(rng, list) or len(rng) != 2:
                raise ConfigError(f"contour.{key}: expected [lo, hi]")
            lo = _as_number(rng[0], f"contour.{key}[0]")
            hi = _as_number(rng[1], f"contour.{key}[1]")
            if not 0.0 < lo < hi:
                raise ConfigError(f"contour.{key}: must be increasing and positive")
            ranges[key] = (lo, hi)
        pts = block.get("points", [60, 60])
        if not isinstance(pts, list) or len(pts) != 2:
            raise ConfigError("contour.points: expected [n_b, n_gamma]")
        nb = _as_int(pts[0], "contour.points[0]")
        ng = _as_int(pts[1], "contour.points[1]")
        if nb < 2 or ng < 2:
            raise ConfigError("contour.points: need at least 2 points per axis")
        contour = ContourGrid(ranges["b_range"][0], ranges["b_range"][1],
                              ranges["gamma_range"][0], ranges["gamma_range"][1], nb, ng)
    elif mode == "contour":
        raise ConfigError("contour: required for mode 'contour'")

    rank = None
    if "rank" in data:
        if mode != "rankdiff":
            raise ConfigError("rank: only valid for mode 'rankdiff'")
        block = data["rank"]
        if not isinstance(block, dict):
            raise ConfigError("rank: expected an object")
        _reject_unknown(block, {"times", "variable"}, "rank.")
        times = _need(block, "times", "rank.")
        if not isinstance(times, list) or len(times) != 2:
            raise ConfigError("rank.times: expected [t1, t2]")
        t1 = _as_number(times[0], "rank.times[0]")
        t2 = _as_number(times[1], "rank.times[1]")
        if not 0.0 <= t1 < t2:
            raise ConfigError("rank.times: need 0 <= t1 < t2")
        if sim is not None and t2 > sim.t_end:
            raise ConfigError("rank.times[1]: exceeds sim.t_end")
        variable = block.get("variable", "B")
        if variable not in STATE_NAMES:
            raise ConfigError(f"rank.variable: must be one of {list(STATE_NAMES)}")
        rank = RankSpec((t1, t2), variable)
    elif mode == "rankdiff":
        raise ConfigError("rank: required for mode 'rankdiff'")

    cases = None
    if "cases" in data:
        if mode != "ode":
            raise ConfigError("cases: only valid for mode 'ode'")
        block = data["cases"]
        if not isinstance(block, list) or not block:
            raise ConfigError("cases: expected a non-empty list")
        seen: set[str] = set()
        parsed: list[Case] = []
        for i, item in enumerate(block):
            path = f"cases[{i}]"
            if not isinstance(item, dict):
                raise ConfigError(f"{path}: expected an object")
            _reject_unknown(item, {"label", "params", "init"}, f"{path}.")
            label = _check_label(_need(item, "label", f"{path}."), f"{path}.label")
            if label in seen:
                raise ConfigError(f"{path}.label: duplicate label {label!r}")
            seen.add(label)
            cparams = _parse_overrides(item.get("params", {}), params,
                                       f"{path}.params", range_check)
            cinit = _parse_init(item["init"], f"{path}.init") if "init" in item else None
            parsed.append(Case(label, cparams, cinit))
        cases = tuple(parsed)

    outputs = _parse_outputs(data.get("outputs"), mode, "outputs")
    return Scenario(name=name, mode=mode, params=params, init=init, sim=sim,
                    n_paths=n_paths, scan=scan, scan2=scan2, contour=contour,
                    rank=rank, cases=cases, outputs=outputs, range_check=range_check)


def parse_config(text: str) -> Scenario:
    """Parse one JSON scenario document into a validated Scenario."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return scenario_from_dict(data)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def _override_dict(params: ModelParams, base: ModelParams) -> dict:
    return {n: getattr(params, n) for n in PARAM_NAMES
            if getattr(params, n) != getattr(base, n)}


def scenario_to_dict(scenario: Scenario) -> dict:
    """Canonical JSON-ready dictionary (minimal parameter overrides)."""
    data: dict = {"schema": 1, "name": scenario.name, "mode": scenario.mode}
    overrides = _override_dict(scenario.params, ModelParams())
    if overrides:
        data["params"] = overrides
    if scenario.init is not None:
        data["init"] = list(scenario.init)
    if scenario.sim is not None:
        sim = {"t_end": scenario.sim.t_end, "dt": scenario.sim.dt,
               "record_stride": scenario.sim.record_stride, "seed": scenario.sim.seed}
        if scenario.n_paths is not None:
            sim["n_paths"] = scenario.n_paths
        data["sim"] = sim
    if scenario.env is not None:
        data["env"] = scenario.env.to_dict()
    if scenario.scan is not None:
        data["scan"] = {"parameter": scenario.scan.parameter,
                        "range": [scenario.scan.lo, scenario.scan.hi],
                        "points": scenario.scan.points}
    if scenario.scan2 is not None:
        data["scan2"] = {"parameter": scenario.scan2.parameter,
                         "range": [scenario.scan2.lo, scenario.scan2.hi],
                         "slices": scenario.scan2.slices,
                         "points": scenario.scan2.points}
    if scenario.contour is not None:
        c = scenario.contour
        data["contour"] = {"b_range": [c.b_lo, c.b_hi],
                           "gamma_range": [c.gamma_lo, c.gamma_hi],
                           "points": [c.b_points, c.gamma_points]}
    if scenario.rank is not None:
        data["rank"] = {"times": list(scenario.rank.times),
                        "variable": scenario.rank.variable}
    if scenario.cases is not None:
        cases = []
        for case in scenario.cases:
            item: dict = {"label": case.label}
            c_over = _override_dict(case.params, scenario.params)
            if c_over:
                item["params"] = c_over
            if case.init is not None:
                item["init"] = list(case.init)
            cases.append(item)
        data["cases"] = cases
    data["outputs"] = list(scenario.outputs)
    if scenario.range_check:
        data["range_check"] = True
    return data


def serialize_config(scenario: Scenario) -> str:
    """JSON text such that ``parse_config(serialize_config(s)) == s``."""
    return json.dumps(scenario_to_dict(scenario), indent=2) + "\n"


# --------------------------------------------------------------------------
# run dispatcher
# --------------------------------------------------------------------------

def _recording_times(sim: SimConfig) -> np.ndarray:
    n_rows = sim.n_steps // sim.record_stride
    steps = np.arange(0, n_rows + 1) * sim.record_stride
    return steps.astype(np.float64) * sim.dt


def _trajectory_table(name: str, init, params: ModelParams, sim: SimConfig) -> Table:
    traj = integrate(init, params, sim.t_end)
    times = _recording_times(sim)
    states = traj.sample(times)
    rows = [(float(t), *map(float, s)) for t, s in zip(times, states)]
    return Table(name, ("t",) + STATE_NAMES, rows)


def _run_ode(scenario: Scenario) -> list[Table]:
    cases = scenario.cases
    if cases is None:
        return [_trajectory_table(f"{scenario.name}-trajectory", scenario.init,
                                  scenario.params, scenario.sim)]
    tables = []
    for case in cases:
        init = case.init if case.init is not None else scenario.init
        tables.append(_trajectory_table(f"{scenario.name}-{case.label}", init,
                                        case.params, scenario.sim))
    return tables


def _run_sde(scenario: Scenario) -> list[Table]:
    summary = run_ensemble(scenario.init, scenario.params, scenario.sim,
                           scenario.n_paths)
    tables: list[Table] = []
    for output in scenario.outputs:
        if output == "timeseries":
            header = (("t",) + tuple(f"mean_{v}" for v in STATE_NAMES)
                      + tuple(f"std_{v}" for v in STATE_NAMES))
            blocks = [summary.times[:, None], summary.mean_ts, summary.std_ts]
            if summary.env_mean_ts is not None:
                header += (tuple(f"env_mean_{v}" for v in ENV_TARGETS)
                           + tuple(f"env_std_{v}" for v in ENV_TARGETS))
                blocks += [summary.env_mean_ts, summary.env_std_ts]
            data = np.hstack(blocks)
            rows = [tuple(map(float, r)) for r in data]
            tables.append(Table(f"{scenario.name}-timeseries", header, rows))
        elif output == "histograms":
            for k, var in enumerate(STATE_NAMES):
                hist = histogram(summary.end_samples[:, k], bins=100, variable=var)
                rows = [(float(hist.bin_edges[i]), float(hist.bin_edges[i + 1]),
                         int(hist.counts[i])) for i in range(len(hist.counts))]
                tables.append(Table(f"{scenario.name}-hist-{var}",
                                    ("bin_lo", "bin_hi", "count"), rows))
        elif output == "paths":
            times = _recording_times(scenario.sim)
            env_cols = ENV_TARGETS if scenario.mode == "sde-environmental" else ()
            for idx in range(min(_N_SAMPLE_PATHS, scenario.n_paths)):
                result = simulate_path(scenario.init, scenario.params,
                                       scenario.sim, idx)
                rows = []
                for j in range(result.times.size):
                    row = (float(result.times[j]), *map(float, result.states[j]))
                    if env_cols:
                        row += tuple(map(float, result.env_values[j]))
                    rows.append(row)
                tables.append(Table(f"{scenario.name}-path-{idx + 1}",
                                    ("t",) + STATE_NAMES + tuple(env_cols), rows))
            tables.append(_trajectory_table(f"{scenario.name}-ode-reference",
                                            scenario.init, scenario.params,
                                            scenario.sim))
        elif output == "endpoints":
            rows = [(i, *map(float, summary.end_samples[i]))
                    for i in range(summary.end_samples.shape[0])]
            tables.append(Table(f"{scenario.name}-endpoints",
                                ("path_index",) + STATE_NAMES, rows))
    return tables


def _equilibrium_rows(params: ModelParams) -> list[tuple]:
    records = [trivial_equilibrium(params)] + infected_equilibria(params)
    rows = []
    for rec in records:
        rows.append((rec.branch_tag, *map(float, rec.state), rec.stability,
                     float(rec.max_real_eig)))
    return rows


def _run_equilibria(scenario: Scenario) -> list[Table]:
    header = ("branch_tag",) + STATE_NAMES + ("stability", "max_real_eig")
    return [Table(f"{scenario.name}-equilibria", header,
                  _equilibrium_rows(scenario.params))]


def _run_scan1d(scenario: Scenario) -> list[Table]:
    scan = scenario.scan
    diagram = branch_scan(scenario.params, scan.parameter, (scan.lo, scan.hi),
                          scan.points)
    rows = []
    for value, records in zip(diagram.parameter_values, diagram.equilibria_per_value):
        for rec in records:
            rows.append((float(value), rec.branch_tag, *map(float, rec.state),
                         rec.stability))
    header = (scan.parameter, "branch_tag") + STATE_NAMES + ("stability",)
    return [Table(f"{scenario.name}-branches", header, rows)]


def _run_scan2d(scenario: Scenario) -> list[Table]:
    scan2 = scenario.scan2
    trace = boundary_trace_2d(scenario.params, scan2.parameter,
                              (scan2.lo, scan2.hi), scan2.slices, scan2.points)
    rows = []
    for kind, polylines in (("LP", trace.lp_polylines), ("BP", trace.bp_polylines)):
        for branch, line in enumerate(polylines):
            for point in line:
                rows.append((kind, branch, float(point[0]), float(point[1])))
    header = ("kind", "branch", "delta", scan2.parameter)
    return [Table(f"{scenario.name}-boundaries", header, rows)]


def _run_contour(scenario: Scenario) -> list[Table]:
    grid = scenario.contour
    b_values = np.linspace(grid.b_lo, grid.b_hi, grid.b_points)
    gamma_values = np.linspace(grid.gamma_lo, grid.gamma_hi, grid.gamma_points)
    lam = lambda1_contour(scenario.params, b_values, gamma_values)
    rows = []
    for i, b in enumerate(b_values):
        for j, g in enumerate(gamma_values):
            rows.append((float(b), float(g), float(lam[i, j])))
    return [Table(f"{scenario.name}-contour", ("b", "gamma", "lambda1"), rows)]


def _run_rankdiff(scenario: Scenario) -> list[Table]:
    sim, rank = scenario.sim, scenario.rank
    times = _recording_times(sim)
    idx = [int(np.argmin(np.abs(times - t))) for t in rank.times]
    col = STATE_NAMES.index(rank.variable)
    v1, v2, skipped = [], [], 0
    for path in range(scenario.n_paths):
        result = simulate_path(scenario.init, scenario.params, sim, path)
        if result.overflow:
            skipped += 1
            continue
        v1.append(float(result.states[idx[0], col]))
        v2.append(float(result.states[idx[1], col]))
    if skipped > 0.01 * scenario.n_paths:
        raise EnsembleError(f"{skipped} of {scenario.n_paths} paths overflowed")
    data = rank_diff(np.array(v1), np.array(v2))
    rows = [(int(r[0]), float(r[1]), float(r[2]), float(r[3])) for r in data]
    return [Table(f"{scenario.name}-rankdiff",
                  ("rank", "value_t1", "value_t2", "difference"), rows)]


def run_scenario(scenario: Scenario) -> list[Table]:
    """Execute one scenario and return its output tables."""
    if scenario.init is not None:
        validate_state(np.asarray(scenario.init, dtype=np.float64))
    dispatch = {
        "ode": _run_ode,
        "sde-demographic": _run_sde,
        "sde-environmental": _run_sde,
        "equilibria": _run_equilibria,
        "scan1d": _run_scan1d,
        "scan2d": _run_scan2d,
        "contour": _run_contour,
        "rankdiff": _run_rankdiff,
    }
    return dispatch[scenario.mode](scenario)


# --------------------------------------------------------------------------
# presets
# --------------------------------------------------------------------------

# Calibration note: most presets replace the default eta=1.25e-8 with
# eta=1.25e-9.  The reference bifurcation thresholds (delta_0=0.2956,
# LP at 0.2621/0.2944) and the reference simulation statistics are
# reproduced only under the smaller value, so those presets pin it
# explicitly; the growth-rate presets (fig8*, fig-lam1-*) use the
# defaults unchanged.
_ETA_PARITY = 1.25e-9

_F7_FAST = 0.5
_F7_SLOW = 0.05


def _ode_preset(name, params, init, t_end, cases=None, dt=0.1, stride=10):
    sim = SimConfig(t_end=t_end, dt=dt, record_stride=stride, seed=0,
                    model="Demographic", env=None)
    return Scenario(name=name, mode="ode", params=params, init=init, sim=sim,
                    cases=cases, outputs=("trajectory",))


def _sde_preset(name, params, init, t_end, seed, n_paths, env=None,
                outputs=("timeseries", "histograms", "paths")):
    mode = "sde-environmental" if env is not None else "sde-demographic"
    sim = SimConfig(t_end=t_end, dt=0.01, record_stride=100, seed=seed,
                    model="Environmental" if env is not None else "Demographic",
                    env=env)
    return Scenario(name=name, mode=mode, params=params, init=init, sim=sim,
                    n_paths=n_paths, outputs=outputs)


def _fig1a() -> Scenario:
    return Scenario(name="fig1a", mode="scan1d",
                    params=ModelParams(eta=_ETA_PARITY),
                    scan=Scan1D("delta", 1e-5, 0.35, 350),
                    outputs=("branches",))


# fig1bc trajectory panel: the distinct (delta, init) cases, each
# integrated long enough for its outcome to settle.
_FIG1BC_CASES = (
    ("delta-0.05-clearance", 0.05, (1e6, 1.0, 15.0, 40.0)),
    ("delta-0.20-clearance", 0.20, (1e6, 1.0, 1.0, 40.0)),
    ("delta-0.20-active", 0.20, (3e5, 2e3, 2.5e4, 3.7e6)),
    ("delta-0.27-clearance", 0.27, (6e5, 1.0, 8.0, 90.0)),
    ("delta-0.27-ltbi", 0.27, (456923.08, 267.84, 4.2e3, 712350.9)),
    ("delta-0.27-active", 0.27, (456923.08, 267.84, 4.8e3, 712350.9)),
    ("delta-0.35-active", 0.35, (1e6, 1.0, 1.0, 40.0)),
)


def _fig1bc() -> Scenario:
    base = ModelParams(eta=_ETA_PARITY)
    cases = tuple(Case(label, base.replace(delta=d), init)
                  for label, d, init in _FIG1BC_CASES)
    return _ode_preset("fig1bc", base, _FIG1BC_CASES[0][2], 2000.0, cases)


def _fig2() -> Scenario:
    return _sde_preset("fig2", ModelParams(eta=_ETA_PARITY, delta=0.2),
                       (4.99e5, 1.0, 10.0, 1000.0), 300.0, seed=11, n_paths=10000)


def _fig3() -> Scenario:
    return _sde_preset("fig3", ModelParams(eta=_ETA_PARITY, delta=0.2),
                       (2e4, 1e3, 1e5, 1e3), 100.0, seed=12, n_paths=10000)


def _fig4() -> Scenario:
    return _sde_preset("fig4", ModelParams(eta=_ETA_PARITY, delta=0.27),
                       (4.99e5, 4.0, 4.0, 75.0), 300.0, seed=13, n_paths=10000)


def _fig5() -> Scenario:
    return _sde_preset("fig5", ModelParams(eta=_ETA_PARITY, delta=0.35),
                       (4.99e5, 4.0, 4.0, 75.0), 1300.0, seed=50, n_paths=10000)


def _fig_order() -> Scenario:
    params = ModelParams(eta=_ETA_PARITY, delta=0.35)
    sim = SimConfig(t_end=1327.0, dt=0.01, record_stride=100, seed=50,
                    model="Demographic", env=None)
    return Scenario(name="fig-order", mode="rankdiff", params=params,
                    init=(4.99e5, 4.0, 4.0, 75.0), sim=sim, n_paths=10000,
                    rank=RankSpec((1246.0, 1327.0), "B"), outputs=("rankdiff",))


def _fig6(letter: str) -> Scenario:
    second, rng = {"a": ("b", (0.05, 0.5)), "b": ("gamma", (0.1, 2.0)),
                   "c": ("eta", (1.25e-9, 1.25e-7))}[letter]
    params = ModelParams() if letter == "c" else ModelParams(eta=_ETA_PARITY)
    return Scenario(name=f"fig6{letter}", mode="scan2d", params=params,
                    scan2=Scan2D(second, rng[0], rng[1], 12, 240),
                    outputs=("boundaries",))


_FIG7_ROWS = {
    "b": {"region2": {"delta": 0.2, "b": 0.1}, "region3": {"delta": 0.2, "b": 0.17}},
    "gamma": {"region2": {"delta": 0.2, "gamma": 1.5},
              "region3": {"delta": 0.2, "gamma": 1.05}},
    "eta": {"region2": {"eta": 5e-8, "delta": 0.1},
            "region3": {"eta": 5e-8, "delta": 0.285}},
}
_FIG7_SEEDS = {("b", "region2", "fast"): 71, ("b", "region2", "slow"): 72,
               ("b", "region3", "fast"): 73, ("b", "region3", "slow"): 74,
               ("gamma", "region2", "fast"): 75, ("gamma", "region2", "slow"): 76,
               ("gamma", "region3", "fast"): 77, ("gamma", "region3", "slow"): 78,
               ("eta", "region2", "fast"): 79, ("eta", "region2", "slow"): 80,
               ("eta", "region3", "fast"): 81, ("eta", "region3", "slow"): 82}


def _fig7(row: str, region: str, speed: str) -> Scenario:
    overrides = _FIG7_ROWS[row][region]
    base = ModelParams() if row == "eta" else ModelParams(eta=_ETA_PARITY)
    params = base.replace(**overrides)
    alpha = _F7_FAST if speed == "fast" else _F7_SLOW
    env = EnvProcessParams.with_return_rate(params, alpha)
    return _sde_preset(f"fig7-{row}-{region}-{speed}", params,
                       (5e5, 1.0, 10.0, 1000.0), 600.0,
                       seed=_FIG7_SEEDS[(row, region, speed)], n_paths=200,
                       env=env, outputs=("paths",))


def _fig8(letter: str) -> Scenario:
    base = ModelParams()                    # unmodified defaults
    d0 = delta_threshold(base)
    deltas = {"a": (("delta-0.25", 0.25), ("delta-0.28", 0.28)),
              "b": (("delta-threshold", d0), ("delta-0.31", 0.31),
                    ("delta-0.34", 0.34))}[letter]
    cases = tuple(Case(label, base.replace(delta=d)) for label, d in deltas)
    return _ode_preset(f"fig8{letter}", base, (5e5, 1.0, 10.0, 1000.0), 300.0, cases)


def _fig_eta(letter: str) -> Scenario:
    if letter == "a":
        base = ModelParams(delta=0.2, eta=_ETA_PARITY)
        cases = (Case("eta-base", base),
                 Case("eta-boosted", base.replace(eta=5e-8)))
    else:
        base = ModelParams(delta=0.2, eta=5e-8)
        cases = (Case("delta-0.20", base),
                 Case("delta-0.10", base.replace(delta=0.1)))
    return _ode_preset(f"fig-eta-{letter}", base, (5e5, 1.0, 10.0, 1000.0),
                       300.0, cases)


def _fig_lam1(letter: str) -> Scenario:
    n = {"a": {"N1": 50.0, "N2": 30.0, "N3": 25.0},
         "b": {"N1": 10.0, "N2": 20.0, "N3": 25.0}}[letter]
    return Scenario(name=f"fig-lam1-{letter}", mode="contour",
                    params=ModelParams().replace(**n),
                    contour=ContourGrid(0.05, 0.5, 0.1, 2.0, 60, 60),
                    outputs=("contour",))


_PRESET_BUILDERS = {
    "fig1a": _fig1a,
    "fig1bc": _fig1bc,
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig-order": _fig_order,
    "fig6a": lambda: _fig6("a"),
    "fig6b": lambda: _fig6("b"),
    "fig6c": lambda: _fig6("c"),
    "fig8a": lambda: _fig8("a"),
    "fig8b": lambda: _fig8("b"),
    "fig-eta-a": lambda: _fig_eta("a"),
    "fig-eta-b": lambda: _fig_eta("b"),
    "fig-lam1-a": lambda: _fig_lam1("a"),
    "fig-lam1-b": lambda: _fig_lam1("b"),
}
for _row in ("b", "gamma", "eta"):
    for _region in ("region2", "region3"):
        for _speed in ("fast", "slow"):
            _PRESET_BUILDERS[f"fig7-{_row}-{_region}-{_speed}"] = (
                lambda r=_row, g=_region, s=_speed: _fig7(r, g, s))

PRESET_NAMES = tuple(sorted(_PRESET_BUILDERS))


def preset(name: str) -> Scenario:
    """Return the named figure-reproducing scenario."""
    try:
        builder = _PRESET_BUILDERS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available presets: {', '.join(PRESET_NAMES)}"
        ) from None
    return builder()


def scale_preset(scenario: Scenario, n_paths: int | None = None,
                 dt: float | None = None, seed: int | None = None) -> Scenario:
    """Preset with path count / step size / seed replaced (CLI flags)."""
    if scenario.sim is None:
        if n_paths is not None or dt is not None or seed is not None:
            raise ConfigError(
                f"mode {scenario.mode!r} has no simulation settings to override")
        return scenario
    sim = scenario.sim
    changes: dict = {}
    if dt is not None:
        changes["dt"] = dt
    if seed is not None:
        changes["seed"] = seed
    if changes:
        sim = dataclasses.replace(sim, **changes)
    out = dataclasses.replace(scenario, sim=sim)
    if n_paths is not None:
        if scenario.n_paths is None:
            raise ConfigError(f"mode {scenario.mode!r} has no path count to override")
        out = dataclasses.replace(out, n_paths=n_paths)
    return out
