"""Parameter sweeps: fold (LP) and transcritical (BP) points, region labels.

Fold refinement bisects on the number of infected equilibria rather than on
a test function, so no Jacobian needs evaluating at the singular fold
itself.  Because one infected branch crosses the trivial state at the
transcritical point (where the quadratic characteristic coefficient c2
vanishes), raw counts change by 1 there; counts are corrected by +1 on the
c2 < 0 side, which restores the parity invariant that every remaining
change is a fold (+/-2).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .equilibria import (EquilibriumRecord, char_coeffs, delta_threshold,
                         infected_equilibria, trivial_equilibrium)
from .errors import (DomainError, GridTooCoarseError, InternalConsistencyError)
from .model import jacobian
from .params import PARAM_RANGES, ModelParams

__all__ = [
    "BranchDiagram",
    "BifPoint",
    "RegionLabel",
    "BoundaryTrace",
    "branch_scan",
    "detect_folds",
    "detect_branch_point",
    "classify_region",
    "boundary_trace_2d",
]

log = logging.getLogger("tbdyn.bifurcation")

#: Relative bisection tolerance for fold locations.
FOLD_TOL = 1e-6

#: Relative agreement demanded between closed-form and bisected BP location.
BP_CONSISTENCY_TOL = 1e-6


@dataclass
class BranchDiagram:
    """Equilibria collected along a one-parameter sweep."""

    parameter_name: str
    parameter_values: np.ndarray
    equilibria_per_value: list[list[EquilibriumRecord]]
    params: ModelParams                       # base parameters (swept one ignored)
    diagnostics: list[tuple[float, str]] = field(default_factory=list)

    def infected_counts(self) -> np.ndarray:
        return np.array([sum(r.branch_tag != "Trivial" for r in recs)
                         for recs in self.equilibria_per_value])

    def stable_counts(self) -> np.ndarray:
        return np.array([sum(r.stability == "Stable" for r in recs)
                         for recs in self.equilibria_per_value])


@dataclass
class BifPoint:
    """A located bifurcation point."""

    kind: str                     # "LP" (fold) or "BP" (transcritical)
    parameter_value: float
    state: np.ndarray

    @property
    def B(self) -> float:
        return float(self.state[2])


@dataclass
class RegionLabel:
    """Which of the fold-delimited proliferation-rate regions holds delta."""

    region: int
    bounds: tuple[float, float]
    degenerate: bool = False


@dataclass
class BoundaryTrace:
    """Fold/transcritical boundary polylines in a two-parameter plane."""

    second_param: str
    lp_polylines: list[np.ndarray]            # each (m, 2): columns (delta, second)
    bp_polylines: list[np.ndarray]
    gap_flags: list[str]                      # human-readable gap notes
    failures: list[tuple[float, str]]         # (slice value, message)


def _check_range(param_name: str, lo: float, hi: float) -> None:
    if param_name not in PARAM_RANGES:
        raise DomainError(f"no sweep range is defined for parameter {param_name!r}")
    p_lo, p_hi = PARAM_RANGES[param_name]
    slack = 1e-12 * max(abs(p_lo), abs(p_hi))
    if not (lo < hi):
        raise DomainError("sweep range must be increasing")
    if lo < min(0.0, p_lo) - slack or hi > p_hi + slack:
        raise DomainError(
            f"{param_name} sweep range ({lo:g}, {hi:g}) exceeds the studied bounds {PARAM_RANGES[param_name]}")


def branch_scan(params: ModelParams, param_name: str, range: tuple[float, float],
                grid_points: int = 240) -> BranchDiagram:
    """Collect the trivial and infected equilibria along a parameter grid.

    Per-point solver failures are recorded in ``diagnostics`` and the scan
    continues.
    """
    lo, hi = float(range[0]), float(range[1])
    _check_range(param_name, lo, hi)
    if grid_points < 200:
        raise DomainError("grid_points must be >= 200")
    # Log-spaced grids resolve the fold at tiny delta; prepend the exact
    # lower endpoint so a zero endpoint is honoured.
    if lo > 0.0:
        values = np.geomspace(lo, hi, grid_points)
    else:
        values = np.concatenate([[lo], np.geomspace(max(hi * 1e-5, 1e-12), hi, grid_points - 1)])
    diagram = BranchDiagram(param_name, values, [], params)
    for v in values:
        here = params.replace(**{param_name: float(v)})
        recs = [trivial_equilibrium(here)]
        try:
            recs.extend(infected_equilibria(here))
        except Exception as exc:  # propagate as diagnostics, keep scanning
            diagram.diagnostics.append((float(v), f"{type(exc).__name__}: {exc}"))
            log.warning("equilibrium scan failed at %s=%g: %s", param_name, v, exc)
        diagram.equilibria_per_value.append(recs)
    return diagram


def _corrected_count(params: ModelParams, param_name: str, value: float) -> int:
    here = params.replace(**{param_name: float(value)})
    n = len(infected_equilibria(here))
    # One infected branch leaves through the trivial state where c2 = 0;
    # counting it as present on the c2 < 0 side keeps all changes even.
    if char_coeffs(here).c2 < 0.0:
        n += 1
    return n


def _merging_state(params: ModelParams, param_name: str, value: float) -> np.ndarray:
    """State of the merging pair: the closest adjacent pair in log B."""
    here = params.replace(**{param_name: float(value)})
    recs = sorted(infected_equilibria(here), key=lambda r: r.B)
    if len(recs) < 2:
        raise GridTooCoarseError(
            f"no merging pair visible at {param_name}={value:g}")
    gaps = [math.log(b.B / a.B) for a, b in zip(recs[:-1], recs[1:])]
    i = int(np.argmin(gaps))
    return 0.5 * (recs[i].state + recs[i + 1].state)


def _refine_fold_cell(params: ModelParams, param_name: str,
                      lo: float, hi: float, n_lo: int, n_hi: int,
                      out: list[BifPoint]) -> None:
    change = n_hi - n_lo
    if change == 0:
        return
    if change % 2 != 0:
        raise GridTooCoarseError(
            f"infected-equilibrium count changes by {change} across "
            f"{param_name} in ({lo:.9g}, {hi:.9g}); refine the scan grid")
    if hi - lo <= FOLD_TOL * max(abs(lo), abs(hi)):
        if abs(change) != 2:
            raise GridTooCoarseError(
                f"unresolved multiple folds in {param_name} cell ({lo:.9g}, {hi:.9g})")
        value = 0.5 * (lo + hi)
        side = lo if n_lo > n_hi else hi
        out.append(BifPoint("LP", value, _merging_state(params, param_name, side)))
        return
    mid = 0.5 * (lo + hi)
    n_mid = _corrected_count(params, param_name, mid)
    _refine_fold_cell(params, param_name, lo, mid, n_lo, n_mid, out)
    _refine_fold_cell(params, param_name, mid, hi, n_mid, n_hi, out)


def detect_folds(diagram: BranchDiagram) -> list[BifPoint]:
    """Locate the saddle-node points of a one-parameter diagram.

    Brackets where the (transcritical-corrected) infected count changes by
    +/-2 are bisected to 1e-6 relative; each fold is returned with the
    merging state.  An odd change across a cell raises a grid-too-coarse
    error naming the cell.
    """
    params, name = diagram.params, diagram.parameter_name
    values = diagram.parameter_values
    counts = diagram.infected_counts().copy()
    for i, v in enumerate(values):
        if char_coeffs(params.replace(**{name: float(v)})).c2 < 0.0:
            counts[i] += 1
    folds: list[BifPoint] = []
    for i in range(values.size - 1):
        _refine_fold_cell(params, name, float(values[i]), float(values[i + 1]),
                          int(counts[i]), int(counts[i + 1]), folds)
    folds.sort(key=lambda pt: pt.parameter_value)
    return folds


def _max_real_eig_trivial(params: ModelParams) -> float:
    state = trivial_equilibrium(params).state
    return float(np.max(np.linalg.eigvals(jacobian(state, params, check=False)).real))


def detect_branch_point(params: ModelParams) -> BifPoint:
    """Locate the transcritical point in delta: closed form, cross-validated.

    The closed-form root of c2(delta) = 0 is compared against a bisection
    on the sign of the trivial state's leading numeric eigenvalue; a
    relative disagreement beyond 1e-6 raises an internal-consistency error.
    """
    d0 = delta_threshold(params)
    if not (d0 > 0.0 and math.isfinite(d0)):
        raise DomainError(f"transcritical threshold {d0:g} is not a positive rate")
    lo, hi = 0.5 * d0, 1.5 * d0
    f_lo = _max_real_eig_trivial(params.replace(delta=lo))
    f_hi = _max_real_eig_trivial(params.replace(delta=hi))
    for _ in range(60):
        if f_lo < 0.0 < f_hi:
            break
        lo, hi = 0.5 * lo, 1.5 * hi
        f_lo = _max_real_eig_trivial(params.replace(delta=lo))
        f_hi = _max_real_eig_trivial(params.replace(delta=hi))
    else:
        raise InternalConsistencyError("no stability change bracketed around the closed-form threshold")
    while hi - lo > 1e-11 * hi:
        mid = 0.5 * (lo + hi)
        if _max_real_eig_trivial(params.replace(delta=mid)) < 0.0:
            lo = mid
        else:
            hi = mid
    d_numeric = 0.5 * (lo + hi)
    if abs(d_numeric - d0) > BP_CONSISTENCY_TOL * abs(d0):
        raise InternalConsistencyError(
            f"closed-form threshold {d0:.12g} and eigenvalue bisection {d_numeric:.12g} "
            f"disagree beyond {BP_CONSISTENCY_TOL:g} relative")
    return BifPoint("BP", d0, trivial_equilibrium(params.replace(delta=d0)).state)


def classify_region(params: ModelParams, grid_points: int = 280) -> RegionLabel:
    """Which fold-delimited region of the proliferation rate holds params.delta.

    Folds are recomputed for the given non-delta parameters over the studied
    delta range.  Fewer than three folds yields the reduced partition with
    the degenerate flag set.
    """
    diagram = branch_scan(params, "delta", (0.0, PARAM_RANGES["delta"][1]), grid_points)
    folds = [pt.parameter_value for pt in detect_folds(diagram)]
    delta = params.delta
    degenerate = len(folds) != 3
    if degenerate:
        log.warning("degenerate region structure: %d folds at %s", len(folds), folds)
    edges = [0.0] + folds + [math.inf]
    for region, (lo, hi) in enumerate(zip(edges[:-1], edges[1:]), start=1):
        if lo <= delta < hi or (hi == math.inf and delta >= lo):
            return RegionLabel(region, (lo, hi), degenerate)
    return RegionLabel(1, (0.0, edges[1]), degenerate)  # delta < 0 cannot occur


def boundary_trace_2d(params: ModelParams, second_param: str,
                      second_range: tuple[float, float], slices: int = 12,
                      grid_points: int = 240) -> BoundaryTrace:
    """Trace fold and transcritical boundary curves in a 2-parameter plane.

    For each slice of `second_param`, the delta axis is scanned and its
    fold/transcritical points collected; same-kind points are joined into
    polylines by nearest-neighbour continuation in delta.
    """
    if second_param not in ("b", "gamma", "eta"):
        raise DomainError("second_param must be one of b, gamma, eta")
    lo, hi = float(second_range[0]), float(second_range[1])
    _check_range(second_param, lo, hi)
    if slices < 2:
        raise DomainError("need at least 2 slices")
    if hi / max(lo, 1e-300) > 30.0:      # decades-spanning ranges get log spacing
        values = np.geomspace(lo, hi, slices)
    else:
        values = np.linspace(lo, hi, slices)

    per_slice: dict[str, list[list[tuple[float, float]]]] = {"LP": [], "BP": []}
    failures: list[tuple[float, str]] = []
    for v in values:
        here = params.replace(**{second_param: float(v)})
        lp_pts: list[tuple[float, float]] = []
        bp_pts: list[tuple[float, float]] = []
        try:
            diagram = branch_scan(here, "delta", (0.0, PARAM_RANGES["delta"][1]), grid_points)
            lp_pts = [(pt.parameter_value, float(v)) for pt in detect_folds(diagram)]
            bp = detect_branch_point(here)
            if 0.0 < bp.parameter_value <= PARAM_RANGES["delta"][1]:
                bp_pts = [(bp.parameter_value, float(v))]
        except Exception as exc:
            failures.append((float(v), f"{type(exc).__name__}: {exc}"))
            log.warning("slice %s=%g failed: %s", second_param, v, exc)
        per_slice["LP"].append(lp_pts)
        per_slice["BP"].append(bp_pts)

    gap_flags: list[str] = []

    def _link(kind: str) -> list[np.ndarray]:
        lines: list[list[tuple[float, float]]] = []
        open_lines: list[list[tuple[float, float]]] = []
        for pts, v in zip(per_slice[kind], values):
            taken = [False] * len(open_lines)
            next_open: list[list[tuple[float, float]]] = []
            for pt in sorted(pts):
                best, best_gap = None, math.inf
                for j, line in enumerate(open_lines):
                    if taken[j]:
                        continue
                    gap = abs(math.log(max(pt[0], 1e-300) / max(line[-1][0], 1e-300)))
                    if gap < best_gap:
                        best, best_gap = j, gap
                if best is not None and best_gap < 0.5:
                    taken[best] = True
                    open_lines[best].append(pt)
                    next_open.append(open_lines[best])
                else:
                    fresh = [pt]
                    lines.append(fresh)
                    next_open.append(fresh)
            for j, line in enumerate(open_lines):
                if not taken[j]:
                    gap_flags.append(
                        f"{kind} polyline ending at delta={line[-1][0]:.6g} has no "
                        f"continuation at {second_param}={v:.6g}")
            open_lines = next_open
        return [np.array(line) for line in lines]

    return BoundaryTrace(second_param, _link("LP"), _link("BP"), gap_flags, failures)
