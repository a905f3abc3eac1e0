"""Equilibrium analysis: steady states, spectra, closed-form threshold.

The infected steady states are found by reducing the four steady-state
equations to one scalar residual in the bacterial concentration B:

  f1 = 0      =>  M_u(B) = s_M / (mu_M + beta B)
  N2 f2 + f3 = 0  =>  M_i(B) = B [M_u(B) q - delta (1 - B/K)] / (b (N1 - N2)),
                      q = eta + (N3 - N2) beta
  f4 = 0      =>  T(B): positive root(s) of a cubic with coefficients in
                      (M_i, B)
  residual(B) = f2(M_u(B), M_i(B), B, T(B))

Equilibria are the zeros of the residual on the set where M_i(B) >= 0; that
set is delimited by the roots of a quadratic in B, so the scan never
brackets across an inadmissibility boundary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularityError
from .model import drift, drift_component_scales, jacobian
from .params import ModelParams

__all__ = [
    "EquilibriumRecord",
    "CharCoeffs",
    "STABILITY_TOL",
    "classify_stability",
    "trivial_equilibrium",
    "infected_equilibria",
    "char_coeffs",
    "delta_threshold",
    "eigen_closed_form",
    "lambda1_approx",
    "lambda1_contour",
]

log = logging.getLogger("tbdyn.equilibria")

#: An equilibrium is Marginal when |max Re(lambda)| is below this.
STABILITY_TOL = 1e-7

#: Relative drift-residual bound every returned equilibrium satisfies.
RESIDUAL_TOL = 1e-8

#: Stable infected states with B above this fraction of K are "HighInfected".
_HIGH_BRANCH_FRACTION = 0.01


@dataclass
class EquilibriumRecord:
    """A steady state with its spectrum and classification."""

    state: np.ndarray            # (M_u, M_i, B, T)
    eigenvalues: np.ndarray      # 4 complex numbers
    stability: str               # Stable | Saddle | Unstable | Marginal
    branch_tag: str              # Trivial | LowInfected | MidInfected | HighInfected
    residual: float              # max over components of |drift|/scale

    @property
    def B(self) -> float:
        return float(self.state[2])

    @property
    def max_real_eig(self) -> float:
        return float(np.max(self.eigenvalues.real))


@dataclass(frozen=True)
class CharCoeffs:
    """Quadratic-factor coefficients of the trivial state's characteristic polynomial.

    P(lambda) = (lambda + mu_T)(lambda + mu_M)(lambda^2 + c1 lambda + c2).
    """

    c1: float
    c2: float


def classify_stability(eigenvalues: np.ndarray) -> str:
    re = np.real(eigenvalues)
    max_re = float(np.max(re))
    if abs(max_re) <= STABILITY_TOL:
        return "Marginal"
    if max_re < 0.0:
        return "Stable"
    if float(np.min(re)) < -STABILITY_TOL:
        return "Saddle"
    return "Unstable"


def _relative_residual(state: np.ndarray, params: ModelParams) -> float:
    f = drift(state, params, check=False)
    scales = np.maximum(drift_component_scales(state, params), 1e-300)
    return float(np.max(np.abs(f) / scales))


def char_coeffs(params: ModelParams) -> CharCoeffs:
    p = params
    ratio = p.s_M / p.mu_M
    bg = p.b + p.gamma
    c1 = bg + ratio * (p.N3 * p.beta + p.eta) - p.delta
    c2 = (p.eta * ratio
          - p.beta * ((p.N2 - p.N3) * p.gamma / bg + (p.N1 - p.N3) * p.b / bg) * ratio
          - p.delta) * bg
    return CharCoeffs(c1=c1, c2=c2)


def delta_threshold(params: ModelParams) -> float:
    """The proliferation rate delta0 at which c2 = 0 (transcritical threshold)."""
    p = params
    ratio = p.s_M / p.mu_M
    bg = p.b + p.gamma
    return (p.eta * ratio
            - (p.N2 - p.N3) * p.gamma / bg * p.beta * ratio
            - (p.N1 - p.N3) * p.b / bg * p.beta * ratio)


def _quadratic_roots(c1: float, c2: float) -> tuple[complex, complex]:
    """Roots of lambda^2 + c1 lambda + c2 = 0, cancellation-safe, sorted by real part desc."""
    disc = c1 * c1 - 4.0 * c2
    if disc >= 0.0:
        sq = math.sqrt(disc)
        if c1 >= 0.0:
            lam2 = (-c1 - sq) / 2.0
            lam1 = (-2.0 * c2 / (c1 + sq)) if (c1 + sq) != 0.0 else 0.0
        else:
            lam1 = (-c1 + sq) / 2.0
            lam2 = (2.0 * c2 / (sq - c1)) if (sq - c1) != 0.0 else 0.0
        if lam1 < lam2:
            lam1, lam2 = lam2, lam1
        return complex(lam1), complex(lam2)
    sq = math.sqrt(-disc)
    return complex(-c1 / 2.0, sq / 2.0), complex(-c1 / 2.0, -sq / 2.0)


def eigen_closed_form(params: ModelParams) -> np.ndarray:
    """Eigenvalues at the trivial state: quadratic-factor pair, -mu_T, -mu_M."""
    cc = char_coeffs(params)
    lam1, lam2 = _quadratic_roots(cc.c1, cc.c2)
    return np.array([lam1, lam2, -params.mu_T, -params.mu_M], dtype=np.complex128)


def lambda1_approx(params: ModelParams, delta: float, variant: str = "Corrected") -> float:
    """First-order approximations of the dominant quadratic-factor eigenvalue.

    "Corrected": -c2(delta)/c1(delta), the first-order expansion of the
    exact root; "Legacy": (b+gamma) * (c1(delta)/c1(delta0)) * (delta -
    delta0), a historical series form kept for comparison only (it
    overshoots the exact value away from the threshold).  Both vanish at
    delta = delta0.
    """
    if variant not in ("Legacy", "Corrected"):
        raise DomainError(f"unknown variant {variant!r}")
    here = params.replace(delta=float(delta))
    cc = char_coeffs(here)
    if variant == "Corrected":
        if cc.c1 == 0.0:
            raise SingularityError("c1(delta) = 0: expansion undefined")
        return -cc.c2 / cc.c1
    delta0 = delta_threshold(params)
    c1_at_threshold = char_coeffs(params.replace(delta=delta0)).c1
    if c1_at_threshold == 0.0:
        raise SingularityError("c1(delta0) = 0: expansion undefined")
    return (params.b + params.gamma) * cc.c1 / c1_at_threshold * (float(delta) - delta0)


def lambda1_contour(params_base: ModelParams, b_grid, gamma_grid) -> np.ndarray:
    """Dominant quadratic-factor eigenvalue on a (b, gamma) grid.

    Returns a matrix of shape (len(b_grid), len(gamma_grid)) with the real
    part of the exact root lambda1.
    """
    b_grid = np.asarray(b_grid, dtype=np.float64)
    gamma_grid = np.asarray(gamma_grid, dtype=np.float64)
    out = np.empty((b_grid.size, gamma_grid.size))
    for i, b in enumerate(b_grid):
        for j, g in enumerate(gamma_grid):
            cc = char_coeffs(params_base.replace(b=float(b), gamma=float(g)))
            out[i, j] = _quadratic_roots(cc.c1, cc.c2)[0].real
    return out


def trivial_equilibrium(params: ModelParams) -> EquilibriumRecord:
    state = np.array([params.s_M / params.mu_M, 0.0, 0.0, params.s_T / params.mu_T])
    eig = eigen_closed_form(params)
    return EquilibriumRecord(
        state=state,
        eigenvalues=eig,
        stability=classify_stability(eig),
        branch_tag="Trivial",
        residual=_relative_residual(state, params),
    )


# ---------------------------------------------------------------------------
# Infected equilibria: vectorized reduction in B
# ---------------------------------------------------------------------------

def _cubic_roots(a3: float, a2, a1, a0: float) -> np.ndarray:
    """Real roots of a3 x^3 + a2 x^2 + a1 x + a0 over vectors a2, a1.

    Returns shape (3, n), NaN-padded.  Closed form (trigonometric for the
    three-real-root case, Cardano otherwise) followed by Newton polish on
    the original cubic.
    """
    a2 = np.asarray(a2, dtype=np.float64)
    a1 = np.asarray(a1, dtype=np.float64)
    n = a2.shape[0]
    p = a2 / a3
    q = a1 / a3
    r = np.full(n, a0 / a3)
    # depressed cubic y^3 + A y + B, x = y - p/3
    A = q - p * p / 3.0
    B = 2.0 * p ** 3 / 27.0 - p * q / 3.0 + r
    disc = B * B / 4.0 + A ** 3 / 27.0
    roots = np.full((3, n), np.nan)

    three = disc < 0.0  # three distinct real roots (requires A < 0)
    if np.any(three):
        At, Bt = A[three], B[three]
        m = 2.0 * np.sqrt(-At / 3.0)
        arg = np.clip(3.0 * Bt / (At * m), -1.0, 1.0)
        theta = np.arccos(arg) / 3.0
        for k in range(3):
            roots[k, three] = m * np.cos(theta - 2.0 * np.pi * k / 3.0)

    one = ~three
    if np.any(one):
        Ao, Bo = A[one], B[one]
        sq = np.sqrt(np.maximum(disc[one], 0.0))
        u = np.cbrt(-Bo / 2.0 + sq)
        v = np.cbrt(-Bo / 2.0 - sq)
        roots[0, one] = u + v
        # disc == 0 with A != 0 has a double root at -3B/(2A)
        dbl = one.copy()
        dbl[one] = (disc[one] == 0.0) & (Ao != 0.0)
        if np.any(dbl):
            roots[1, dbl] = -3.0 * B[dbl] / (2.0 * A[dbl])

    roots -= p / 3.0
    # Newton polish against the original coefficients
    for _ in range(3):
        f = ((a3 * roots + a2) * roots + a1) * roots + a0
        df = (3.0 * a3 * roots + 2.0 * a2) * roots + a1
        step = np.where(df != 0.0, f / np.where(df != 0.0, df, 1.0), 0.0)
        roots = roots - step
    return roots


def _mi_quadratic(params: ModelParams) -> tuple[float, float, float]:
    """Coefficients of G(B) = g2 B^2 + g1 B + g0 with sign(M_i) = sign(G)/sign(N1-N2).

    G(B) = (mu_M + beta B) [M_u(B) q - delta (1 - B/K)], q = eta + (N3-N2) beta.
    """
    p = params
    q = p.eta + (p.N3 - p.N2) * p.beta
    g2 = p.delta * p.beta / p.K
    g1 = p.delta * (p.mu_M / p.K - p.beta)
    g0 = p.s_M * q - p.delta * p.mu_M
    return g2, g1, g0


def _admissible_segments(params: ModelParams, b_min: float, b_max: float) -> list[tuple[float, float]]:
    """Sub-intervals of [b_min, b_max] on which M_i(B) >= 0."""
    g2, g1, g0 = _mi_quadratic(params)
    sign_needed = 1.0 if params.N1 > params.N2 else -1.0
    cuts = [b_min, b_max]
    if g2 != 0.0:
        disc = g1 * g1 - 4.0 * g2 * g0
        if disc > 0.0:
            sq = math.sqrt(disc)
            for root in ((-g1 - sq) / (2.0 * g2), (-g1 + sq) / (2.0 * g2)):
                if b_min < root < b_max:
                    cuts.append(root)
    elif g1 != 0.0:
        root = -g0 / g1
        if b_min < root < b_max:
            cuts.append(root)
    cuts = sorted(set(cuts))
    segments = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo * (1.0 + 1e-12):
            continue
        mid = math.sqrt(lo * hi)
        if ((g2 * mid + g1) * mid + g0) * sign_needed >= 0.0:
            segments.append((lo, hi))
    return segments


def _chain(params: ModelParams, b: np.ndarray):
    """Residual chain at bacterial concentrations ``b``.

    Returns (M_u, M_i, T_roots (3, n), residual (3, n)).
    """
    p = params
    m_u = p.s_M / (p.mu_M + p.beta * b)
    q = p.eta + (p.N3 - p.N2) * p.beta
    m_i = b * (m_u * q - p.delta * (1.0 - b / p.K)) / (p.b * (p.N1 - p.N2))
    a3 = -p.mu_T * p.e_M * p.e_B
    a2 = p.s_T * p.e_M * p.e_B + p.c_M * m_i * p.e_B + p.c_B * b * p.e_M - p.mu_T * (p.e_M + p.e_B)
    a1 = p.s_T * (p.e_M + p.e_B) + p.c_M * m_i + p.c_B * b - p.mu_T
    t_roots = _cubic_roots(a3, a2, a1, p.s_T)
    t_roots = np.where(t_roots > 0.0, t_roots, np.nan)
    t_roots = np.sort(t_roots, axis=0)  # ascending, NaN last
    denom = t_roots + p.c * m_i
    kill = np.where(denom > 0.0, p.gamma * m_i * t_roots / np.where(denom > 0.0, denom, 1.0), 0.0)
    resid = p.beta * m_u * b - p.b * m_i - kill
    resid = np.where(np.isfinite(t_roots), resid, np.nan)
    return m_u, m_i, t_roots, resid


def infected_equilibria(params: ModelParams, B_range: tuple[float, float] | None = None,
                        grid_points: int = 400) -> list[EquilibriumRecord]:
    """All steady states with B > 0, via a bracketing scan in B.

    The scan walks log-spaced grids inside each admissibility segment,
    brackets residual sign changes per positive cubic branch, and refines
    each bracket by bisection to well below 1e-10 relative in B.
    """
    if B_range is None:
        B_range = (1e-3, params.K)
    b_min, b_max = float(B_range[0]), float(B_range[1])
    if not (0.0 < b_min < b_max <= params.K):
        raise DomainError("B_range must satisfy 0 < B_min < B_max <= K")
    if grid_points < 100:
        raise DomainError("grid_points must be >= 100")
    if params.N1 == params.N2:
        raise DomainError("the M_i reduction is degenerate when N1 == N2")

    segments = _admissible_segments(params, b_min, b_max)
    if not segments:
        return []
    total_span = sum(math.log(hi / lo) for lo, hi in segments)
    inset = 1e-9

    roots: list[float] = []
    for lo, hi in segments:
        span = math.log(hi / lo)
        n = max(32, int(round(grid_points * span / max(total_span, 1e-300))))
        grid = np.geomspace(lo * (1.0 + inset), hi * (1.0 - inset), n)
        _, _, _, resid = _chain(params, grid)
        if np.sum(np.isfinite(resid[1])) > 0:
            log.debug("multiple positive T roots inside segment (%g, %g)", lo, hi)
        for branch in range(3):
            row = resid[branch]
            finite = np.isfinite(row)
            if not np.any(finite):
                continue
            both = finite[:-1] & finite[1:]
            sign_change = both & (row[:-1] * row[1:] < 0.0)
            idx = np.nonzero(sign_change)[0]
            exact = np.nonzero(finite & (row == 0.0))[0]
            roots.extend(float(grid[i]) for i in exact)
            if idx.size == 0:
                continue
            lo_b = grid[idx].copy()
            hi_b = grid[idx + 1].copy()
            f_lo = row[idx].copy()
            for _ in range(80):
                mid = 0.5 * (lo_b + hi_b)
                _, _, _, r_mid = _chain(params, mid)
                f_mid = r_mid[branch]
                f_mid = np.where(np.isfinite(f_mid), f_mid, 0.0)
                take_low = f_lo * f_mid > 0.0
                lo_b = np.where(take_low, mid, lo_b)
                f_lo = np.where(take_low, f_mid, f_lo)
                hi_b = np.where(take_low, hi_b, mid)
                if np.all((hi_b - lo_b) <= 1e-15 * hi_b):
                    break
            roots.extend(float(v) for v in 0.5 * (lo_b + hi_b))

    if not roots:
        return []
    roots.sort()
    unique: list[float] = []
    for value in roots:
        if not unique or value > unique[-1] * (1.0 + 1e-9):
            unique.append(value)

    records: list[EquilibriumRecord] = []
    for b_star in unique:
        arr = np.array([b_star])
        m_u, m_i, t_roots, resid = _chain(params, arr)
        finite = np.isfinite(resid[:, 0])
        if not np.any(finite):
            log.debug("discarded bracket at B=%g: no positive T root", b_star)
            continue
        branch = int(np.nanargmin(np.abs(np.where(finite, resid[:, 0], np.inf))))
        state = np.array([float(m_u[0]), float(m_i[0]), b_star, float(t_roots[branch, 0])])
        if np.any(state < 0.0):
            log.debug("discarded root at B=%g: negative component %s", b_star, state)
            continue
        rel = _relative_residual(state, params)
        if rel > RESIDUAL_TOL:
            log.debug("discarded root at B=%g: residual %.3g", b_star, rel)
            continue
        eig = np.linalg.eigvals(jacobian(state, params, check=False))
        stability = classify_stability(eig)
        if stability in ("Stable", "Marginal"):
            tag = ("HighInfected" if b_star >= _HIGH_BRANCH_FRACTION * params.K
                   else "LowInfected")
        else:
            tag = "MidInfected"
        records.append(EquilibriumRecord(
            state=state, eigenvalues=eig, stability=stability,
            branch_tag=tag, residual=rel,
        ))
    return records
