"""Multiple testing machinery for the stratified design: the level
condition linking the subgroup and full-population significance weights,
rejection indicators for the consistency-modified closed test, and the
geometry of the acceptance regions in the (z_S, z_Sc) plane.

z convention: the integration variables z_S, z_Sc are standard normal
given the true effects; the estimates are reconstructed as
delta_hat_S = delta_S + z_S * sqrt(2 sigma^2 / (lambda_S n)) (and the
analogue for the complement), so every test threshold is a straight line
in (z_S, z_Sc).

Correlation of the subgroup and stratified full-population test statistics
under the global null is sqrt(lambda_S): the stratified estimate
delta_hat_F = lambda_S delta_hat_S + lambda_Sc delta_hat_Sc has variance
2 sigma^2 / n, and Cov(delta_hat_F, delta_hat_S) = lambda_S
Var(delta_hat_S) = 2 sigma^2 / n, hence Corr = sqrt(lambda_S) after
standardizing. Equivalently Z_F = sqrt(lambda_S) Z_S +
sqrt(1 - lambda_S) Z_Sc holds exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from .model import EffectPair, Scenario, pooled_effect
from .numerics import (
    Interval,
    TAIL_TRUNCATION,
    _one_sided_critical,
    bivariate_upper_orthant,
    find_root,
)

# Above this correlation the subgroup and pooled statistics are treated as
# perfectly dependent (nested rejection regions); protects the root finder.
_RHO_DEGENERATE = 1.0 - 1e-9


@dataclass(frozen=True)
class StratifiedTestParams:
    """Resolved parameters of the consistency-modified closed test.

    mu_constraint, when set, adds the sponsor's estimate floor to the
    region queried through :func:`region_slices` (mu_F for A_F, mu_S for
    A_S); it never changes the rejection indicators themselves.
    """

    alpha: float
    alpha_S: float
    alpha_F: float
    tau_S: float
    tau_Sc: float
    lambda_S: float
    mu_constraint: Optional[float] = None

    def __post_init__(self):
        if not (0.0 < self.alpha < 0.5):
            raise ValueError("alpha must lie in (0, 0.5)")
        for name in ("alpha_S", "alpha_F"):
            value = getattr(self, name)
            if not (0.0 <= value <= self.alpha + 1e-12):
                raise ValueError(f"{name}={value} outside [0, alpha={self.alpha}]")
        if self.alpha_S + self.alpha_F < self.alpha - 1e-9:
            raise ValueError(
                "alpha_S + alpha_F below the Bonferroni floor; "
                "the pair cannot come from the level condition"
            )
        if not (0.0 < self.lambda_S < 1.0):
            raise ValueError("lambda_S must lie in (0, 1)")
        for name in ("tau_S", "tau_Sc"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class RegionSlice:
    """Disjoint z_Sc intervals forming one vertical slice of a region."""

    intervals: Tuple[Interval, ...]

    def __post_init__(self):
        assert len(self.intervals) <= 3, "region slices use at most 3 intervals"
        for a, b in zip(self.intervals, self.intervals[1:]):
            assert a.hi <= b.lo, "slice intervals must be disjoint and sorted"

    @property
    def empty(self) -> bool:
        return not self.intervals

    def contains(self, z: float) -> bool:
        return any(iv.lo <= z < iv.hi or (z == iv.hi == math.inf) for iv in self.intervals)


@lru_cache(maxsize=4096)
def alpha_F_given_alpha_S(alpha_S: float, lambda_S: float, alpha: float = 0.025) -> float:
    """Largest alpha_F keeping the closed test at familywise level alpha.

    Solves P(Z_S >= z_{1-alpha_S} or Z_F >= z_{1-alpha_F}) = alpha for the
    standard bivariate normal with correlation sqrt(lambda_S), capping the
    result at alpha. Endpoints are exact: alpha_F(0) = alpha and, below
    the degenerate-correlation guard, alpha_F(alpha) = 0.
    """
    if not (0.0 < alpha < 0.5):
        raise ValueError("alpha must lie in (0, 0.5)")
    if not (0.0 <= alpha_S <= alpha + 1e-15):
        raise ValueError(f"alpha_S={alpha_S} outside [0, alpha={alpha}]")
    if not (0.0 < lambda_S < 1.0):
        raise ValueError("lambda_S must lie in (0, 1)")
    rho = math.sqrt(lambda_S)
    if alpha_S == 0.0:
        return alpha
    if rho >= _RHO_DEGENERATE:
        # Nested one-sided tests: the union event is the larger of the two.
        return alpha
    if alpha_S >= alpha:
        return 0.0

    h = _one_sided_critical(alpha_S)

    def union_excess(alpha_F: float) -> float:
        if alpha_F <= 0.0:
            return alpha_S - alpha
        k = _one_sided_critical(alpha_F)
        return alpha_S + alpha_F - bivariate_upper_orthant(h, k, rho) - alpha

    return find_root(union_excess, Interval(0.0, alpha), tol=1e-10)


def params_for_scenario(scenario: Scenario, alpha_S: float,
                        mu_constraint: Optional[float] = None) -> StratifiedTestParams:
    """Solve the level condition and bundle the test parameters."""
    alpha_F = alpha_F_given_alpha_S(alpha_S, scenario.lambda_S, scenario.alpha)
    return StratifiedTestParams(
        alpha=scenario.alpha, alpha_S=alpha_S, alpha_F=alpha_F,
        tau_S=scenario.tau_S, tau_Sc=scenario.tau_Sc,
        lambda_S=scenario.lambda_S, mu_constraint=mu_constraint,
    )


@dataclass(frozen=True)
class _Geometry:
    """Linear-constraint coefficients of one (effects, n, params) setting.

    Lower bounds in z_Sc for membership of A_F are the constant line L1
    (complement consistency) and lines of common slope -sqrt(lambda)/
    sqrt(1-lambda): L2 (pooled test at level alpha), L4 (pooled test at
    level alpha_F, active only when z_S misses the alpha_S gate) and the
    sponsor floor line for the pooled estimate.
    """

    se_S: float
    se_Sc: float
    se_F: float
    shift_S: float      # delta_S / se_S
    shift_Sc: float
    shift_F: float
    sq_lam: float
    sq_lamc: float
    crit_alpha: float
    crit_alpha_S: float
    crit_alpha_F: float
    crit_tau_S: float
    crit_tau_Sc: float
    mu_S_cut: float     # z_S floor from the sponsor mu_S constraint (-inf if none)
    mu_F_line: float    # intercept (mu_F - delta_F)/se_F of the sponsor floor (-inf if none)

    def pooled_line(self, intercept, z_S):
        """z_Sc lower bound of 'sqrt(lam) z_S + sqrt(lamc) z_Sc >= intercept'."""
        return (intercept - self.sq_lam * z_S) / self.sq_lamc


def _geometry(params: StratifiedTestParams, effects: EffectPair, n: float,
              sigma: float, mu_S: Optional[float], mu_F: Optional[float]) -> _Geometry:
    lam = params.lambda_S
    lamc = 1.0 - lam
    se_S = sigma * math.sqrt(2.0 / (lam * n))
    se_Sc = sigma * math.sqrt(2.0 / (lamc * n))
    se_F = sigma * math.sqrt(2.0 / n)
    delta_F = pooled_effect(effects, lam)
    return _Geometry(
        se_S=se_S, se_Sc=se_Sc, se_F=se_F,
        shift_S=effects.delta_S / se_S,
        shift_Sc=effects.delta_Sc / se_Sc,
        shift_F=delta_F / se_F,
        sq_lam=math.sqrt(lam), sq_lamc=math.sqrt(lamc),
        crit_alpha=_one_sided_critical(params.alpha),
        crit_alpha_S=_one_sided_critical(params.alpha_S),
        crit_alpha_F=_one_sided_critical(params.alpha_F),
        crit_tau_S=_one_sided_critical(params.tau_S),
        crit_tau_Sc=_one_sided_critical(params.tau_Sc),
        mu_S_cut=-math.inf if mu_S is None else (mu_S - effects.delta_S) / se_S,
        mu_F_line=-math.inf if mu_F is None else (mu_F - delta_F) / se_F,
    )


def _af_lower(geom: _Geometry, z_S):
    """Vectorized A_F slice: (alive mask, z_Sc lower bound).

    The slice is [lower, +inf) where alive, empty otherwise; with the
    sponsor floor the pooled-estimate line is intersected in as well.
    """
    z_S = np.asarray(z_S, dtype=float)
    t_S = z_S + geom.shift_S
    alive = t_S >= geom.crit_tau_S
    lower = np.maximum(
        geom.crit_tau_Sc - geom.shift_Sc,
        geom.pooled_line(geom.crit_alpha - geom.shift_F, z_S),
    )
    gate_missed = t_S < geom.crit_alpha_S
    lower = np.where(
        gate_missed,
        np.maximum(lower, geom.pooled_line(geom.crit_alpha_F - geom.shift_F, z_S)),
        lower,
    )
    if geom.mu_F_line > -math.inf:
        lower = np.maximum(lower, geom.pooled_line(geom.mu_F_line, z_S))
    return alive, lower


def _as_bounds(geom: _Geometry, z_S):
    """Vectorized A_S slice: (alive mask, lower, upper) in z_Sc.

    A_S collects reject-subgroup-only outcomes: psi_S = 1, psi_F = 0, and
    (with the sponsor floor) the subgroup estimate above mu_S, which cuts
    in z_S only.
    """
    z_S = np.asarray(z_S, dtype=float)
    t_S = z_S + geom.shift_S
    alive = (t_S >= geom.crit_alpha) & (z_S > geom.mu_S_cut)

    gate_by_z = t_S >= geom.crit_alpha_S
    consistency_z = t_S >= geom.crit_tau_S
    line_tau = geom.crit_tau_Sc - geom.shift_Sc
    line_alpha = geom.pooled_line(geom.crit_alpha - geom.shift_F, z_S)
    line_alpha_F = geom.pooled_line(geom.crit_alpha_F - geom.shift_F, z_S)

    # When the alpha_S gate already holds, psi_S needs nothing from z_Sc
    # and psi_F = 1 iff z_Sc clears both the pooled test and consistency.
    lower = np.where(gate_by_z, -np.inf, line_alpha_F)
    psi_f_from = np.maximum(line_tau, line_alpha)
    psi_f_from = np.where(gate_by_z, psi_f_from, np.maximum(psi_f_from, line_alpha_F))
    upper = np.where(consistency_z, psi_f_from, np.inf)
    alive = alive & (lower < upper)
    return alive, lower, upper


def region_slices(region: str, z_S: float, params: StratifiedTestParams,
                  effects: EffectPair, n: float, lambda_S: float,
                  sigma: float) -> RegionSlice:
    """Vertical slice of region A_F or A_S at abscissa z_S.

    A_F is where the full-population approval pays (psi_F = 1, plus the
    pooled-estimate floor when params.mu_constraint is set); A_S is where
    only the subgroup approval pays (psi_S = 1, psi_F = 0, plus the
    subgroup-estimate floor under the same flag). Each slice is a union of
    at most 3 disjoint intervals; the current test structure yields at
    most one.
    """
    if region not in ("A_F", "A_S"):
        raise ValueError(f"region must be 'A_F' or 'A_S', got {region!r}")
    assert abs(lambda_S - params.lambda_S) < 1e-12, "lambda_S disagrees with params"
    mu = params.mu_constraint
    if region == "A_F":
        geom = _geometry(params, effects, n, sigma, mu_S=None, mu_F=mu)
        alive, lower = _af_lower(geom, z_S)
        if not alive or lower == math.inf:
            return RegionSlice(())
        return RegionSlice((Interval(float(lower), math.inf),))
    geom = _geometry(params, effects, n, sigma, mu_S=mu, mu_F=None)
    alive, lower, upper = _as_bounds(geom, z_S)
    if not alive:
        return RegionSlice(())
    return RegionSlice((Interval(float(lower), float(upper)),))


def _decide(t_S, t_Sc, t_F, params: StratifiedTestParams):
    """Closed-test indicators from uncentered z statistics (vectorized)."""
    gate = (t_S >= _one_sided_critical(params.alpha_S)) | (
        t_F >= _one_sided_critical(params.alpha_F)
    )
    crit_alpha = _one_sided_critical(params.alpha)
    psi_S = (t_S >= crit_alpha) & gate
    psi_F = (
        (t_F >= crit_alpha)
        & gate
        & (t_S >= _one_sided_critical(params.tau_S))
        & (t_Sc >= _one_sided_critical(params.tau_Sc))
    )
    return psi_S, psi_F


def reject_stratified(z_S, z_Sc, params: StratifiedTestParams,
                      effects: EffectPair, n: float, sigma: float):
    """Rejection indicators (psi_S, psi_F) of the modified closed test.

    z_S and z_Sc follow the centered convention (standard normal given the
    true effects); scalars or arrays. The pooled statistic is
    sqrt(lambda_S) t_S + sqrt(1-lambda_S) t_Sc on the uncentered scale.
    """
    geom = _geometry(params, effects, n, sigma, mu_S=None, mu_F=None)
    z_S = np.asarray(z_S, dtype=float)
    z_Sc = np.asarray(z_Sc, dtype=float)
    t_S = z_S + geom.shift_S
    t_Sc = z_Sc + geom.shift_Sc
    t_F = geom.sq_lam * t_S + geom.sq_lamc * t_Sc
    psi_S, psi_F = _decide(t_S, t_Sc, t_F, params)
    if z_S.ndim == 0 and z_Sc.ndim == 0:
        return int(psi_S), int(psi_F)
    return psi_S.astype(int), psi_F.astype(int)


def region_breakpoints(geom: _Geometry, limit: float = TAIL_TRUNCATION):
    """z_S abscissae where the slice structure of A_F or A_S changes.

    These are the z_S-only thresholds plus the crossings of the constant
    complement-consistency line with each pooled-scale line (the pooled
    lines are mutually parallel, so they never cross each other).
    """
    points = [
        geom.crit_tau_S - geom.shift_S,
        geom.crit_alpha_S - geom.shift_S,
        geom.crit_alpha - geom.shift_S,
        geom.mu_S_cut,
    ]
    line_tau = geom.crit_tau_Sc - geom.shift_Sc
    if math.isfinite(line_tau):
        for intercept in (geom.crit_alpha - geom.shift_F,
                          geom.crit_alpha_F - geom.shift_F,
                          geom.mu_F_line):
            if math.isfinite(intercept):
                points.append((intercept - geom.sq_lamc * line_tau) / geom.sq_lam)
    return sorted({p for p in points if -limit < p < limit})
