"""Expected utility of each design given true effects, and its average
over a discrete prior.

Enrichment and classical designs use the closed truncated-normal forms;
the stratified design integrates the region geometry from
:mod:`trialopt.testing` with an analytic inner step in z_Sc (the
integrands are linear there) and adaptive quadrature over z_S with
breakpoints at every structural kink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import ndtr

from .model import (
    CLASSICAL,
    ENRICHMENT,
    NO_TRIAL,
    SPONSOR,
    STRATIFIED,
    DesignSpec,
    EffectPair,
    Scenario,
    pooled_effect,
)
from .model import _cost_for
from .numerics import (
    Interval,
    TAIL_TRUNCATION,
    _one_sided_critical,
    _segment,
    integrate_multi,
    std_normal_pdf,
)
from .testing import _af_lower, _as_bounds, _geometry, params_for_scenario, region_breakpoints

# Absolute tolerance of the outer z_S quadrature, on the probability scale.
# Reward integrals are scaled by at most Nr ~ 1e4 MUSD afterwards, keeping
# monetary error below ~1e-8 MUSD.
_QUAD_TOL = 1e-12


@dataclass(frozen=True)
class EvaluationResult:
    """Expected utility of one design under one true-effect configuration,
    with the approval probabilities and reward components behind it."""

    expected_utility: float
    prob_reject_S_only: float
    prob_reject_F: float
    power_any: float
    expected_reward_S: float
    expected_reward_F: float
    cost: float

    def __post_init__(self):
        for name in ("prob_reject_S_only", "prob_reject_F", "power_any"):
            p = getattr(self, name)
            if not (-1e-9 <= p <= 1.0 + 1e-9):
                raise ValueError(f"{name}={p} is not a probability")
        if self.prob_reject_S_only + self.prob_reject_F > 1.0 + 1e-9:
            raise ValueError("disjoint approval probabilities exceed 1")


def _clamp01(p: float) -> float:
    return min(1.0, max(0.0, p))


def _assemble(reward_S: float, reward_F: float, cost: float,
              p_s_only: float, p_f: float) -> EvaluationResult:
    p_s_only = _clamp01(p_s_only)
    p_f = _clamp01(p_f)
    return EvaluationResult(
        expected_utility=reward_S + reward_F - cost,
        prob_reject_S_only=p_s_only,
        prob_reject_F=p_f,
        power_any=_clamp01(p_s_only + p_f),
        expected_reward_S=reward_S,
        expected_reward_F=reward_F,
        cost=cost,
    )


_ZERO_RESULT = EvaluationResult(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def classical_variance(effects: EffectPair, lambda_S: float, sigma: float,
                       n: float) -> float:
    """Variance of the unstratified full-population estimate.

    Each arm samples a two-component normal mixture, which inflates the
    per-observation variance by lambda_S*(1-lambda_S) times the squared
    between-strata mean gap of that arm.
    """
    mix = lambda_S * (1.0 - lambda_S) * (
        effects.treatment_arm_gap ** 2 + effects.control_arm_gap ** 2
    )
    return (2.0 * sigma ** 2 + mix) / n


def _check_n(n: float, scenario: Scenario) -> float:
    n = float(n)
    if not n >= scenario.n_min - 1e-9:
        raise ValueError(f"n={n} below the minimal per-group size {scenario.n_min}")
    return n


def _single_test_result(delta: float, mu: float, scale: float, variance: float,
                        scenario: Scenario, cost: float, branch: str) -> EvaluationResult:
    """Shared closed form for the one-hypothesis designs.

    branch is 'S' (enrichment: only the subgroup approval exists) or 'F'
    (classical: only the full-population approval exists).
    """
    se = math.sqrt(variance)
    crit = _one_sided_critical(scenario.alpha)
    p_reject = float(ndtr(delta / se - crit))
    if scenario.rewards.perspective == SPONSOR:
        kappa = (max(crit * se, mu) - delta) / se
        reward = scale * ((1.0 - float(ndtr(kappa))) * (delta - mu)
                          + se * float(std_normal_pdf(kappa)))
    else:
        reward = scale * (delta - mu) * p_reject
    if branch == "S":
        return _assemble(reward, 0.0, cost, p_reject, 0.0)
    return _assemble(0.0, reward, cost, 0.0, p_reject)


def eu_enrichment(effects: EffectPair, n: float, scenario: Scenario) -> EvaluationResult:
    """Expected utility of the enrichment design given true effects."""
    n = _check_n(n, scenario)
    cost = _cost_for(ENRICHMENT, n, scenario.costs, scenario.lambda_S)
    return _single_test_result(
        delta=effects.delta_S, mu=scenario.rewards.mu_S,
        scale=scenario.lambda_S * scenario.rewards.NrS,
        variance=2.0 * scenario.sigma ** 2 / n,
        scenario=scenario, cost=cost, branch="S",
    )


def eu_classical(effects: EffectPair, n: float, scenario: Scenario) -> EvaluationResult:
    """Expected utility of the classical full-population design."""
    n = _check_n(n, scenario)
    cost = _cost_for(CLASSICAL, n, scenario.costs, scenario.lambda_S)
    return _single_test_result(
        delta=pooled_effect(effects, scenario.lambda_S), mu=scenario.rewards.mu_F,
        scale=scenario.rewards.NrF,
        variance=classical_variance(effects, scenario.lambda_S, scenario.sigma, n),
        scenario=scenario, cost=cost, branch="F",
    )


def eu_stratified(effects: EffectPair, n: float, alpha_S: float,
                  scenario: Scenario) -> EvaluationResult:
    """Expected utility of the stratified design with subgroup weight alpha_S.

    Computes P(full approval), P(subgroup-only approval) and, for the
    sponsor, the reward integrals over the regions A_F and A_S. The inner
    z_Sc integral is the analytic linear-Gaussian segment; the outer z_S
    integral is adaptive with breakpoints at the region kinks.
    """
    n = _check_n(n, scenario)
    if not (0.0 <= alpha_S <= scenario.alpha + 1e-15):
        raise ValueError(f"alpha_S={alpha_S} outside [0, alpha={scenario.alpha}]")
    params = params_for_scenario(scenario, alpha_S)
    rewards = scenario.rewards
    sponsor = rewards.perspective == SPONSOR
    geom_pub = _geometry(params, effects, n, scenario.sigma, mu_S=None, mu_F=None)
    geom_rew = (
        _geometry(params, effects, n, scenario.sigma,
                  mu_S=rewards.mu_S, mu_F=rewards.mu_F)
        if sponsor else geom_pub
    )
    delta_F = pooled_effect(effects, scenario.lambda_S)
    gain_F = delta_F - rewards.mu_F
    gain_S = effects.delta_S - rewards.mu_S

    def columns(z: np.ndarray) -> np.ndarray:
        weight = std_normal_pdf(z)
        alive_f, lo_f = _af_lower(geom_pub, z)
        p_f = np.where(alive_f, _segment(1.0, 0.0, lo_f, np.inf), 0.0)
        alive_s, lo_s, hi_s = _as_bounds(geom_pub, z)
        p_s = np.where(alive_s, _segment(1.0, 0.0, lo_s, hi_s), 0.0)
        cols = [p_f * weight, p_s * weight]
        if sponsor:
            alive_f, lo_f = _af_lower(geom_rew, z)
            c0 = gain_F + geom_rew.se_F * geom_rew.sq_lam * z
            c1 = geom_rew.se_F * geom_rew.sq_lamc
            r_f = np.where(alive_f, _segment(c0, c1, lo_f, np.inf), 0.0)
            alive_s, lo_s, hi_s = _as_bounds(geom_rew, z)
            r_s = np.where(
                alive_s,
                (gain_S + geom_rew.se_S * z) * _segment(1.0, 0.0, lo_s, hi_s),
                0.0,
            )
            cols += [r_f * weight, r_s * weight]
        return np.stack(cols, axis=-1)

    breaks = sorted(set(region_breakpoints(geom_pub)) | set(region_breakpoints(geom_rew)))
    values = integrate_multi(columns, Interval(-TAIL_TRUNCATION, TAIL_TRUNCATION),
                             abs_tol=_QUAD_TOL, breakpoints=breaks)
    p_f, p_s_only = float(values[0]), float(values[1])
    cost = _cost_for(STRATIFIED, n, scenario.costs, scenario.lambda_S)
    if sponsor:
        reward_F = rewards.NrF * float(values[2])
        reward_S = scenario.lambda_S * rewards.NrS * float(values[3])
    else:
        reward_F = rewards.NrF * gain_F * _clamp01(p_f)
        reward_S = scenario.lambda_S * rewards.NrS * gain_S * _clamp01(p_s_only)
    return _assemble(reward_S, reward_F, cost, p_s_only, p_f)


def evaluate_design(kind: str, n: Optional[float], alpha_S: Optional[float],
                    effects: EffectPair, scenario: Scenario) -> EvaluationResult:
    """Per-effects evaluation of any design family (n may be fractional)."""
    if kind == NO_TRIAL:
        return _ZERO_RESULT
    if kind == ENRICHMENT:
        return eu_enrichment(effects, n, scenario)
    if kind == CLASSICAL:
        return eu_classical(effects, n, scenario)
    if kind == STRATIFIED:
        return eu_stratified(effects, n, alpha_S, scenario)
    raise ValueError(f"unknown design kind {kind!r}")


def _atom_key(kind: str, effects: EffectPair) -> Tuple[float, ...]:
    # The enrichment design never sees the complement, so priors sharing a
    # delta_S marginal must evaluate identically (bit for bit).
    if kind == ENRICHMENT:
        return (effects.delta_S,)
    return (effects.delta_S, effects.delta_Sc, effects.prognostic_offset)


def prior_averaged(kind: str, n: Optional[float], alpha_S: Optional[float],
                   scenario: Scenario) -> EvaluationResult:
    """Prior-weighted expected utility and approval probabilities.

    Atoms indistinguishable to the design family are merged first, with
    exactly rounded weight sums, so equivalent priors produce identical
    results and degenerate grids collapse to single evaluations.
    """
    if kind == NO_TRIAL:
        return _ZERO_RESULT
    groups: dict = {}
    for effects, weight in scenario.prior:
        key = _atom_key(kind, effects)
        if key in groups:
            groups[key][1].append(weight)
        else:
            groups[key] = (effects, [weight])
    totals = [0.0] * 7
    for effects, weights in groups.values():
        w = math.fsum(weights)
        r = evaluate_design(kind, n, alpha_S, effects, scenario)
        parts = (r.expected_utility, r.prob_reject_S_only, r.prob_reject_F,
                 r.power_any, r.expected_reward_S, r.expected_reward_F, r.cost)
        totals = [t + w * p for t, p in zip(totals, parts)]
    return EvaluationResult(
        expected_utility=totals[0],
        prob_reject_S_only=_clamp01(totals[1]),
        prob_reject_F=_clamp01(totals[2]),
        power_any=_clamp01(totals[3]),
        expected_reward_S=totals[4],
        expected_reward_F=totals[5],
        cost=totals[6],
    )


def eu_prior_averaged(design: DesignSpec, scenario: Scenario) -> EvaluationResult:
    """Prior-averaged evaluation of a concrete design specification."""
    design.check_against(scenario)
    return prior_averaged(design.kind, design.n, design.alpha_S, scenario)
