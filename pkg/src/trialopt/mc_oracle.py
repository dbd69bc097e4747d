"""Monte Carlo simulator of complete trials: the independent validation
oracle for the analytic expected utilities, approval probabilities, and
familywise error rates.

Streams are derived per chunk of replicates as
``SeedSequence(seed, spawn_key=(chunk_index,))``, so estimates are
bit-reproducible for a given (seed, replicates, mode) and chunks could be
simulated in parallel without changing the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    CLASSICAL,
    ENRICHMENT,
    NO_TRIAL,
    SPONSOR,
    DesignSpec,
    EffectPair,
    Scenario,
    pooled_effect,
    trial_cost,
)
from .numerics import _one_sided_critical
from .testing import _decide, params_for_scenario
from .utility import classical_variance

# Strata sizes follow the population split exactly (the analytic
# approximation), or are drawn binomially per arm (the realistic mode).
FIXED_PROPORTIONAL = "fixed"
BINOMIAL_RANDOM = "binomial"

UTILITY = "utility"
REJECTION_PROBS = "rejection"
FWER = "fwer"

_CHUNK = 1 << 17


@dataclass(frozen=True)
class SimConfig:
    """Replication count, seed, strata mode, and the quantity estimated."""

    replicates: int
    seed: int
    strata_mode: str = FIXED_PROPORTIONAL
    estimand: str = UTILITY

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.strata_mode not in (FIXED_PROPORTIONAL, BINOMIAL_RANDOM):
            raise ValueError(f"unknown strata mode {self.strata_mode!r}")
        if self.estimand not in (UTILITY, REJECTION_PROBS, FWER):
            raise ValueError(f"unknown estimand {self.estimand!r}")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    replicates: int

    def __post_init__(self):
        if self.std_error < 0.0:
            raise ValueError("std_error must be >= 0")


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _rewards(scenario: Scenario, psi_S, psi_F, est_S, est_F, effects: EffectPair):
    """Realized reward per replicate under the scenario's perspective."""
    r = scenario.rewards
    lam = scenario.lambda_S
    if r.perspective == SPONSOR:
        paid_F = r.NrF * np.maximum(est_F - r.mu_F, 0.0)
        paid_S = lam * r.NrS * np.maximum(est_S - r.mu_S, 0.0)
    else:
        delta_F = pooled_effect(effects, lam)
        paid_F = np.full_like(np.asarray(est_F, dtype=float), r.NrF * (delta_F - r.mu_F))
        paid_S = np.full_like(paid_F, lam * r.NrS * (effects.delta_S - r.mu_S))
    return np.where(psi_F == 1, paid_F, np.where(psi_S == 1, paid_S, 0.0))


def _redraw_zero_strata(rng, n, lam, m):
    """Per-arm subgroup counts, rejection-sampling away empty strata."""
    k_t = rng.binomial(n, lam, m)
    k_c = rng.binomial(n, lam, m)
    while True:
        bad = (k_t == 0) | (k_t == n) | (k_c == 0) | (k_c == n)
        if not bad.any():
            return k_t, k_c
        count = int(bad.sum())
        k_t[bad] = rng.binomial(n, lam, count)
        k_c[bad] = rng.binomial(n, lam, count)


def _simulate_batch(design: DesignSpec, effects: EffectPair, scenario: Scenario,
                    strata_mode: str, rng: np.random.Generator, m: int):
    """m replicates of the trial: (utility, psi_S, psi_F) arrays."""
    if design.kind == NO_TRIAL:
        zeros = np.zeros(m)
        return zeros, zeros.astype(int), zeros.astype(int)

    n = design.n
    sigma = scenario.sigma
    lam = scenario.lambda_S
    crit = _one_sided_critical(scenario.alpha)
    cost = trial_cost(design, scenario.costs, lam)

    if design.kind == ENRICHMENT:
        se = sigma * math.sqrt(2.0 / n)
        est = effects.delta_S + se * rng.standard_normal(m)
        psi_S = (est >= crit * se).astype(int)
        psi_F = np.zeros(m, dtype=int)
        utility = _rewards(scenario, psi_S, psi_F, est, np.zeros(m), effects) - cost
        return utility, psi_S, psi_F

    if design.kind == CLASSICAL:
        variance = classical_variance(effects, lam, sigma, n)
        if strata_mode == FIXED_PROPORTIONAL:
            est = pooled_effect(effects, lam) + math.sqrt(variance) * rng.standard_normal(m)
        else:
            # Arm means of n mixture draws: binomial subgroup counts set the
            # conditional mean, the normal part contributes sigma^2/n.
            theta_t = (effects.prognostic_offset + effects.delta_S,
                       effects.delta_Sc)
            theta_c = (effects.prognostic_offset, 0.0)
            k_t = rng.binomial(n, lam, m)
            k_c = rng.binomial(n, lam, m)
            mean_t = (k_t * theta_t[0] + (n - k_t) * theta_t[1]) / n
            mean_c = (k_c * theta_c[0] + (n - k_c) * theta_c[1]) / n
            noise = sigma / math.sqrt(n)
            est = (mean_t - mean_c
                   + noise * rng.standard_normal(m)
                   - noise * rng.standard_normal(m))
        psi_F = (est >= crit * math.sqrt(variance)).astype(int)
        psi_S = np.zeros(m, dtype=int)
        utility = _rewards(scenario, psi_S, psi_F, np.zeros(m), est, effects) - cost
        return utility, psi_S, psi_F

    params = params_for_scenario(scenario, design.alpha_S)
    lamc = 1.0 - lam
    if strata_mode == FIXED_PROPORTIONAL:
        var_S = 2.0 * sigma ** 2 / (lam * n)
        var_Sc = 2.0 * sigma ** 2 / (lamc * n)
        est_S = effects.delta_S + math.sqrt(var_S) * rng.standard_normal(m)
        est_Sc = effects.delta_Sc + math.sqrt(var_Sc) * rng.standard_normal(m)
    else:
        k_t, k_c = _redraw_zero_strata(rng, n, lam, m)
        var_S = sigma ** 2 * (1.0 / k_t + 1.0 / k_c)
        var_Sc = sigma ** 2 * (1.0 / (n - k_t) + 1.0 / (n - k_c))
        est_S = effects.delta_S + np.sqrt(var_S) * rng.standard_normal(m)
        est_Sc = effects.delta_Sc + np.sqrt(var_Sc) * rng.standard_normal(m)
    t_S = est_S / np.sqrt(var_S)
    t_Sc = est_Sc / np.sqrt(var_Sc)
    est_F = lam * est_S + lamc * est_Sc
    var_F = lam ** 2 * var_S + lamc ** 2 * var_Sc
    t_F = est_F / np.sqrt(var_F)
    psi_S, psi_F = _decide(t_S, t_Sc, t_F, params)
    psi_S = psi_S.astype(int)
    psi_F = psi_F.astype(int)
    utility = _rewards(scenario, psi_S, psi_F, est_S, est_F, effects) - cost
    return utility, psi_S, psi_F


def simulate_trial(design: DesignSpec, effects: EffectPair, scenario: Scenario,
                   rng: np.random.Generator,
                   strata_mode: str = FIXED_PROPORTIONAL):
    """One replicate: (realized utility, psi_S, psi_F)."""
    design.check_against(scenario)
    utility, psi_S, psi_F = _simulate_batch(design, effects, scenario,
                                            strata_mode, rng, 1)
    return float(utility[0]), int(psi_S[0]), int(psi_F[0])


def _accumulate(design, effects_or_prior, scenario, config, value_of):
    """Chunked mean/SE of value_of(utility, psi_S, psi_F, effects)."""
    single_atom = None
    atoms = None
    if isinstance(effects_or_prior, EffectPair):
        single_atom = effects_or_prior
    else:
        atoms = list(effects_or_prior)
        if len(atoms) == 1:
            single_atom = atoms[0][0]
    weights = None
    if single_atom is None:
        weights = np.array([w for _, w in atoms])
        weights = weights / weights.sum()

    total = config.replicates
    s1 = 0.0
    s2 = 0.0
    done = 0
    index = 0
    while done < total:
        m = min(_CHUNK, total - done)
        rng = _chunk_rng(config.seed, index)
        if single_atom is not None:
            u, ps, pf = _simulate_batch(design, single_atom, scenario,
                                        config.strata_mode, rng, m)
            values = value_of(u, ps, pf, single_atom)
        else:
            idx = rng.choice(len(atoms), size=m, p=weights)
            values = np.empty(m)
            for j, (atom, _) in enumerate(atoms):
                sel = idx == j
                count = int(sel.sum())
                if count == 0:
                    continue
                u, ps, pf = _simulate_batch(design, atom, scenario,
                                            config.strata_mode, rng, count)
                values[sel] = value_of(u, ps, pf, atom)
        s1 += float(values.sum())
        s2 += float((values * values).sum())
        done += m
        index += 1
    mean = s1 / total
    if total > 1:
        variance = max(0.0, (s2 - s1 * s1 / total) / (total - 1))
        se = math.sqrt(variance / total)
    else:
        se = 0.0
    return McEstimate(mean=mean, std_error=se, replicates=total)


def mc_expected_utility(design: DesignSpec, effects_or_prior, scenario: Scenario,
                        config: SimConfig) -> McEstimate:
    """Simulated expected utility for a fixed effect pair or a prior.

    With a prior, one atom is drawn per replicate by weight; a single-atom
    prior takes the direct path so it matches a plain EffectPair run
    replicate for replicate under the same seed.
    """
    design.check_against(scenario)
    if design.kind == NO_TRIAL:
        return McEstimate(0.0, 0.0, config.replicates)
    return _accumulate(design, effects_or_prior, scenario, config,
                       lambda u, ps, pf, atom: u)


def mc_rejection_probs(design: DesignSpec, effects_or_prior, scenario: Scenario,
                       config: SimConfig) -> dict:
    """Simulated approval probabilities: any, full-population, subgroup-only."""
    design.check_against(scenario)
    if design.kind == NO_TRIAL:
        zero = McEstimate(0.0, 0.0, config.replicates)
        return {"any": zero, "F": zero, "S_only": zero}
    picks = {
        "any": lambda u, ps, pf, atom: ((ps | pf) == 1).astype(float),
        "F": lambda u, ps, pf, atom: (pf == 1).astype(float),
        "S_only": lambda u, ps, pf, atom: ((ps == 1) & (pf == 0)).astype(float),
    }
    return {name: _accumulate(design, effects_or_prior, scenario, config, fn)
            for name, fn in picks.items()}


def mc_fwer(design: DesignSpec, scenario: Scenario, null_effects: EffectPair,
            config: SimConfig) -> McEstimate:
    """Simulated probability of any rejection under a global null."""
    design.check_against(scenario)
    if null_effects.delta_S > 1e-12:
        raise ValueError("null effects require delta_S <= 0")
    if pooled_effect(null_effects, scenario.lambda_S) > 1e-12:
        raise ValueError("null effects require the pooled effect <= 0")
    if design.kind == NO_TRIAL:
        return McEstimate(0.0, 0.0, config.replicates)
    return _accumulate(design, null_effects, scenario, config,
                       lambda u, ps, pf, atom: ((ps | pf) == 1).astype(float))
