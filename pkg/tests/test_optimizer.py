import math
from dataclasses import replace

import pytest

from trialopt.model import ConfigError, DesignSpec
from trialopt.optimizer import (
    ContourCell,
    GridConfig,
    SweepRow,
    default_n_grid,
    no_trial_outcome,
    optimize_family,
    select_design,
    sweep_contour,
    sweep_prevalence,
)
from trialopt.utility import prior_averaged
from conftest import CASE1, make_scenario

# Coarse grid keeps optimizer tests quick; refinement recovers precision.
FAST = GridConfig(
    n_grid=(50, 65, 85, 110, 145, 190, 250, 330, 430, 560, 730, 950,
            1250, 1600, 2100, 2700),
    alpha_points=11,
)


def with_rewards(scenario, **kw):
    return replace(scenario, rewards=replace(scenario.rewards, **kw))


class TestGridConfig:
    def test_default_grid_shape(self):
        grid = default_n_grid()
        assert grid[0] == 50 and grid[-1] == 3000
        assert len(grid) == 40

    def test_consume_mapping_list(self):
        mapping = {"grid.n_points": "50,100,200", "grid.alpha_points": "5",
                   "refine.enabled": "false", "refine.tol": "1e-5"}
        config = GridConfig.consume_mapping(mapping)
        assert config.n_grid == (50, 100, 200)
        assert config.alpha_points == 5
        assert config.refine is False
        assert not mapping

    def test_consume_mapping_count(self):
        config = GridConfig.consume_mapping({"grid.n_points": "12"}, n_min=50)
        assert len(config.n_grid) == 12
        assert config.n_grid[0] == 50 and config.n_grid[-1] == 3000

    def test_bad_values_rejected(self):
        with pytest.raises(ConfigError):
            GridConfig.consume_mapping({"refine.enabled": "maybe"})
        with pytest.raises(ConfigError):
            GridConfig.consume_mapping({"grid.n_points": "x"})


class TestOptimizeFamily:
    def test_zero_rewards_pick_minimal_n(self):
        scenario = with_rewards(make_scenario(), NrS=0.0, NrF=0.0)
        for family in ("classical", "stratified", "enrichment"):
            outcome = optimize_family(family, scenario, FAST)
            assert outcome.best_design.n == scenario.n_min

    def test_classical_matches_exhaustive_scan(self):
        # Independent oracle: every integer n in [50, 2000] via closed form.
        from trialopt.model import DiscretePrior, EffectPair
        scenario = make_scenario(perspective="public").with_prior(
            DiscretePrior(((EffectPair(0.3, 0.3), 1.0),)))
        best_n, best_eu = None, -math.inf
        for n in range(50, 2001):
            eu = prior_averaged("classical", n, None, scenario).expected_utility
            if eu > best_eu:
                best_n, best_eu = n, eu
        outcome = optimize_family("classical", scenario, FAST)
        assert outcome.result.expected_utility >= best_eu * (1.0 - 1e-3)
        assert abs(outcome.best_design.n - best_n) <= 2

    def test_refinement_never_loses(self):
        scenario = make_scenario(lambda_S=0.35)
        config = replace(FAST, keep_trace=True)
        outcome = optimize_family("stratified", scenario, config)
        grid_best = max(eu for _, eu in outcome.trace)
        assert outcome.result.expected_utility >= grid_best

    def test_deterministic(self):
        scenario = make_scenario(lambda_S=0.6, case=CASE1)
        a = optimize_family("stratified", scenario, FAST)
        b = optimize_family("stratified", scenario, FAST)
        assert a.best_design == b.best_design
        assert a.result.expected_utility == b.result.expected_utility

    def test_enrichment_public_n_increases_with_prevalence(self):
        ns = []
        for lam in (0.2, 0.4, 0.6, 0.8):
            scenario = make_scenario(lambda_S=lam, perspective="public")
            ns.append(optimize_family("enrichment", scenario, FAST).best_design.n)
        assert all(b >= a for a, b in zip(ns, ns[1:]))

    def test_stratified_reports_alpha_F(self):
        outcome = optimize_family("stratified", make_scenario(), FAST)
        assert outcome.derived_alpha_F is not None
        assert 0.0 <= outcome.derived_alpha_F <= 0.025

    def test_unknown_family(self, scenario):
        with pytest.raises(ValueError):
            optimize_family("bayesian", scenario)


class TestSelectDesign:
    def test_zero_rewards_select_no_trial(self):
        scenario = with_rewards(make_scenario(), NrS=0.0, NrF=0.0)
        outcome = select_design(scenario, FAST)
        assert outcome.best_design.kind == "no_trial"
        assert outcome.result.expected_utility == 0.0

    def test_case1_sponsor_midrange_prefers_stratified(self):
        scenario = make_scenario(lambda_S=0.5, case=CASE1)
        outcome = select_design(scenario, FAST)
        assert outcome.best_design.kind == "stratified"

    def test_utility_monotone_in_reward_scale(self):
        base = make_scenario(lambda_S=0.4)
        low = select_design(base, FAST).result.expected_utility
        richer = with_rewards(base, NrS=base.rewards.NrS * 2,
                              NrF=base.rewards.NrF * 2)
        high = select_design(richer, FAST).result.expected_utility
        assert high >= low - 1e-9


class TestSweeps:
    def test_single_point_sweep_matches_select(self):
        scenario = make_scenario(case=CASE1)
        rows = sweep_prevalence(scenario, [0.5], FAST)
        assert len(rows) == 1
        row = rows[0]
        assert isinstance(row, SweepRow)
        selected = select_design(scenario.with_lambda(0.5), FAST)
        assert row.selected == selected.best_design.kind
        assert row.outcomes[row.selected].best_design == selected.best_design

    def test_lambda_clamped_to_sweep_range(self):
        rows = sweep_prevalence(make_scenario(), [0.01, 0.99], FAST)
        assert rows[0].lambda_S == 0.05
        assert rows[1].lambda_S == 0.95

    def test_contour_single_cell(self):
        scenario = make_scenario(perspective="public")
        matrix = sweep_contour(scenario, [0.5], [0.3], "weak", FAST)
        assert len(matrix) == 1 and len(matrix[0]) == 1
        cell = matrix[0][0]
        assert isinstance(cell, ContourCell)
        direct = select_design(scenario.with_lambda(0.5), FAST)
        assert cell.selected == direct.best_design.kind

    def test_contour_rejects_negative_delta(self):
        with pytest.raises(ValueError):
            sweep_contour(make_scenario(), [0.5], [-0.1], "weak", FAST)

    def test_parallel_jobs_match_serial(self):
        scenario = make_scenario()
        serial = sweep_prevalence(scenario, [0.3, 0.6], FAST, jobs=1)
        parallel = sweep_prevalence(scenario, [0.3, 0.6], FAST, jobs=2)
        for a, b in zip(serial, parallel):
            assert a.selected == b.selected
            for family in a.outcomes:
                assert a.outcomes[family].best_design == b.outcomes[family].best_design
                assert (a.outcomes[family].result.expected_utility
                        == b.outcomes[family].result.expected_utility)


class TestNoTrialOutcome:
    def test_shape(self):
        outcome = no_trial_outcome()
        assert outcome.best_design == DesignSpec.no_trial()
        assert outcome.result.expected_utility == 0.0
        assert outcome.derived_alpha_F is None
