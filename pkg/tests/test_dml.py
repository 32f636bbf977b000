import math
from dataclasses import replace

import numpy as np
import pytest

from granger_dr.core.dml import (
    DrSitConfig,
    MaskingMode,
    RankingMetric,
    RieszFit,
    ScoreSamples,
    compute_score_samples,
    discover_all,
    dr_sit,
    fit_fold_models,
    paired_t_test,
    ranking_score,
    summary_edges,
)
from granger_dr.core.regression import RegressorSpec
from granger_dr.core.timeseries import Panel, assign_folds, build_lagged_design
from granger_dr.utils.errors import (
    IndexOutOfRange,
    InvalidConfig,
    LagTooLarge,
    TooFewSamples,
    TooFewTrajectories,
)
from tests.conftest import make_lagged_panel


class TestScores:
    def test_single_row_arithmetic(self):
        samples = ScoreSamples.from_predictions(1, [1.0], [0.5], [0.2])
        assert samples.psi_full[0] == pytest.approx(0.75)
        assert samples.psi_masked[0] == pytest.approx(0.36)
        assert samples.z[0] == pytest.approx(0.39)

    def test_constant_target(self):
        samples = ScoreSamples.from_predictions(1, np.full(4, 3.0), np.full(4, 3.0), np.full(4, 3.0))
        np.testing.assert_array_equal(samples.psi_full, np.full(4, 9.0))
        np.testing.assert_array_equal(samples.z, np.zeros(4))

    def test_oracle_regressor(self):
        y = np.array([1.0, -2.0, 0.5])
        samples = ScoreSamples.from_predictions(1, y, y, np.zeros(3))
        np.testing.assert_allclose(samples.psi_full, y**2)
        assert samples.theta_full == pytest.approx(np.mean(y**2))

    def test_difference_identity(self):
        rng = np.random.default_rng(0)
        y, g_full, g_masked = rng.standard_normal((3, 50))
        samples = ScoreSamples.from_predictions(1, y, g_full, g_masked)
        np.testing.assert_allclose(
            samples.z, (g_full - g_masked) * (2 * y - g_full - g_masked), atol=1e-12
        )

    def test_theta_is_fold_average(self):
        samples = ScoreSamples.from_predictions(
            1, [1.0, 1.0, 1.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0], fold=[0, 1, 1]
        )
        assert samples.theta_full == pytest.approx(0.5)
        assert samples.mean_z == pytest.approx(0.5)

    def test_separate_representer_arithmetic(self):
        samples = ScoreSamples.from_predictions(
            1, [1.0], [0.5], [0.2], alpha_full=[0.4], alpha_masked=[0.1]
        )
        assert samples.psi_full[0] == pytest.approx(0.5 + 0.4 * 0.5)
        assert samples.psi_masked[0] == pytest.approx(0.2 + 0.1 * 0.8)
        assert samples.z[0] == pytest.approx(0.42)

    def test_representer_equal_to_regression_gives_same_scores(self):
        rng = np.random.default_rng(3)
        y, g_full, g_masked = rng.standard_normal((3, 40))
        shared = ScoreSamples.from_predictions(1, y, g_full, g_masked)
        explicit = ScoreSamples.from_predictions(
            1, y, g_full, g_masked, alpha_full=g_full, alpha_masked=g_masked
        )
        np.testing.assert_allclose(explicit.z, shared.z, atol=1e-12)

    def test_std_needs_two_samples(self):
        samples = ScoreSamples.from_predictions(1, [1.0], [0.5], [0.2])
        with pytest.raises(TooFewSamples):
            samples.std_z


class TestPairedTTest:
    def test_all_zero(self):
        result = paired_t_test([0.0, 0.0, 0.0, 0.0])
        assert (result.t_stat, result.p_value, result.selected) == (0.0, 1.0, False)

    def test_one_two_three(self):
        result = paired_t_test([1.0, 2.0, 3.0])
        assert result.t_stat == pytest.approx(2.0 * math.sqrt(3.0))
        assert result.p_value == pytest.approx(0.0742, abs=1e-4)
        assert not result.selected

    def test_symmetric(self):
        result = paired_t_test([-1.0, 1.0])
        assert result.t_stat == 0.0
        assert result.p_value == 1.0

    def test_constant_nonzero(self):
        result = paired_t_test([2.0, 2.0, 2.0])
        assert result.t_stat == math.inf
        assert result.p_value == 0.0
        assert result.selected

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            paired_t_test([1.0])


class TestRankingScore:
    def test_zero_spread(self):
        assert ranking_score(_z_samples([0.0, 0.0, 0.0])) == 0.0

    def test_one_two_three(self):
        samples = _z_samples([1.0, 2.0, 3.0])
        assert ranking_score(samples, RankingMetric.STD_Z) == pytest.approx(1.0)
        assert ranking_score(samples, RankingMetric.ABS_T) == pytest.approx(3.4641, abs=1e-4)

    def test_monotone_in_spread(self):
        rng = np.random.default_rng(1)
        base = rng.standard_normal(30)
        assert ranking_score(_z_samples(2.0 * base)) > ranking_score(_z_samples(0.1 * base))


def _z_samples(z):
    """Samples whose per-row difference is exactly ``z`` (g_masked = 0, y = (z + 1) / 2, g_full = 1)."""
    z = np.asarray(z, dtype=float)
    y = (z + 1.0) / 2.0
    return ScoreSamples.from_predictions(1, y, np.ones(len(z)), np.zeros(len(z)))


class TestConfig:
    @pytest.mark.parametrize(
        "field, value",
        [("lag", 0), ("k_folds", 1), ("significance_alpha", 1.0), ("masking_mode", "drop")],
    )
    def test_invalid(self, field, value):
        with pytest.raises(InvalidConfig):
            DrSitConfig(**{field: value})

    def test_echo(self):
        echo = DrSitConfig(masking_mode="refit").to_dict()
        assert echo["masking_mode"] == "refit"
        assert echo["regressor"]["kind"] == "kernel_ridge_poly"
        assert echo["lag"] == 2


class TestDrSit:
    def test_detects_lagged_cause(self, lagged_panel, fast_config):
        report = dr_sit(lagged_panel, 0, fast_config)
        x1, x2 = report.edge_for("X1"), report.edge_for("X2")
        assert x1.selected, f"X1 should be selected, p={x1.p_value}"
        assert x1.p_value < 1e-3
        assert x1.ranking_score > x2.ranking_score
        assert report.variable_names == ("Y", "X1", "X2")

    def test_one_edge_per_candidate(self, lagged_panel, fast_config):
        report = dr_sit(lagged_panel, 1, fast_config)
        assert [edge.candidate for edge in report.edges] == [0, 2]
        assert all(edge.n == report.edges[0].n for edge in report.edges)
        assert len(report.fold_diagnostics) == fast_config.k_folds
        assert sum(d.n_heldout_rows for d in report.fold_diagnostics) == report.edges[0].n

    def test_deterministic(self, lagged_panel, fast_config):
        first = dr_sit(lagged_panel, 0, fast_config)
        second = dr_sit(lagged_panel, 0, fast_config)
        assert first.edges == second.edges

    def test_workers_do_not_change_results(self, lagged_panel, fast_config):
        config = replace(fast_config, masking_mode=MaskingMode.REFIT)
        serial = dr_sit(lagged_panel, 0, config, max_workers=1)
        threaded = dr_sit(lagged_panel, 0, config, max_workers=2)
        assert serial.edges == threaded.edges

    def test_refit_mode_detects_cause(self, lagged_panel, fast_config):
        config = replace(fast_config, masking_mode=MaskingMode.REFIT)
        report = dr_sit(lagged_panel, 0, config)
        assert report.edge_for("X1").selected
        assert report.config["masking_mode"] == "refit"

    def test_constant_candidate_is_degenerate(self, fast_config):
        panel = make_lagged_panel()
        trajectories = []
        for trajectory in panel.trajectories:
            trajectory = trajectory.copy()
            trajectory[:, 2] = 7.0
            trajectories.append(trajectory)
        panel = Panel(tuple(trajectories), panel.variable_names)
        report = dr_sit(panel, 0, fast_config)
        edge = report.edge_for("X2")
        assert edge.status == "degenerate"
        assert (edge.p_value, edge.t_stat, edge.ranking_score, edge.selected) == (1.0, 0.0, 0.0, False)

    def test_too_few_trajectories(self, lagged_panel):
        with pytest.raises(TooFewTrajectories):
            dr_sit(lagged_panel, 0, DrSitConfig(lag=1, k_folds=6))

    def test_lag_too_large(self, lagged_panel):
        with pytest.raises(LagTooLarge):
            dr_sit(lagged_panel, 0, DrSitConfig(lag=60))

    def test_candidate_checks(self, lagged_panel, fast_config):
        with pytest.raises(InvalidConfig):
            compute_score_samples(lagged_panel, 0, 0, fast_config)
        with pytest.raises(IndexOutOfRange):
            compute_score_samples(lagged_panel, 0, 3, fast_config)

    def test_score_samples_cover_every_row(self, lagged_panel, fast_config):
        samples = compute_score_samples(lagged_panel, 0, 1, fast_config)
        assert samples.n == 5 * 59
        assert sorted(set(samples.fold.tolist())) == [0, 1, 2, 3, 4]


def _independent_panel(seed, n_traj=5, timesteps=100, n_variables=3):
    rng = np.random.default_rng(seed)
    names = ("Y",) + tuple(f"X{j}" for j in range(1, n_variables))
    return Panel(tuple(rng.standard_normal((timesteps, n_variables)) for _ in range(n_traj)), names)


def _linear_panel(seed, n_traj=5, timesteps=200):
    """Y_t = 0.8 X1_{t-1} - 0.8 X2_{t-1} + noise; X3 is unrelated."""
    rng = np.random.default_rng(seed)
    trajectories = []
    for _ in range(n_traj):
        x = rng.standard_normal((timesteps, 3))
        y = np.empty(timesteps)
        y[0] = rng.standard_normal()
        y[1:] = 0.8 * x[:-1, 0] - 0.8 * x[:-1, 1] + 0.5 * rng.standard_normal(timesteps - 1)
        trajectories.append(np.column_stack([y, x]))
    return Panel(tuple(trajectories), ("Y", "X1", "X2", "X3"))


class TestRieszFit:
    def test_independent_fits_use_disjoint_trajectories(self, lagged_panel, fast_config):
        design = build_lagged_design(lagged_panel, 0, 1)
        assignment = assign_folds(lagged_panel.n_trajectories, 5, fast_config.seed)
        for fold_fit in fit_fold_models(design, assignment, fast_config):
            assert not fold_fit.shared
            regression_owners = set(design.row_trajectory[fold_fit.regression_rows].tolist())
            riesz_owners = set(design.row_trajectory[fold_fit.riesz_rows].tolist())
            heldout_owners = set(design.row_trajectory[fold_fit.heldout_rows].tolist())
            assert regression_owners and riesz_owners
            assert not regression_owners & riesz_owners
            assert not (regression_owners | riesz_owners) & heldout_owners

    def test_shared_mode_reuses_the_regression(self, lagged_panel, fast_config):
        config = replace(fast_config, riesz_fit=RieszFit.SHARED)
        samples = compute_score_samples(lagged_panel, 0, 1, config)
        np.testing.assert_array_equal(samples.alpha_full, samples.g_full)
        np.testing.assert_allclose(
            samples.z,
            (samples.g_full - samples.g_masked) * (2 * samples.y - samples.g_full - samples.g_masked),
            atol=1e-10,
        )
        assert dr_sit(lagged_panel, 0, config).edge_for("X1").selected

    def test_echo(self):
        assert DrSitConfig().to_dict()["riesz_fit"] == "independent"
        with pytest.raises(InvalidConfig):
            DrSitConfig(riesz_fit="twice")

    def test_null_differences_have_no_sign(self):
        negative = 0
        for seed in range(10):
            panel = _independent_panel(seed)
            report = dr_sit(panel, 0, DrSitConfig(lag=1, seed=seed))
            negative += sum(edge.mean_z < 0 for edge in report.edges)
        assert 4 <= negative <= 16, f"{negative} of 20 null differences are negative"


@pytest.mark.slow
class TestMaskingAgreement:
    def test_surrogate_and_refit_select_the_same_edges(self):
        agree = 0
        runs = 20
        for seed in range(runs):
            panel = _linear_panel(seed)
            surrogate = dr_sit(panel, 0, DrSitConfig(lag=1, seed=seed))
            refit = dr_sit(panel, 0, DrSitConfig(lag=1, seed=seed, masking_mode="refit"))
            agree += surrogate.selected_names() == refit.selected_names()
        assert agree >= 0.9 * runs


class TestDiscoverAll:
    def test_chain(self, lagged_panel, fast_config):
        reports = discover_all(lagged_panel, fast_config)
        assert [report.target_name for report in reports] == ["Y", "X1", "X2"]
        edges = summary_edges(reports)
        assert ("X1", "Y") in edges
        assert ("Y", "X1") not in edges or reports[1].edge_for("Y").p_value > 1e-3

    def test_error_carries_target(self, lagged_panel):
        config = DrSitConfig(lag=1, k_folds=6)
        with pytest.raises(TooFewTrajectories) as info:
            discover_all(lagged_panel, config)
        assert any("causes of Y" in note for note in info.value.__notes__)


class TestMlpBackend:
    def test_detects_lagged_cause(self, lagged_panel):
        pytest.importorskip("torch")
        regressor = RegressorSpec(kind="mlp", mlp_hidden=16, mlp_epochs=150, seed=1)
        report = dr_sit(lagged_panel, 0, DrSitConfig(lag=1, regressor=regressor))
        assert report.edge_for("X1").selected
