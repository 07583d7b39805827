"""Tests for trial scoring, campaigns and their output files."""

import math

import numpy as np
import pytest

from lineprobe.enums import ExperimentMode
from lineprobe.harness import (
    CALIBRATION_SHAPE,
    CALIBRATION_START_TAIL,
    EFFICIENCY_FIELDS,
    PhaseTransitionResult,
    TrialOutcome,
    calibration_study,
    calibration_box,
    component_centers,
    efficiency_table,
    fixed_density_side,
    normalized_image_error,
    phase_transition,
    reweight_comparison,
    reweight_lines,
    run_trial,
    support_match,
    three_line_study,
    write_pgm,
    write_phase_transition,
)
from lineprobe.models import CampaignConfig, Motif, SparseMap


class TestSupportMatch:
    """Component matching within a pixel tolerance."""

    def test_exact(self):
        x0 = SparseMap.from_centers(16, [(3, 3), (10, 12)])
        assert support_match(x0, x0)

    def test_split_spike_counts_once(self):
        x0 = SparseMap.from_centers(16, [(5, 5)])
        x_hat = np.zeros((16, 16))
        x_hat[5, 5] = 1.0
        x_hat[5, 6] = 0.9
        assert component_centers(x_hat).shape == (1, 2)
        assert support_match(x_hat, x0)

    def test_missing_spike(self):
        x0 = SparseMap.from_centers(16, [(3, 3), (10, 12)])
        x_hat = np.zeros((16, 16))
        x_hat[3, 3] = 1.0
        assert not support_match(x_hat, x0)

    def test_displaced_spike(self):
        x0 = SparseMap.from_centers(16, [(3, 3)])
        x_hat = np.zeros((16, 16))
        x_hat[3, 6] = 1.0
        assert not support_match(x_hat, x0)
        assert support_match(x_hat, x0, tol_px=3)

    def test_small_entries_ignored(self):
        x0 = SparseMap.from_centers(16, [(8, 8)])
        x_hat = np.zeros((16, 16))
        x_hat[8, 8] = 1.0
        x_hat[1, 1] = 0.2
        assert support_match(x_hat, x0)

    def test_empty(self):
        empty = SparseMap.from_centers(8, [])
        assert support_match(np.zeros((8, 8)), empty)
        assert component_centers(np.zeros((8, 8))).shape == (0, 2)


class TestNormalizedError:
    def test_identical_is_zero(self):
        y = np.random.default_rng(0).random((6, 6))
        assert normalized_image_error(y, y) == pytest.approx(0.0, abs=1e-12)

    def test_scale_invariant(self):
        y = np.random.default_rng(1).random((6, 6))
        assert normalized_image_error(3.0 * y, y) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_orthogonal_images(self):
        a = np.zeros((4, 4))
        b = np.zeros((4, 4))
        a[0, 0] = 1.0
        b[3, 3] = 2.0
        assert normalized_image_error(a, b) == pytest.approx(math.sqrt(2))

    def test_zero_estimate(self):
        b = np.ones((4, 4))
        assert normalized_image_error(np.zeros((4, 4)), b) == pytest.approx(
            1.0
        )


class TestSides:
    def test_fixed_density_side(self):
        assert fixed_density_side(1, 3.0, 1.0 / 6.0) == 16
        assert fixed_density_side(8, 3.0, 1.0 / 6.0) == 44

    def test_side_grows_with_disc_count(self):
        sides = [fixed_density_side(k, 2.0, 0.2) for k in (1, 4, 16, 64)]
        assert sides == sorted(sides)
        assert sides[-1] > sides[0]

    def test_reweight_lines(self):
        assert reweight_lines(4) == 8
        assert reweight_lines(15) == 8
        assert reweight_lines(16) == 16


class TestTrialOutcome:
    def test_row(self):
        outcome = TrialOutcome(
            mode=ExperimentMode.FIXED_AREA, n=32, lines=4, discs=2,
            trial=1, seed=99, success=True, relative_error=0.25,
            runtime=1.5,
        )
        row = outcome.row()
        assert row["mode"] == "fixed-area"
        assert row["success"] == 1
        assert row["feasible"] == 1
        assert "runtime" not in row
        assert outcome.row(log_runtime=True)["runtime"] == 1.5


def _result(success):
    return PhaseTransitionResult(
        mode=ExperimentMode.FIXED_AREA,
        lines=(2, 4, 8),
        discs=(1, 3),
        sides=(32, 32),
        success=success,
    )


class TestPhaseTransitionResult:
    """Success grids, frontier and efficiency."""

    def test_rows_and_fieldnames(self):
        result = _result([[0.0, 0.5, 1.0], [0.0, 0.0, 0.25]])
        assert result.fieldnames == ["discs", "n", "lines_2", "lines_4",
                                     "lines_8"]
        assert result.rows()[0] == {
            "discs": 1,
            "n": 32,
            "lines_2": 0.0,
            "lines_4": 0.5,
            "lines_8": 1.0,
        }

    def test_frontier(self):
        result = _result([[0.0, 0.5, 1.0], [0.0, 0.0, 0.25]])
        assert result.frontier(0.5) == [4, None]
        assert result.frontier(0.25) == [4, 8]

    def test_nan_cells_never_reach_level(self):
        result = _result([[np.nan, np.nan, np.nan], [0.0, 1.0, 1.0]])
        assert result.frontier() == [None, 4]

    def test_efficiency_table(self):
        result = _result([[0.0, 0.5, 1.0], [0.0, 0.0, 0.25]])
        rows = efficiency_table(result)
        assert rows[0]["lines_at_50"] == 4
        assert rows[0]["line_probe_samples"] == 128
        assert rows[0]["point_probe_samples"] == 1024
        assert rows[0]["ratio"] == pytest.approx(8.0)
        assert rows[1]["lines_at_50"] == ""
        assert math.isnan(rows[1]["ratio"])
        assert set(rows[0]) == set(EFFICIENCY_FIELDS)


class TestCampaigns:
    """Small end-to-end campaigns."""

    CAMPAIGN = {
        "n": 24,
        "r": 2.0,
        "lines": (4, 6),
        "discs": (1,),
        "trials": 2,
        "seed": 5,
        "K": 1,
        "L": 10,
    }

    def test_run_trial_outcome(self):
        outcome = run_trial(24, 1, 6, 2.0, 17, motif=Motif(radius=2))
        assert outcome.feasible
        assert outcome.seed == 17
        assert 0.0 <= outcome.relative_error <= 2.0
        assert outcome.runtime is not None

    def test_run_trial_infeasible(self):
        outcome = run_trial(16, 30, 4, 3.0, 0, motif=Motif(radius=3))
        assert not outcome.feasible
        assert not outcome.success
        assert math.isnan(outcome.relative_error)

    def test_deterministic_across_thread_counts(self):
        campaign = CampaignConfig.model_validate(self.CAMPAIGN)
        serial = phase_transition(campaign, threads=1)
        parallel = phase_transition(campaign, threads=3)
        np.testing.assert_array_equal(serial.success, parallel.success)
        assert [o.row() for o in serial.outcomes] == [
            o.row() for o in parallel.outcomes
        ]
        assert serial.success.shape == (1, 2)
        assert all(o.runtime is None for o in serial.outcomes)

    def test_infeasible_cells_are_nan(self):
        campaign = CampaignConfig.model_validate(
            {**self.CAMPAIGN, "n": 16, "r": 3.0, "discs": (40,), "trials": 1}
        )
        result = phase_transition(campaign, threads=1)
        assert np.isnan(result.success).all()

    def test_fixed_density_sides(self):
        campaign = CampaignConfig.model_validate(
            {
                **self.CAMPAIGN,
                "mode": "fixed-density",
                "discs": (1, 2),
                "lines": (4,),
                "trials": 1,
                "density_fraction": 0.2,
            }
        )
        result = phase_transition(campaign, threads=1)
        assert result.sides == (
            fixed_density_side(1, 2.0, 0.2),
            fixed_density_side(2, 2.0, 0.2),
        )

    def test_write_phase_transition(self, tmp_path):
        campaign = CampaignConfig.model_validate(
            {**self.CAMPAIGN, "trials": 1, "lines": (4,)}
        )
        result = phase_transition(campaign, threads=1)
        paths = write_phase_transition(tmp_path, result, log_runtime=False)
        assert paths["pt"].name == "pt_fixed-area.csv"
        pt = paths["pt"].read_text().splitlines()
        assert pt[0] == "discs,n,lines_4"
        assert len(pt) == 2
        trials = paths["trials"].read_text().splitlines()
        assert trials[0].startswith("mode,n,lines,discs,trial,seed")
        assert "runtime" not in trials[0]
        assert paths["efficiency"].read_text().startswith("discs,n,")

    def test_reweight_comparison_rows(self):
        rows = reweight_comparison(
            (1,), trials=1, n=24, r=2.0, rounds=2, iterations=5, threads=1
        )
        assert rows[0]["discs"] == 1
        assert rows[0]["lines"] == 8
        for key in ("big_lambda", "small_lambda", "reweighted"):
            assert 0.0 <= rows[0][key] <= 2.0

    def test_calibration_box_frees_amplitude_and_tail(self):
        box = calibration_box(4.0)
        free = np.flatnonzero(box.lower != box.upper)
        assert free.tolist() == [0, 4]
        truth = np.concatenate([[4.0], CALIBRATION_SHAPE])
        start = truth.copy()
        start[[0, 4]] = [1.0, CALIBRATION_START_TAIL]
        assert box.contains(truth)
        assert box.contains(start)

    @pytest.mark.slow
    def test_calibration_study(self):
        out = calibration_study(1, n=32, k=2, rounds=2, iterations=20)
        assert out["trials"] == 1.0
        assert 0.0 <= out["calibrated"] <= 1.0
        assert 0.0 <= out["frozen"] <= 1.0
        assert 0.0 <= out["contrast"] <= out["calibrated"]

    @pytest.mark.slow
    def test_three_line_study(self):
        rate = three_line_study(1, n=48, separation=12.0, threads=1)
        assert 0.0 <= rate <= 1.0


class TestPgm:
    def test_write_pgm(self, tmp_path):
        path = tmp_path / "pt.pgm"
        write_pgm(path, np.array([[0.0, 1.0], [np.nan, 0.5]]), scale=2)
        lines = path.read_text().splitlines()
        assert lines[:3] == ["P2", "4 4", "255"]
        assert lines[3] == "0 0 255 255"
        assert lines[5] == "0 0 128 128"
