"""Long-running checks at the full experiment settings."""

import math

import numpy as np
import pytest

from lineprobe.analysis import (
    check_certificate,
    coherence_bounds,
    lowpass_spectrum,
    pair_coherence,
)
from lineprobe.harness import (
    calibration_study,
    efficiency_table,
    phase_transition,
    reweight_comparison,
    three_line_study,
)
from lineprobe.models import (
    CampaignConfig,
    Image,
    Motif,
    SampleSpec,
    ScanGeometry,
)
from lineprobe.ops import back_project_array, line_project, project_array
from lineprobe.sim import generate_sample, random_angles

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("r,d", [(2, 4), (2, 8), (4, 8), (4, 32)])
def test_coherence_inside_bracket(r, d):
    lower, upper = coherence_bounds(r, d)
    value = pair_coherence(r, d, 360)
    assert lower - 0.03 <= value <= upper + 0.03


def test_adjointness_many_geometries():
    rng = np.random.default_rng(2024)
    for case in range(100):
        n = (32, 64)[case % 2]
        m = (1, 4, 9)[case % 3]
        angles = tuple(rng.uniform(-180.0, 180.0, m))
        geom = ScanGeometry(angles=angles, n=n)
        y = rng.standard_normal((n, n))
        r = rng.standard_normal((n, m))
        ly = project_array(y, geom)
        lhs = float(np.vdot(r, ly))
        rhs = float(np.vdot(back_project_array(r, geom), y))
        assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(r) * np.linalg.norm(ly)


def test_mass_conservation_many_images():
    rng = np.random.default_rng(7)
    n = 64
    yy, xx = np.mgrid[0:n, 0:n].astype(float)
    c = (n - 1) / 2.0
    for _ in range(50):
        data = np.zeros((n, n))
        for _ in range(4):
            rho, phase = rng.uniform(0, 12), rng.uniform(0, 2 * np.pi)
            cy, cx = c + rho * math.sin(phase), c + rho * math.cos(phase)
            data += rng.uniform(0.5, 2.0) * np.exp(
                -((yy - cy) ** 2 + (xx - cx) ** 2) / 18.0
            )
        image = Image(data=data)
        geom = ScanGeometry(angles=tuple(rng.uniform(-180, 180, 6)), n=n)
        totals = math.sqrt(geom.m) * line_project(image, geom).data.sum(0)
        np.testing.assert_allclose(totals, image.total_mass(), rtol=1e-9)


def test_spectrum_matches_analytic_band():
    report = lowpass_spectrum(1.0, 360, 128)
    assert report.max_relative_deviation(0.05, 0.3) <= 0.05


def test_certificate_pass_rate_three_random_lines():
    motif = Motif(radius=1)
    passed = 0
    for seed in range(50):
        x0 = generate_sample(
            SampleSpec(n=128, k=3, r=1.0, min_sep_ratio=20.0, seed=seed)
        )
        angles = random_angles(3, np.random.default_rng(seed))
        geometry = ScanGeometry(angles=angles, n=128)
        passed += check_certificate(x0, motif, geometry).passed
    assert passed / 50 >= 0.9


def test_three_line_recovery_rate():
    assert three_line_study(50) >= 0.9


def test_calibration_needed_for_tailed_psf():
    out = calibration_study(20, seed=3)
    assert out["trials"] == 20.0
    assert out["calibrated"] >= 0.8
    assert out["frozen"] < out["calibrated"]
    assert out["contrast"] >= 0.8


def test_reweighting_beats_fixed_penalties():
    (row,) = reweight_comparison((8,), 30, seed=1)
    assert row["reweighted"] < row["small_lambda"]
    assert row["reweighted"] < row["big_lambda"]


def test_phase_transition_frontier():
    campaign = CampaignConfig(
        n=60,
        r=3.0,
        lines=(2, 4, 8, 12, 16),
        discs=(2, 8, 16),
        trials=20,
        seed=11,
    )
    result = phase_transition(campaign)
    frontier = result.frontier(0.5)
    found = [m for m in frontier if m is not None]
    assert found
    assert frontier[: len(found)] == found
    assert found == sorted(found)
    table = efficiency_table(result)
    assert table[-1]["ratio"] >= 3.0
