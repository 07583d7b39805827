"""Tests for the reweighted reconstruction and its building blocks."""

import numpy as np
import pydantic
import pytest

from lineprobe.enums import PsfCoupling
from lineprobe.exceptions import LipschitzBlowupError, ShapeMismatchError
from lineprobe.harness import component_centers, support_match
from lineprobe.models import (
    Motif,
    PsfBox,
    PsfParams,
    ScanGeometry,
    SolverConfig,
    SparseMap,
)
from lineprobe.sim import equispaced_angles, simulate_scan
from lineprobe.solver import (
    ReweightState,
    StepCertificate,
    grad_p,
    grad_x,
    location_map,
    prox_step,
    reconstruct,
    reweight_penalty,
    smooth_objective,
    tie_gradient,
    tie_values,
)

SHAPE = (1.0, 1.0, 2.0, 1.5, 2.0, 0.5)
W = 4


@pytest.fixture
def problem():
    """Small noise-free problem with a non-trivial PSF."""
    n = 24
    motif = Motif(radius=2)
    geometry = ScanGeometry(angles=(0.0, 50.0, 100.0), n=n)
    x0 = SparseMap.from_centers(n, [(8, 9), (15, 14)])
    psf = PsfParams.uniform(SHAPE, 3)
    scans = simulate_scan(x0, motif, geometry, psf, half_width=W)
    return scans, motif, x0


class TestGradients:
    """Analytic gradients against central differences of the misfit."""

    def test_grad_x(self, problem):
        scans, motif, _ = problem
        rng = np.random.default_rng(0)
        psf = PsfParams.uniform(SHAPE, 3)
        x = rng.random((24, 24))
        g = grad_x(x, psf, scans, motif, half_width=W)
        for _ in range(3):
            e = rng.standard_normal((24, 24))
            h = 1e-4
            fd = (
                smooth_objective(x + h * e, psf, scans, motif, W)
                - smooth_objective(x - h * e, psf, scans, motif, W)
            ) / (2 * h)
            assert float(np.vdot(g, e)) == pytest.approx(fd, rel=1e-6)

    def test_grad_p_independent(self, problem):
        scans, motif, _ = problem
        lower = np.asarray(SHAPE) * 0.5
        upper = np.asarray(SHAPE) * 2.0
        box = PsfBox(lower=lower, upper=upper)
        values = np.tile(np.asarray(SHAPE), (3, 1))
        values[:, 0] = (0.8, 1.1, 1.3)
        values[1, 2] = 2.4
        psf = PsfParams(values=values, box=box)
        x = np.random.default_rng(1).random((24, 24))
        g = grad_p(x, psf, scans, motif, W, PsfCoupling.INDEPENDENT)
        scale = np.abs(g).max()
        h = 1e-5
        for i in range(3):
            for c in range(6):
                hi = values.copy()
                lo = values.copy()
                hi[i, c] += h
                lo[i, c] -= h
                fd = (
                    smooth_objective(
                        x, PsfParams(values=hi, box=box), scans, motif, W
                    )
                    - smooth_objective(
                        x, PsfParams(values=lo, box=box), scans, motif, W
                    )
                ) / (2 * h)
                assert g[i, c] == pytest.approx(
                    fd, rel=1e-4, abs=1e-6 * scale
                )

    def test_grad_p_frozen_is_zero(self, problem):
        scans, motif, x0 = problem
        psf = PsfParams.uniform(SHAPE, 3)
        g = grad_p(x0, psf, scans, motif, W, PsfCoupling.FROZEN)
        assert not g.any()

    def test_true_sample_has_zero_misfit(self, problem):
        scans, motif, x0 = problem
        psf = PsfParams.uniform(SHAPE, 3)
        assert smooth_objective(x0, psf, scans, motif, W) < 1e-20
        np.testing.assert_allclose(
            grad_x(x0, psf, scans, motif, W), 0.0, atol=1e-9
        )

    def test_psf_row_count(self, problem):
        scans, motif, x0 = problem
        with pytest.raises(ShapeMismatchError, match="one per angle"):
            smooth_objective(x0, PsfParams.uniform(SHAPE, 2), scans, motif)


class TestCoupling:
    def test_tie_values_shared_shape(self):
        values = np.array([[1.0, 2.0, 2.0, 1.0, 1.0, 0.0],
                           [3.0, 4.0, 2.0, 3.0, 1.0, 1.0]])
        tied = tie_values(values, PsfCoupling.SHARED_SHAPE)
        np.testing.assert_allclose(tied[:, 0], (1.0, 3.0))
        np.testing.assert_allclose(tied[0, 1:], tied[1, 1:])
        np.testing.assert_allclose(tied[0, 1:], (3.0, 2.0, 2.0, 1.0, 0.5))

    def test_tie_values_independent_is_copy(self):
        values = np.ones((2, 6))
        out = tie_values(values, PsfCoupling.INDEPENDENT)
        np.testing.assert_array_equal(out, values)
        assert out is not values

    def test_tie_gradient(self):
        grad = np.arange(12.0).reshape(2, 6)
        shared = tie_gradient(grad, PsfCoupling.SHARED_SHAPE)
        np.testing.assert_allclose(shared[:, 0], (0.0, 6.0))
        np.testing.assert_allclose(shared[1, 1:], grad[:, 1:].sum(axis=0))
        assert not tie_gradient(grad, PsfCoupling.FROZEN).any()


class TestProximalPieces:
    def test_prox_step(self):
        v = np.array([[-1.0, 0.2], [0.5, 3.0]])
        np.testing.assert_allclose(
            prox_step(v, 0.3), [[0.0, 0.0], [0.2, 2.7]]
        )

    def test_location_map(self):
        x = np.array([[0.0, 0.4], [1.0, 0.6]])
        np.testing.assert_array_equal(location_map(x), [[0, 0], [1, 1]])
        assert not location_map(np.zeros((3, 3))).any()

    def test_reweight_penalty(self):
        x = np.array([[0.0, 1.0]])
        lam = reweight_penalty(x, 2.0, 0.1, 1e-12)
        np.testing.assert_allclose(lam, [[0.2 / 1e-12, 0.2 / (1 + 1e-12)]])

    def test_reweight_penalty_floors_misfit(self):
        lam = reweight_penalty(np.ones((1, 1)), 0.0, 1.0, 1e-3)
        assert lam[0, 0] == pytest.approx(1e-3 / (1 + 1e-3))

    def test_reweight_state_needs_positive_penalty(self):
        with pytest.raises(pydantic.ValidationError):
            ReweightState(lam=np.zeros((2, 2)), round=1)

    def test_step_certificate(self):
        cert = StepCertificate(
            round=1, iteration=1, block="X", value=1.0, bound=1.0,
            step=1.0, halvings=0,
        )
        assert cert.satisfied
        assert not cert.model_copy(update={"value": 1.1}).satisfied


class TestReconstruct:
    """End-to-end reweighted solves."""

    def test_large_first_penalty_keeps_zero(self, problem):
        scans, motif, _ = problem
        settings = SolverConfig(
            rounds=1, iterations=5, initial_scale=1.0, half_width=W
        )
        result = reconstruct(scans, motif, PsfParams.delta(3), settings)
        assert not result.x.data.any()
        assert not result.location_map.any()

    def test_objective_monotone_within_rounds(self, problem):
        scans, motif, _ = problem
        settings = SolverConfig(rounds=2, iterations=20)
        result = reconstruct(
            scans, motif, PsfParams.uniform(SHAPE, 3), settings
        )
        for state in result.states:
            history = np.asarray(state.history)
            slack = 1e-9 * np.abs(history).max()
            assert np.all(np.diff(history) <= slack)
        assert all(cert.satisfied for cert in result.certificates)
        assert len(result.states) == 2
        assert len(result.trace) == sum(len(s.history) for s in result.states)

    def test_shared_shape_stays_tied_and_in_box(self, problem):
        scans, motif, _ = problem
        box = PsfBox(
            lower=(0.5, 0.5, 1.0, 0.5, 1.0, 0.0),
            upper=(2.0, 2.0, 3.0, 2.0, 3.0, 1.0),
        )
        init = PsfParams.uniform((1.0, 1.5, 2.5, 1.0, 1.5, 0.3), 3, box)
        settings = SolverConfig(rounds=1, iterations=10, half_width=W)
        result = reconstruct(scans, motif, init, settings)
        values = result.psf.values
        np.testing.assert_allclose(values[0, 1:], values[1, 1:])
        np.testing.assert_allclose(values[0, 1:], values[2, 1:])
        assert box.contains(values[0]) and box.contains(values[2])
        assert any(c.block == "p" for c in result.certificates)

    def test_frozen_coupling_keeps_psf(self, problem):
        scans, motif, _ = problem
        box = PsfBox(lower=np.asarray(SHAPE) * 0.5, upper=SHAPE)
        init = PsfParams.uniform(SHAPE, 3, box)
        settings = SolverConfig(
            rounds=1, iterations=5, coupling=PsfCoupling.FROZEN, half_width=W
        )
        result = reconstruct(scans, motif, init, settings)
        np.testing.assert_array_equal(result.psf.values, init.values)
        assert all(c.block == "X" for c in result.certificates)

    def test_backtracking_blowup(self, problem):
        scans, motif, _ = problem
        settings = SolverConfig(
            rounds=1, iterations=2, initial_step=1e12, max_halvings=1,
            half_width=W,
        )
        with pytest.raises(LipschitzBlowupError) as excinfo:
            reconstruct(scans, motif, PsfParams.uniform(SHAPE, 3), settings)
        assert excinfo.value.block == "X"

    def test_recovers_separated_discs(self):
        n = 32
        motif = Motif(radius=2)
        geometry = ScanGeometry(angles=equispaced_angles(12), n=n)
        truth = [(10, 11), (20, 21)]
        x0 = SparseMap.from_centers(n, truth)
        scans = simulate_scan(x0, motif, geometry, PsfParams.delta(12))
        settings = SolverConfig(rounds=3, iterations=50)
        result = reconstruct(scans, motif, PsfParams.delta(12), settings)
        peak = np.unravel_index(np.argmax(result.x.data), (n, n))
        assert min(
            max(abs(peak[0] - r), abs(peak[1] - c)) for r, c in truth
        ) <= 1
        assert result.smooth_value < smooth_objective(
            np.zeros((n, n)), PsfParams.delta(12), scans, motif
        )

    def test_single_disc_magnitude_with_known_psf(self):
        n = 32
        motif = Motif(radius=2)
        geometry = ScanGeometry(angles=equispaced_angles(8), n=n)
        x0 = SparseMap.from_centers(n, [(16, 15)])
        psf = PsfParams.uniform(SHAPE, 8)
        scans = simulate_scan(x0, motif, geometry, psf, half_width=W)
        settings = SolverConfig(iterations=200, half_width=W)
        result = reconstruct(scans, motif, psf, settings)
        np.testing.assert_array_equal(result.location_map, x0.data)
        assert result.x.data[16, 15] == pytest.approx(1.0, rel=1e-3)

    def test_three_discs_seven_lines_calibrated(self):
        n = 48
        m = 7
        motif = Motif(radius=3)
        angles = tuple((45.0 * i + 180.0) % 360.0 - 180.0 for i in range(m))
        geometry = ScanGeometry(angles=angles, n=n)
        x0 = SparseMap.from_centers(n, [(14, 16), (31, 20), (22, 34)])
        shape = np.asarray(SHAPE[1:])
        box = PsfBox(
            lower=np.concatenate([[0.1], shape]),
            upper=np.concatenate([[10.0], shape]),
        )
        values = np.tile(np.asarray(SHAPE), (m, 1))
        values[:, 0] = np.linspace(1.0, 2.5, m)
        truth = PsfParams(values=values, box=box)
        scans = simulate_scan(x0, motif, geometry, truth, half_width=W)
        start = PsfParams.uniform(np.concatenate([[1.0], shape]), m, box)
        settings = SolverConfig(rounds=6, iterations=50, half_width=W)
        result = reconstruct(scans, motif, start, settings)
        assert support_match(result.location_map, x0)
        assert len(component_centers(result.location_map)) == 3
