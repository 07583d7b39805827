"""Tests for sample generation and measurement simulation."""

import math

import numpy as np
import pytest

from lineprobe.enums import MagnitudeMode, PlacementMode
from lineprobe.exceptions import InfeasibleSampleError, RangeValidationError
from lineprobe.models import (
    Motif,
    PsfBox,
    PsfParams,
    SampleSpec,
    ScanGeometry,
    SparseMap,
)
from lineprobe.motifs import convolve_array
from lineprobe.ops import project_array
from lineprobe.psf import convolve_columns, render_taps
from lineprobe.sim import (
    equispaced_angles,
    generate_sample,
    hexagonal_centers,
    hexagonal_lattice,
    min_pairwise_distance,
    placement_radius,
    random_angles,
    simulate_scan,
)

SHAPE = (1.0, 1.0, 2.0, 1.0, 2.0, 0.5)


class TestAngles:
    def test_equispaced(self):
        assert equispaced_angles(4) == (0.0, 45.0, 90.0, 135.0)

    def test_equispaced_full_turn_wraps(self):
        assert equispaced_angles(4, span=360.0) == (0.0, 90.0, -180.0, -90.0)

    def test_random_angles_distinct_and_in_range(self):
        angles = random_angles(50, np.random.default_rng(0))
        assert len(set(angles)) == 50
        assert all(-180.0 <= a < 180.0 for a in angles)

    def test_random_angles_reproducible(self):
        a = random_angles(5, np.random.default_rng(3))
        b = random_angles(5, np.random.default_rng(3))
        assert a == b

    @pytest.mark.parametrize("fn", [equispaced_angles, random_angles])
    def test_needs_one_angle(self, fn):
        with pytest.raises(RangeValidationError):
            if fn is random_angles:
                fn(0, np.random.default_rng(0))
            else:
                fn(0)


class TestHexagonalLattice:
    """Spiral-ordered unit hexagonal lattice."""

    def test_first_ring(self):
        sites = hexagonal_lattice(7)
        np.testing.assert_allclose(sites[0], (0.0, 0.0))
        np.testing.assert_allclose(np.hypot(*sites[1:].T), 1.0)
        np.testing.assert_allclose(sites[1], (0.0, 1.0), atol=1e-12)

    def test_spacing(self):
        sites = hexagonal_lattice(19)
        diff = sites[:, None, :] - sites[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        np.fill_diagonal(dist, np.inf)
        assert dist.min() == pytest.approx(1.0)

    def test_empty(self):
        assert hexagonal_lattice(0).shape == (0, 2)

    def test_centers_on_grid(self):
        centers = hexagonal_centers(3, 8.0, 64)
        assert centers[0] == (32, 32)
        assert centers[1] == (32, 40)

    def test_lattice_off_grid(self):
        with pytest.raises(RangeValidationError, match="does not fit"):
            hexagonal_centers(7, 20.0, 32)


class TestGenerateSample:
    """Random, hexagonal and explicit placement."""

    def test_random_respects_separation(self):
        spec = SampleSpec(n=64, k=8, r=3, ratio=1.0, seed=4)
        x = generate_sample(spec)
        centers = x.support()
        assert len(centers) == 8
        assert min_pairwise_distance(centers) >= 6.0

    def test_random_centers_inside_placement_disc(self):
        spec = SampleSpec(n=48, k=6, r=2, seed=1)
        c0 = (48 - 1) / 2.0
        for row, col in generate_sample(spec).support():
            assert math.hypot(row - c0, col - c0) <= placement_radius(48, 2)

    def test_deterministic(self):
        spec = SampleSpec(n=40, k=5, r=2, seed=9)
        np.testing.assert_array_equal(
            generate_sample(spec).data, generate_sample(spec).data
        )

    def test_seed_changes_sample(self):
        a = generate_sample(SampleSpec(n=40, k=5, r=2, seed=1))
        b = generate_sample(SampleSpec(n=40, k=5, r=2, seed=2))
        assert a.support() != b.support()

    def test_infeasible_density(self):
        spec = SampleSpec(n=16, k=40, r=3, ratio=2.0)
        with pytest.raises(InfeasibleSampleError, match="infeasible density"):
            generate_sample(spec)

    def test_uniform_magnitudes(self):
        spec = SampleSpec(
            n=48,
            k=5,
            r=2,
            magnitudes=MagnitudeMode.UNIFORM,
            lo=0.5,
            hi=2.0,
            seed=3,
        )
        weights = generate_sample(spec).data[generate_sample(spec).data > 0]
        assert len(weights) == 5
        assert np.all((weights >= 0.5) & (weights <= 2.0))

    def test_hexagonal(self):
        spec = SampleSpec(
            n=64, k=3, r=2, ratio=2.0, placement=PlacementMode.HEXAGONAL
        )
        assert generate_sample(spec).support()[0] == (32, 32)

    def test_explicit(self):
        spec = SampleSpec(
            n=16,
            k=2,
            r=1,
            placement=PlacementMode.EXPLICIT,
            centers=((3, 4), (10, 12)),
        )
        assert generate_sample(spec).support() == [(3, 4), (10, 12)]

    def test_min_pairwise_distance(self):
        assert min_pairwise_distance([(0, 0)]) == math.inf
        assert min_pairwise_distance([(0, 0), (3, 4), (10, 10)]) == 5.0


class TestSimulateScan:
    """Forward pipeline motif -> projection -> PSF -> stride -> noise."""

    def _setup(self, stride=1):
        n = 32
        x = SparseMap.from_centers(n, [(12, 14), (20, 18)])
        motif = Motif(radius=2)
        geometry = ScanGeometry(angles=(0.0, 60.0, -45.0), n=n, stride=stride)
        return x, motif, geometry

    def test_matches_composed_operators(self):
        x, motif, geometry = self._setup()
        psf = PsfParams.uniform(SHAPE, 3)
        scans = simulate_scan(x, motif, geometry, psf, half_width=6)
        lines = project_array(convolve_array(x.data, motif), geometry)
        taps = np.stack([render_taps(np.asarray(SHAPE), 6)] * 3)
        np.testing.assert_allclose(
            scans.data, convolve_columns(lines, taps), atol=1e-12
        )

    def test_delta_psf_is_pure_projection(self):
        x, motif, geometry = self._setup()
        scans = simulate_scan(x, motif, geometry, PsfParams.delta(3))
        lines = project_array(convolve_array(x.data, motif), geometry)
        np.testing.assert_allclose(scans.data, lines, atol=1e-12)

    def test_stride_keeps_every_sth_sample(self):
        x, motif, geometry = self._setup()
        psf = PsfParams.uniform(SHAPE, 3)
        full = simulate_scan(x, motif, geometry, psf, half_width=4)
        strided = simulate_scan(
            x, motif, geometry, psf, stride=3, half_width=4
        )
        assert strided.geometry.stride == 3
        assert strided.data.shape == (11, 3)
        np.testing.assert_allclose(strided.data, full.data[::3])

    def test_geometry_stride_is_default(self):
        x, motif, geometry = self._setup(stride=2)
        scans = simulate_scan(x, motif, geometry, PsfParams.delta(3))
        assert scans.data.shape == (16, 3)

    def test_noise_is_seeded(self):
        x, motif, geometry = self._setup()
        psf = PsfParams.delta(3)
        clean = simulate_scan(x, motif, geometry, psf)
        a = simulate_scan(x, motif, geometry, psf, 0.1, seed=5)
        b = simulate_scan(x, motif, geometry, psf, 0.1, seed=5)
        np.testing.assert_array_equal(a.data, b.data)
        residual = a.data - clean.data
        assert 0.05 < residual.std() < 0.15

    def test_psf_row_count(self):
        x, motif, geometry = self._setup()
        with pytest.raises(RangeValidationError, match="one per angle"):
            simulate_scan(x, motif, geometry, PsfParams.delta(2))

    def test_default_half_width_covers_box(self):
        x, motif, geometry = self._setup()
        box = PsfBox(lower=SHAPE, upper=(2.0, *SHAPE[1:]))
        psf = PsfParams.uniform(SHAPE, 3, box)
        a = simulate_scan(x, motif, geometry, psf)
        b = simulate_scan(x, motif, geometry, psf, half_width=16)
        np.testing.assert_allclose(a.data, b.data, atol=1e-2 * a.data.max())
