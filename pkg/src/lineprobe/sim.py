"""Synthetic samples and the full line-probe measurement simulation.

A measurement set is ``R = S{psi * L_Θ[D * X]} + noise``: motif convolution,
multi-angle line projection, per-line PSF blur, stride sampling along the
sweep and optional additive Gaussian noise.
"""

import logging
import math

import numpy as np

from . import config
from ._base import FloatArray
from .enums import MagnitudeMode, PlacementMode
from .exceptions import InfeasibleSampleError, RangeValidationError
from .models import (
    LineScanSet,
    Motif,
    PsfParams,
    SampleSpec,
    ScanGeometry,
    SparseMap,
)
from .motifs import convolve_array
from .ops import downsample, project_array
from .psf import box_half_width, convolve_columns, render_taps
from .utils import log_performance

_logger = logging.getLogger(__name__)

_SQRT3_2 = math.sqrt(3.0) / 2.0


# =============================================================================
# Angle sets
# =============================================================================


def equispaced_angles(m: int, span: float = 180.0) -> tuple[float, ...]:
    """``m`` angles ``i * span / m`` in degrees, wrapped to [-180, 180)."""
    if m < 1:
        raise RangeValidationError(
            "at least one angle is required", field="m", value=m, min_value=1
        )
    step = span / m
    return tuple(
        ((i * step + 180.0) % 360.0) - 180.0 for i in range(m)
    )


def random_angles(m: int, rng: np.random.Generator) -> tuple[float, ...]:
    """``m`` distinct angles drawn uniformly from [-180, 180)."""
    if m < 1:
        raise RangeValidationError(
            "at least one angle is required", field="m", value=m, min_value=1
        )
    angles: list[float] = []
    while len(angles) < m:
        angle = float(rng.uniform(-180.0, 180.0))
        if angle not in angles:
            angles.append(angle)
    return tuple(angles)


# =============================================================================
# Sample placement
# =============================================================================


def hexagonal_lattice(k: int) -> FloatArray:
    """First ``k`` sites of a unit hexagonal lattice, spiral order from 0.

    Sites are sorted by distance from the origin, then by polar angle in
    ``[0, 2π)``. Returns a (k, 2) array of ``(dy, dx)`` offsets.
    """
    if k < 1:
        return np.zeros((0, 2))
    reach = math.ceil(math.sqrt(k)) + 2
    sites: list[tuple[float, float, float, float]] = []
    for b in range(-reach, reach + 1):
        for a in range(-reach, reach + 1):
            dx = a + 0.5 * b
            dy = _SQRT3_2 * b
            dist = round(math.hypot(dx, dy), 9)
            theta = round(math.atan2(dy, dx) % (2.0 * math.pi), 9)
            sites.append((dist, theta, dy, dx))
    sites.sort()
    return np.array([(dy, dx) for _, _, dy, dx in sites[:k]])


def hexagonal_centers(k: int, d: float, n: int) -> list[tuple[int, int]]:
    """Pixel centers of the first ``k`` hexagonal-lattice sites of edge ``d``.

    The lattice is centered on pixel ``(n // 2, n // 2)`` and each site is
    rounded to the nearest pixel.

    Raises:
        RangeValidationError: If any of the ``k`` sites falls off the grid
    """
    offsets = hexagonal_lattice(k) * d
    pixels = np.rint(offsets + n // 2).astype(int)
    if np.any(pixels < 0) or np.any(pixels >= n):
        raise RangeValidationError(
            f"hexagonal lattice of {k} sites with spacing {d} "
            f"does not fit in a {n}x{n} grid",
            field="k",
            value=k,
        )
    return [(int(r), int(c)) for r, c in pixels]


def placement_radius(n: int, r: float) -> float:
    """Radius around the grid center that keeps motifs inside every line.

    Centers inside this disc keep the whole motif within the inscribed
    circle, so every sweep angle sees every motif.
    """
    return n / 2.0 - r - 1.0


def _packing_bound(radius: float, d: float) -> float:
    # disjoint discs of radius d/2 inside a disc of radius radius + d/2
    return ((radius + d / 2.0) / (d / 2.0)) ** 2


def _random_centers(
    spec: SampleSpec, rng: np.random.Generator
) -> list[tuple[int, int]]:
    c0 = (spec.n - 1) / 2.0
    radius = placement_radius(spec.n, spec.r)
    d = spec.min_distance
    if radius < 0 or spec.k > _packing_bound(radius, d):
        raise InfeasibleSampleError(
            f"infeasible density: {spec.k} motifs at separation {d:g} "
            f"cannot fit in a {spec.n}x{spec.n} grid",
            draws=0,
        )
    lo = math.ceil(c0 - radius)
    hi = math.floor(c0 + radius)
    accepted = np.zeros((0, 2))
    draws = 0
    while accepted.shape[0] < spec.k:
        if draws >= config.REJECTION_DRAW_CAP:
            raise InfeasibleSampleError(
                f"infeasible density: placed {accepted.shape[0]} of "
                f"{spec.k} motifs in {draws} draws",
                draws=draws,
            )
        draws += 1
        cand = rng.integers(lo, hi + 1, size=2).astype(np.float64)
        if math.hypot(cand[0] - c0, cand[1] - c0) > radius:
            continue
        if accepted.shape[0] and np.min(
            np.hypot(*(accepted - cand).T)
        ) < d:
            continue
        accepted = np.vstack([accepted, cand])
    _logger.debug(f"Placed {spec.k} motifs in {draws} draws")
    return [(int(r), int(c)) for r, c in accepted]


def min_pairwise_distance(centers: list[tuple[int, int]]) -> float:
    """Smallest distance between two centers (``inf`` for fewer than two)."""
    if len(centers) < 2:
        return math.inf
    pts = np.asarray(centers, dtype=np.float64)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())


def generate_sample(spec: SampleSpec) -> SparseMap:
    """Draw a sparse map of ``spec.k`` spikes according to ``spec``.

    Deterministic for a given spec (including its seed).

    Raises:
        InfeasibleSampleError: If random placement cannot fit the motifs
        RangeValidationError: If a hexagonal lattice does not fit
    """
    rng = np.random.default_rng(spec.seed)
    if spec.placement is PlacementMode.RANDOM:
        centers = _random_centers(spec, rng)
        if min_pairwise_distance(centers) < spec.min_distance:
            raise AssertionError("rejection sampler violated separation")
    elif spec.placement is PlacementMode.HEXAGONAL:
        centers = hexagonal_centers(spec.k, spec.min_distance, spec.n)
    else:
        centers = list(spec.centers)

    if spec.magnitudes is MagnitudeMode.UNIFORM:
        weights = rng.uniform(spec.magnitude_low, spec.magnitude_high, spec.k)
    else:
        weights = np.ones(spec.k)
    return SparseMap.from_centers(spec.n, centers, list(weights))


# =============================================================================
# Measurement simulation
# =============================================================================


def psf_half_width(psf: PsfParams, n: int, half_width: int | None) -> int:
    """Half-width used for rendering ``psf`` on a grid of side ``n``."""
    if half_width is not None:
        return half_width
    return box_half_width(psf.box, n)


@log_performance
def simulate_scan(
    x: SparseMap,
    motif: Motif,
    geometry: ScanGeometry,
    psf: PsfParams,
    noise_std: float = 0.0,
    stride: int | None = None,
    *,
    seed: int = 0,
    half_width: int | None = None,
    workers: int | None = None,
) -> LineScanSet:
    """Simulate line-probe measurements of a sparse sample.

    Args:
        x: Sparse map of spike weights
        motif: Motif superposed at every spike
        geometry: Sweep angles and grid size
        psf: One PSF vector per angle
        noise_std: Standard deviation of additive Gaussian noise
        stride: Sampling period along the sweep (defaults to
            ``geometry.stride``)
        seed: Seed of the noise generator
        half_width: PSF half-width (defaults to the box-wide rule)
        workers: FFT worker threads

    Returns:
        LineScanSet whose geometry carries the stride used
    """
    if psf.m != geometry.m:
        raise RangeValidationError(
            f"expected {geometry.m} PSF rows (one per angle), got {psf.m}",
            field="psf",
            value=psf.m,
        )
    step = geometry.stride if stride is None else stride
    if step < 1:
        raise RangeValidationError(
            "stride must be >= 1", field="stride", value=step, min_value=1
        )
    full = geometry.model_copy(update={"stride": 1})
    image = convolve_array(x.data, motif)
    lines = project_array(image, full, workers)
    w = psf_half_width(psf, geometry.n, half_width)
    taps = np.stack([render_taps(row, w) for row in psf.values])
    data = downsample(convolve_columns(lines, taps), step)
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        data = data + rng.normal(0.0, noise_std, size=data.shape)
    out_geometry = geometry.model_copy(update={"stride": step})
    return LineScanSet(data=data, geometry=out_geometry)
