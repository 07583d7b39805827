"""Coherence, spectral and certificate diagnostics of line measurements.

Gram matrices compare the projected responses of single motifs; their least
eigenvalue measures how well separated motifs can be told apart. For
Gaussian motifs the angle-averaged normalized inner product of two motifs
at distance ``d`` has the closed form ``exp(-a/2) * I0(a/2)`` with
``a = d**2 / (4 r**2)`` and is bracketed by ``r/(2d)`` and
``(1 + a)**-1/2``; the latter also defines the approximate Gram matrix.

The averaged operator ``D * E[L* L] * D`` acts as a low-pass filter whose
spectrum is ``2r / (sqrt(pi) |xi|) * exp(-4 pi^2 r^2 |xi|^2)``.

Certificates are checked on the pixel grid: a per-line object ``Q``
built from the projected motif footprints certifies a support when
``D (x) L*[Q]`` equals one on the support and stays strictly below one
elsewhere.
"""

import logging
import math
from collections.abc import Sequence
from typing import Any, Self

import numpy as np
import numpy.typing as npt
from pydantic import field_validator, model_validator
from scipy import fft, linalg, special

from . import config
from ._base import FloatArray, LineprobeBaseModel, readonly_array
from .enums import GramMode, MotifKind, MotifNormalization
from .exceptions import ParameterValidationError, RangeValidationError
from .models import LineScanSet, Motif, ScanGeometry, SparseMap
from .motifs import convolve_array, correlate_array
from .ops import back_project_array, project_array
from .sim import equispaced_angles, hexagonal_lattice

_logger = logging.getLogger(__name__)

_SYMMETRY_TOLERANCE = 1e-8


# ============================================================================
# Gram matrices
# ============================================================================


class GramMatrix(LineprobeBaseModel):
    """Symmetric k×k Gram matrix of motif responses at ``centers``."""

    values: FloatArray
    centers: tuple[tuple[float, float], ...]
    mode: GramMode

    @field_validator("values", mode="before")
    @classmethod
    def _validate_values(cls, v: Any) -> FloatArray:
        arr = readonly_array(v, 2, "GramMatrix.values")
        if arr.shape[0] != arr.shape[1]:
            raise ValueError(f"Gram matrix must be square, got {arr.shape}")
        scale = max(1.0, float(np.abs(arr).max(initial=0.0)))
        if np.abs(arr - arr.T).max(initial=0.0) > 1e-12 * scale:
            raise ValueError("Gram matrix must be symmetric")
        if np.any(np.diag(arr) <= 0):
            raise ValueError("Gram matrix diagonal must be positive")
        return arr

    @model_validator(mode="after")
    def _validate_mode(self) -> Self:
        if len(self.centers) != self.values.shape[0]:
            raise ValueError("one center per Gram row is required")
        if self.mode is GramMode.EXPECTED_APPROX:
            if np.any(self.values <= 0) or np.any(self.values > 1):
                raise ValueError("approximate Gram entries must be in (0, 1]")
        return self

    @property
    def k(self) -> int:
        return int(self.values.shape[0])

    def normalized(self) -> FloatArray:
        """``G_ij / sqrt(G_ii G_jj)``."""
        d = np.sqrt(np.diag(self.values))
        out: FloatArray = self.values / np.outer(d, d)
        return out


def _centers_tuple(
    centers: Sequence[Sequence[float]],
) -> tuple[tuple[float, float], ...]:
    return tuple((float(c[0]), float(c[1])) for c in centers)


def motif_responses(
    centers: Sequence[Sequence[int]],
    motif: Motif,
    geometry: ScanGeometry,
    workers: int | None = None,
) -> FloatArray:
    """Projected single-motif responses, shape (k, n, m)."""
    n = geometry.n
    full = geometry.model_copy(update={"stride": 1})
    out = np.empty((len(centers), n, geometry.m))
    for j, (row, col) in enumerate(centers):
        if not (0 <= row < n and 0 <= col < n):
            raise RangeValidationError(
                f"center ({row}, {col}) outside the {n}x{n} grid",
                field="centers",
                value=(row, col),
            )
        spike = np.zeros((n, n))
        spike[int(row), int(col)] = 1.0
        out[j] = project_array(convolve_array(spike, motif), full, workers)
    return out


def empirical_gram(
    centers: Sequence[Sequence[int]],
    motif: Motif,
    geometry: ScanGeometry,
    workers: int | None = None,
) -> GramMatrix:
    """Gram matrix of ``L_Θ[D * δ_w]`` over all lines of ``geometry``."""
    responses = motif_responses(centers, motif, geometry, workers)
    flat = responses.reshape(len(centers), -1)
    gram = flat @ flat.T
    return GramMatrix(
        values=0.5 * (gram + gram.T),
        centers=_centers_tuple(centers),
        mode=GramMode.EMPIRICAL,
    )


def approx_gram(
    centers: Sequence[Sequence[float]] | FloatArray, r: float
) -> GramMatrix:
    """Closed-form matrix ``(1 + |w_i - w_j|^2 / 4r^2)^(-1/2)``."""
    if not r > 0:
        raise RangeValidationError(
            "motif radius must be positive", field="r", value=r, min_value=0
        )
    pts = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    diff = pts[:, None, :] - pts[None, :, :]
    dist2 = np.sum(diff * diff, axis=-1)
    return GramMatrix(
        values=(1.0 + dist2 / (4.0 * r * r)) ** -0.5,
        centers=_centers_tuple(pts),
        mode=GramMode.EXPECTED_APPROX,
    )


def least_eigenvalue(gram: GramMatrix | FloatArray) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Matrices up to 3×3 are cross-checked against the roots of their
    characteristic polynomial.

    Raises:
        ParameterValidationError: If the matrix is not square or its
            asymmetry exceeds 1e-8
    """
    values = gram.values if isinstance(gram, GramMatrix) else np.asarray(gram)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ParameterValidationError(
            f"matrix must be square, got shape {values.shape}",
            parameter="gram",
        )
    asym = float(np.abs(values - values.T).max(initial=0.0))
    if asym > _SYMMETRY_TOLERANCE:
        raise ParameterValidationError(
            f"matrix is not symmetric (max asymmetry {asym:.3e})",
            parameter="gram",
            value=asym,
        )
    k = values.shape[0]
    lam = float(
        linalg.eigh(values, eigvals_only=True, subset_by_index=[0, 0])[0]
    )
    if k <= 3:
        roots = np.roots(np.poly(values))
        check = float(np.min(roots.real))
        if abs(check - lam) > 1e-8 * max(1.0, abs(lam)):
            _logger.warning(
                f"Eigenvalue cross-check disagrees: eigh={lam:.12g}, "
                f"characteristic polynomial={check:.12g}"
            )
    return lam


# ============================================================================
# Pairwise coherence of Gaussian motifs
# ============================================================================


def coherence_bounds(r: float, d: float) -> tuple[float, float]:
    """Lower ``r/(2d)`` and upper ``(1 + d^2/4r^2)^(-1/2)`` bracket."""
    return r / (2.0 * d), (1.0 + d * d / (4.0 * r * r)) ** -0.5


def expected_coherence(r: float, d: float) -> float:
    """Angle average ``exp(-a/2) I0(a/2)`` with ``a = d^2 / 4r^2``."""
    a = d * d / (4.0 * r * r)
    return float(special.i0e(a / 2.0))


def pair_coherence(
    r: float, d: float, angles: int, workers: int | None = None
) -> float:
    """Normalized inner product of two projected Gaussian motifs.

    Both motifs sit on the central row, ``round(d)`` pixels apart, and the
    inner product is taken over ``angles`` equispaced lines.
    """
    gap = int(round(d))
    n = 2 * math.ceil(gap / 2.0 + 5.0 * r) + 2
    c = n // 2
    centers = [(c, c - gap // 2), (c, c - gap // 2 + gap)]
    geometry = ScanGeometry(angles=equispaced_angles(angles), n=n)
    motif = Motif(kind=MotifKind.GAUSSIAN, radius=r)
    gram = empirical_gram(centers, motif, geometry, workers)
    return float(gram.normalized()[0, 1])


def coherence_study(
    pairs: Sequence[tuple[float, float]],
    angles: int = 360,
    workers: int | None = None,
) -> list[dict[str, float]]:
    """Rows ``(r, d, lower, upper, expected, empirical)`` per ``(r, d)``."""
    rows: list[dict[str, float]] = []
    for r, d in pairs:
        lower, upper = coherence_bounds(r, d)
        rows.append(
            {
                "r": float(r),
                "d": float(d),
                "lower": lower,
                "upper": upper,
                "expected": expected_coherence(r, d),
                "empirical": pair_coherence(r, d, angles, workers),
            }
        )
        _logger.info(f"Coherence r={r:g} d={d:g}: {rows[-1]['empirical']:.4f}")
    return rows


def hexagonal_patch_sites(shells: int) -> int:
    """Site count of a hexagonal patch: the center plus ``shells - 1`` rings."""
    if shells < 1:
        raise RangeValidationError(
            "a patch needs at least one shell",
            field="shells",
            value=shells,
            min_value=1,
        )
    return 1 + 3 * shells * (shells - 1)


def lattice_eigen_study(
    ratios: Sequence[float],
    *,
    shells: Sequence[int] = (),
    sites: Sequence[int] = (),
    r: float = 1.0,
) -> list[dict[str, float]]:
    """Least eigenvalue of the approximate Gram on hexagonal patches.

    Patches are given either by shell count (``shells=2`` is the center and
    its six neighbours) or by an explicit site count, which takes the first
    sites in spiral order. Sites sit at spacing ``d = ratio * 2r``.
    """
    patches = [(float(s), hexagonal_patch_sites(s)) for s in shells]
    patches += [(math.nan, int(k)) for k in sites]
    rows: list[dict[str, float]] = []
    for ratio in ratios:
        for shell, k in patches:
            lattice = hexagonal_lattice(k) * (ratio * 2.0 * r)
            rows.append(
                {
                    "ratio": float(ratio),
                    "shells": shell,
                    "sites": float(k),
                    "lambda_min": least_eigenvalue(approx_gram(lattice, r)),
                }
            )
    return rows


# ============================================================================
# Low-pass spectrum of the averaged operator
# ============================================================================


class SpectrumReport(LineprobeBaseModel):
    """Radial spectrum of the averaged line-projection kernel.

    Attributes:
        frequencies: Radial frequencies in cycles per pixel
        empirical: Radially averaged magnitude of the measured kernel
        analytic: Closed-form spectrum at the same frequencies
        epsilon: Threshold used for the cutoffs
        cutoff: First frequency where the empirical spectrum is at most
            ``epsilon`` (NaN when it never is)
        cutoff_bound: Closed-form cutoff frequency
    """

    frequencies: FloatArray
    empirical: FloatArray
    analytic: FloatArray
    epsilon: float
    cutoff: float
    cutoff_bound: float
    r: float
    angles: int
    n: int

    @field_validator("frequencies", "empirical", "analytic", mode="before")
    @classmethod
    def _validate_profile(cls, v: Any) -> FloatArray:
        return readonly_array(v, 1, "SpectrumReport profile")

    def rows(self) -> list[dict[str, float]]:
        return [
            {"frequency": float(f), "empirical": float(e), "analytic": float(a)}
            for f, e, a in zip(
                self.frequencies, self.empirical, self.analytic, strict=True
            )
        ]

    def max_relative_deviation(self, low: float, high: float) -> float:
        """Largest ``|empirical/analytic - 1|`` for ``low <= f <= high``."""
        band = (self.frequencies >= low) & (self.frequencies <= high)
        if not np.any(band):
            return math.nan
        ratio = self.empirical[band] / self.analytic[band]
        return float(np.max(np.abs(ratio - 1.0)))


def analytic_spectrum(r: float, freq: FloatArray | float) -> FloatArray:
    """``2r / (sqrt(pi) |xi|) * exp(-4 pi^2 r^2 |xi|^2)`` for ``|xi| > 0``."""
    f = np.asarray(freq, dtype=np.float64)
    out: FloatArray = (2.0 * r / (math.sqrt(math.pi) * f)) * np.exp(
        -4.0 * math.pi**2 * r * r * f * f
    )
    return out


def cutoff_frequency(r: float, epsilon: float = config.CUTOFF_EPSILON) -> float:
    """Closed-form cutoff beyond which the analytic spectrum is ``<= eps``."""
    return (1.0 / r) * min(
        2.0 * r * r / epsilon,
        math.sqrt(abs(math.log(8.0 * r * r / epsilon))) + 0.2,
    )


def radial_average(spectrum: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Average ``spectrum`` (unshifted FFT layout) over rings of width 1/n.

    Returns frequencies ``1/n .. floor(n/2)/n`` and the ring means.
    """
    n = spectrum.shape[0]
    freq = fft.fftfreq(n)
    rho = np.hypot(freq[:, None], freq[None, :])
    bins = np.rint(rho * n).astype(int)
    top = n // 2
    flat = bins.ravel()
    sums = np.bincount(flat, weights=spectrum.ravel(), minlength=top + 1)
    counts = np.bincount(flat, minlength=top + 1)
    idx = np.arange(1, top + 1)
    return idx / n, sums[idx] / np.maximum(counts[idx], 1)


def lowpass_spectrum(
    r: float,
    angles: int,
    n: int,
    epsilon: float = config.CUTOFF_EPSILON,
    workers: int | None = None,
) -> SpectrumReport:
    """Measure the spectrum of ``D * E[L* L] * D`` with a Gaussian motif.

    Raises:
        RangeValidationError: If fewer than 8 angles are requested
    """
    if angles < 8:
        raise RangeValidationError(
            f"at least 8 angles are required, got {angles}",
            field="angles",
            value=angles,
            min_value=8,
        )
    geometry = ScanGeometry(angles=equispaced_angles(angles), n=n)
    motif = Motif(
        kind=MotifKind.GAUSSIAN,
        radius=r,
        normalization=MotifNormalization.UNIT_LINE_PROJECTION,
    )
    spike = np.zeros((n, n))
    spike[n // 2, n // 2] = 1.0
    smoothed = convolve_array(convolve_array(spike, motif), motif)
    kernel = back_project_array(
        project_array(smoothed, geometry, workers), geometry, workers
    )
    magnitude = np.abs(fft.fft2(kernel, workers=workers))
    freqs, empirical = radial_average(magnitude)
    below = np.nonzero(empirical <= epsilon)[0]
    cutoff = float(freqs[below[0]]) if below.size else math.nan
    _logger.info(
        f"Spectrum r={r:g} angles={angles} n={n}: cutoff {cutoff:.4f}"
    )
    return SpectrumReport(
        frequencies=freqs,
        empirical=empirical,
        analytic=analytic_spectrum(r, freqs),
        epsilon=epsilon,
        cutoff=cutoff,
        cutoff_bound=cutoff_frequency(r, epsilon),
        r=r,
        angles=angles,
        n=n,
    )


# ============================================================================
# Certificates
# ============================================================================


class CertificateReport(LineprobeBaseModel):
    """Grid evaluation of a certificate field ``D (x) L*[Q]``.

    Attributes:
        support_deviation: ``max |field - 1|`` over the support
        off_support_max: Largest field value off the support
        gram_min_eigenvalue: Least eigenvalue of the empirical Gram
        gram_max_eigenvalue: Largest eigenvalue of the empirical Gram
        overlapping_lines: Lines on which two motif footprints overlap
        passed: All three certificate conditions hold
        field: Certificate field on the pixel grid
    """

    support_deviation: float
    off_support_max: float
    gram_min_eigenvalue: float
    gram_max_eigenvalue: float
    overlapping_lines: tuple[int, ...] = ()
    passed: bool
    field: FloatArray

    @field_validator("field", mode="before")
    @classmethod
    def _validate_field(cls, v: Any) -> FloatArray:
        return readonly_array(v, 2, "CertificateReport.field")

    def summary(self) -> dict[str, Any]:
        return {
            "result": "PASS" if self.passed else "FAIL",
            "support_deviation": self.support_deviation,
            "off_support_max": self.off_support_max,
            "gram_min_eigenvalue": self.gram_min_eigenvalue,
            "gram_max_eigenvalue": self.gram_max_eigenvalue,
            "overlapping_lines": ",".join(
                str(i) for i in self.overlapping_lines
            ),
            "evaluated_on": "pixel grid",
        }


def _peaks(responses: FloatArray) -> npt.NDArray[np.intp]:
    """Sweep index of each motif's projected peak, shape (k, m)."""
    return np.argmax(responses, axis=1)


def overlapping_lines(
    x0: SparseMap, motif: Motif, geometry: ScanGeometry
) -> tuple[int, ...]:
    """Lines on which two support footprints lie closer than ``2r``."""
    support = x0.support()
    if len(support) < 2:
        return ()
    peaks = _peaks(motif_responses(support, motif, geometry))
    lines: list[int] = []
    for i in range(geometry.m):
        t = np.sort(peaks[:, i])
        if np.any(np.diff(t) < 2.0 * motif.radius):
            lines.append(i)
    return tuple(lines)


def build_certificate(
    x0: SparseMap,
    motif: Motif,
    geometry: ScanGeometry,
    workers: int | None = None,
) -> LineScanSet:
    """Per-line dual object that interpolates one on the support of ``x0``.

    Line ``i`` carries, for every motif ``j``, the projected footprint
    ``P_ij`` of that motif scaled by ``beta_j``, where ``G beta = 1`` over
    the empirical Gram ``G``. The field at pixel ``w`` is then
    ``sum_j beta_j <L[D * d_w], L[D * d_j]>``: exactly one on the support,
    and smaller off it as long as the footprints stay distinguishable.
    """
    support = x0.support()
    full = geometry.model_copy(update={"stride": 1})
    if not support:
        q = np.zeros((geometry.n, geometry.m))
        return LineScanSet(data=q, geometry=full)
    responses = motif_responses(support, motif, full, workers)
    flat = responses.reshape(len(support), -1)
    gram = flat @ flat.T
    gram = 0.5 * (gram + gram.T)
    try:
        weights = linalg.solve(gram, np.ones(len(support)), assume_a="sym")
    except linalg.LinAlgError:
        _logger.warning("Certificate system is singular; using least squares")
        weights = linalg.lstsq(gram, np.ones(len(support)))[0]
    q = np.tensordot(weights, responses, axes=1)
    return LineScanSet(data=q, geometry=full)


def certificate_field(
    q: LineScanSet, motif: Motif, workers: int | None = None
) -> FloatArray:
    """``D (x) L*[Q]`` on the pixel grid."""
    full = q.geometry.model_copy(update={"stride": 1})
    return correlate_array(back_project_array(q.data, full, workers), motif)


def check_certificate(
    x0: SparseMap,
    motif: Motif,
    geometry: ScanGeometry,
    q: LineScanSet | None = None,
    tolerance: float = config.SUPPORT_TOLERANCE,
    workers: int | None = None,
) -> CertificateReport:
    """Evaluate a certificate for the support of ``x0`` on the grid.

    ``q`` defaults to :func:`build_certificate`. The certificate passes when
    support values are within ``tolerance`` of one, every other pixel is
    below ``1 - tolerance``, and the empirical Gram is nonsingular.
    """
    if q is None:
        q = build_certificate(x0, motif, geometry, workers)
    support = x0.support()
    field = certificate_field(q, motif, workers)
    mask = x0.data > 0
    on = field[mask]
    off = field[~mask]
    deviation = float(np.max(np.abs(on - 1.0))) if on.size else 0.0
    off_max = float(off.max()) if off.size else -math.inf
    if support:
        gram = empirical_gram(support, motif, geometry, workers)
        eigs = linalg.eigvalsh(gram.values)
        lam_min, lam_max = float(eigs[0]), float(eigs[-1])
    else:
        lam_min = lam_max = 0.0
    gram_ok = bool(support) and lam_min > 1e-10 * lam_max
    passed = (
        gram_ok and deviation <= tolerance and off_max < 1.0 - tolerance
    )
    report = CertificateReport(
        support_deviation=deviation,
        off_support_max=off_max,
        gram_min_eigenvalue=lam_min,
        gram_max_eigenvalue=lam_max,
        overlapping_lines=overlapping_lines(x0, motif, geometry),
        passed=passed,
        field=field,
    )
    _logger.info(
        f"Certificate {'PASS' if passed else 'FAIL'}: "
        f"support dev {deviation:.2e}, off-support max {off_max:.6f}"
    )
    return report
