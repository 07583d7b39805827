"""Parametric point-spread function along the sweep direction.

The probe response is a two-sided power-law decay smoothed by a Gaussian::

    g(k) = (c_l*|k| + 1)**(-alpha_l)   for k < 0
    g(0) = 1
    g(k) = (c_r*k + 1)**(-alpha_r)     for k > 0
    taps = a * (g conv f_sigma)        on offsets -w..w

with ``f_sigma`` a discrete Gaussian normalized to unit sum (a delta when
sigma is 0). Every sweep column is convolved with its own kernel; the
adjoint is the matching correlation.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
from pydantic import field_validator

from . import config
from ._base import FloatArray, LineprobeBaseModel, readonly_array
from .exceptions import DomainError, RangeValidationError, ShapeMismatchError
from .models import (
    AMPLITUDE,
    N_COORDINATES,
    SIGMA,
    LineScanSet,
    PsfBox,
    PsfKernel,
    PsfParams,
    check_domain,
)

_logger = logging.getLogger(__name__)


# =============================================================================
# Rendering
# =============================================================================


def _gaussian_taps(sigma: float, w: int) -> FloatArray:
    taps = np.zeros(2 * w + 1)
    if sigma == 0.0:
        taps[w] = 1.0
        return taps
    k = np.arange(-w, w + 1, dtype=np.float64)
    taps = np.exp(-(k * k) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def _decay(vector: FloatArray, reach: int) -> FloatArray:
    """Unsmoothed two-sided decay on offsets ``-reach..reach``."""
    _, c_l, a_l, c_r, a_r, _ = (float(v) for v in vector)
    k = np.arange(1, reach + 1, dtype=np.float64)
    left = (c_l * k + 1.0) ** (-a_l)
    right = (c_r * k + 1.0) ** (-a_r)
    return np.concatenate([left[::-1], [1.0], right])


def render_taps(vector: FloatArray, w: int) -> FloatArray:
    """Taps of one PSF vector for offsets ``-w..w`` (no validation)."""
    decay = _decay(vector, 2 * w)
    smooth = _gaussian_taps(float(vector[SIGMA]), w)
    out: FloatArray = float(vector[AMPLITUDE]) * np.convolve(
        decay, smooth, mode="valid"
    )
    return out


def render_psf(
    p: Sequence[float] | FloatArray, w: int, box: PsfBox | None = None
) -> PsfKernel:
    """Render one PSF parameter vector into discrete taps.

    Args:
        p: ``(amplitude, c_l, alpha_l, c_r, alpha_r, sigma)``
        w: Half-width; taps cover offsets ``-w..w``
        box: Optional feasible box the vector must lie in

    Returns:
        PsfKernel with ``2w+1`` taps

    Raises:
        DomainError: If ``p`` is not a valid vector or lies outside ``box``
        RangeValidationError: If ``w < 1``
    """
    vector = np.asarray(p, dtype=np.float64)
    check_domain(vector)
    if box is not None and not box.contains(vector):
        raise DomainError("PSF parameters lie outside the box")
    if w < 1:
        raise RangeValidationError(
            f"PSF half-width must be >= 1, got {w}",
            field="w",
            value=w,
            min_value=1,
        )
    return PsfKernel(
        taps=render_taps(vector, w), params=tuple(float(v) for v in vector)
    )


def render_kernels(params: PsfParams, w: int) -> list[PsfKernel]:
    """One kernel per line."""
    return [render_psf(row, w) for row in params.values]


def _side_reach(c: float, alpha: float) -> int:
    return math.ceil((config.PSF_TAIL_RATIO ** (-1.0 / alpha) - 1.0) / c)


def default_half_width(p: Sequence[float] | FloatArray, n: int) -> int:
    """Smallest half-width whose tails fall below ``1e-3`` of the peak.

    A ``3 sigma`` margin covers the Gaussian smoothing. Capped at ``n // 2``.
    """
    vec = np.asarray(p, dtype=np.float64)
    reach = max(
        _side_reach(float(vec[1]), float(vec[2])),
        _side_reach(float(vec[3]), float(vec[4])),
    )
    reach += math.ceil(3.0 * float(vec[SIGMA]))
    return int(min(max(reach, 1), max(n // 2, 1)))


def box_half_width(box: PsfBox, n: int) -> int:
    """Half-width wide enough for every vector in ``box``."""
    slowest = np.array(box.lower)
    slowest[SIGMA] = box.upper[SIGMA]
    return default_half_width(slowest, n)


# =============================================================================
# Column convolution and its adjoint
# =============================================================================


def convolve_columns(r: FloatArray, taps: FloatArray) -> FloatArray:
    """Convolve column ``i`` of ``r`` with ``taps[i]`` ("same", zero padded)."""
    n, m = r.shape
    w = taps.shape[1] // 2
    out = np.empty((n, m))
    for i in range(m):
        out[:, i] = np.convolve(r[:, i], taps[i], mode="full")[w : w + n]
    return out


def correlate_columns(s: FloatArray, taps: FloatArray) -> FloatArray:
    """Adjoint of :func:`convolve_columns`."""
    n, m = s.shape
    w = taps.shape[1] // 2
    out = np.empty((n, m))
    for i in range(m):
        padded = np.pad(s[:, i], w)
        out[:, i] = np.correlate(padded, taps[i], mode="valid")
    return out


def _stack(kernels: Sequence[PsfKernel], m: int) -> FloatArray:
    if len(kernels) != m:
        raise ShapeMismatchError(
            f"expected {m} PSF kernels (one per angle), got {len(kernels)}",
            expected=(m,),
            actual=(len(kernels),),
        )
    widths = {k.half_width for k in kernels}
    if len(widths) != 1:
        raise ShapeMismatchError("all PSF kernels must share one half-width")
    return np.stack([k.taps for k in kernels])


def apply_psf(r: LineScanSet, kernels: Sequence[PsfKernel]) -> LineScanSet:
    """Blur every line with its PSF kernel."""
    taps = _stack(kernels, r.m)
    return LineScanSet(
        data=convolve_columns(r.data, taps), geometry=r.geometry
    )


def apply_psf_adjoint(
    r: LineScanSet, kernels: Sequence[PsfKernel]
) -> LineScanSet:
    """Correlate every line with its kernel (adjoint of :func:`apply_psf`)."""
    taps = _stack(kernels, r.m)
    return LineScanSet(
        data=correlate_columns(r.data, taps), geometry=r.geometry
    )


# =============================================================================
# Parameter sensitivities
# =============================================================================


class TapSensitivity(LineprobeBaseModel):
    """Finite-difference Jacobian of the taps with respect to one PSF vector.

    ``jacobian[c]`` is d(taps)/d(p_c). ``one_sided[c]`` is set when the box
    (or the domain boundary ``sigma >= 0``) forced a one-sided difference,
    and ``frozen[c]`` when the box pins the coordinate so no difference was
    taken.
    """

    jacobian: FloatArray
    one_sided: tuple[bool, ...]
    frozen: tuple[bool, ...]

    @field_validator("jacobian", mode="before")
    @classmethod
    def _validate_jacobian(cls, v: object) -> FloatArray:
        return readonly_array(v, 2, "TapSensitivity.jacobian")

    def contract(self, direction: FloatArray) -> FloatArray:
        """Gradient of ``<taps(p), direction>`` with respect to ``p``."""
        out: FloatArray = self.jacobian @ direction
        return out


def psf_param_gradient(
    p: Sequence[float] | FloatArray,
    w: int,
    box: PsfBox | None = None,
) -> TapSensitivity:
    """Central finite-difference sensitivities of the taps.

    The step for coordinate ``c`` is ``1e-6 * max(1, |p_c|)``. Near a face of
    the box (or at ``sigma = 0``) the difference becomes one-sided and is
    flagged in the result.
    """
    vector = np.asarray(p, dtype=np.float64)
    check_domain(vector)
    lower = np.zeros(N_COORDINATES) if box is None else box.lower
    upper = np.full(N_COORDINATES, np.inf) if box is None else box.upper
    jac = np.zeros((N_COORDINATES, 2 * w + 1))
    one_sided = [False] * N_COORDINATES
    frozen = [False] * N_COORDINATES

    for c in range(N_COORDINATES):
        h = config.FD_STEP * max(1.0, abs(float(vector[c])))
        can_down = vector[c] - h >= lower[c] and (c == SIGMA or vector[c] > h)
        can_up = vector[c] + h <= upper[c]
        if not (can_down or can_up):
            frozen[c] = True
            continue
        hi = vector.copy()
        lo = vector.copy()
        if can_up:
            hi[c] += h
        if can_down:
            lo[c] -= h
        span = float(hi[c] - lo[c])
        jac[c] = (render_taps(hi, w) - render_taps(lo, w)) / span
        if not (can_up and can_down):
            one_sided[c] = True
            _logger.debug(f"One-sided difference for PSF coordinate {c}")

    return TapSensitivity(
        jacobian=jac, one_sided=tuple(one_sided), frozen=tuple(frozen)
    )
