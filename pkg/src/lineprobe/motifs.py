"""Motif rendering and motif/sparse-map convolution.

A sample image is the superposition of one motif D per spike of the sparse
map X, i.e. the 2-D convolution ``Y = D * X`` cropped to the grid. The
array-level helpers are what the solver calls in its inner loop; the model
level wrappers validate shapes and return :class:`Image` values.
"""

import functools
import logging

import numpy as np
from scipy.signal import fftconvolve

from ._base import FloatArray
from .enums import MotifKind, MotifNormalization
from .exceptions import RangeValidationError
from .models import Image, Motif, SparseMap

__author__ = "Emmanuel Levijarvi"
__copyright__ = "Emmanuel Levijarvi"
__license__ = "MIT"

_logger = logging.getLogger(__name__)

_SUPERSAMPLE = 4


def _disc_indicator(offsets: FloatArray, radius: float) -> FloatArray:
    d2 = offsets[:, None] ** 2 + offsets[None, :] ** 2
    return (d2 <= radius * radius).astype(np.float64)


def _supersampled_disc(offsets: FloatArray, radius: float) -> FloatArray:
    sub = (np.arange(_SUPERSAMPLE) + 0.5) / _SUPERSAMPLE - 0.5
    acc = np.zeros((offsets.size, offsets.size))
    for dy in sub:
        for dx in sub:
            y = offsets[:, None] + dy
            x = offsets[None, :] + dx
            acc += (x * x + y * y <= radius * radius).astype(np.float64)
    return acc / _SUPERSAMPLE**2


def render_motif(motif: Motif, n: int) -> Image:
    """Render ``motif`` centered on an n×n grid.

    The center is ``((n-1)/2, (n-1)/2)`` so the rendering is exactly
    symmetric under 90° rotations and flips.

    Args:
        motif: Motif description
        n: Grid side

    Returns:
        Normalized motif image

    Raises:
        RangeValidationError: If the motif diameter is not smaller than ``n``
    """
    return Image(data=_render(motif, n))


def _render(motif: Motif, n: int) -> FloatArray:
    if 2.0 * motif.radius >= n:
        raise RangeValidationError(
            "motif exceeds grid",
            field="radius",
            value=motif.radius,
            min_value=0,
            max_value=n / 2.0,
        )
    offsets = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    r = motif.radius
    if motif.kind is MotifKind.GAUSSIAN:
        d2 = offsets[:, None] ** 2 + offsets[None, :] ** 2
        img = np.exp(-d2 / (2.0 * r * r))
    elif motif.supersample:
        img = _supersampled_disc(offsets, r)
    else:
        img = _disc_indicator(offsets, r)

    if motif.normalization is MotifNormalization.UNIT_MASS:
        total = img.sum()
    else:
        total = float(np.linalg.norm(img.sum(axis=1)))
    if total <= 0:
        raise RangeValidationError(
            "motif covers no pixel centers",
            field="radius",
            value=r,
        )
    return img / total


@functools.lru_cache(maxsize=32)
def motif_kernel(motif: Motif, n: int) -> FloatArray:
    """Odd-sided convolution kernel for an n×n grid (read-only, cached)."""
    side = n if n % 2 == 1 else n + 1
    kernel = _render(motif, side)
    kernel.setflags(write=False)
    return kernel


def convolve_array(x: FloatArray, motif: Motif) -> FloatArray:
    """``D * x`` with zero padding, cropped to the shape of ``x``."""
    out: FloatArray = fftconvolve(x, motif_kernel(motif, x.shape[0]), "same")
    return out


def correlate_array(y: FloatArray, motif: Motif) -> FloatArray:
    """Adjoint of :func:`convolve_array`: correlation with the motif."""
    kernel = motif_kernel(motif, y.shape[0])[::-1, ::-1]
    out: FloatArray = fftconvolve(y, kernel, "same")
    return out


def convolve_motif(x: SparseMap, motif: Motif) -> Image:
    """Sample image ``Y = D * X`` ("same" 2-D linear convolution)."""
    return Image(data=convolve_array(x.data, motif))


def convolve_motif_adjoint(y: Image, motif: Motif) -> Image:
    """Correlate an image with the motif (adjoint of :func:`convolve_motif`)."""
    return Image(data=correlate_array(y.data, motif))
