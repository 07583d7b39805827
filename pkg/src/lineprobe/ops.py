"""Discrete line projection and back projection via three-shear FFT rotation.

A clockwise rotation by an angle in ``[-45°, 45°)`` is the product of three
shears, ``Sy(tan(φ/2)) Sx(-sin φ) Sy(tan(φ/2))``. Each shear shifts every
row (or column) by an amount proportional to its signed distance from the
grid center and is applied as a phase multiply on the real FFT of that
row/column. Angles outside the residual range are reduced by exact quarter
turns (``np.rot90``) before shearing.

Shears are circular, so the image is zero-padded to an FFT-friendly side of
at least ``ceil(sqrt(2) * n)``. The Nyquist bin of an even-length transform
is left unshifted; every shear is then a real orthogonal map whose inverse
and adjoint is the shear with the negated coefficient, which makes the back
projection the exact adjoint of the projection.

The projection for one angle keeps the ``n`` sweep positions of the central
row window and integrates each line over the full padded width; the back
projection is its adjoint (replicate across the padded width, zero-pad the
row window, inverse shears, inverse quarter turns, crop).
"""

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft

from ._base import FloatArray
from .converters import wrap_angle
from .exceptions import ShapeMismatchError
from .models import Image, LineScanSet, ScanGeometry

__author__ = "Emmanuel Levijarvi"
__copyright__ = "Emmanuel Levijarvi"
__license__ = "MIT"

_logger = logging.getLogger(__name__)


@functools.lru_cache(maxsize=64)
def padded_size(n: int) -> int:
    """Smallest FFT-friendly side ``>= ceil(sqrt(2) * n)`` with the parity of n.

    Equal parity keeps the pad offset integral so the padded grid and the
    image share their center.
    """
    size = fft.next_fast_len(math.ceil(math.sqrt(2.0) * n), real=True)
    while (size - n) % 2:
        size = fft.next_fast_len(size + 1, real=True)
    return int(size)


@functools.lru_cache(maxsize=64)
def _shear_tables(size: int) -> tuple[FloatArray, FloatArray]:
    """Centered coordinates and rfft frequencies (Nyquist pinned to zero)."""
    coords = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    freqs = fft.rfftfreq(size)
    if size % 2 == 0:
        freqs[-1] = 0.0
    coords.setflags(write=False)
    freqs.setflags(write=False)
    return coords, freqs


def shear_rows(
    arr: FloatArray, s: float, workers: int | None = None
) -> FloatArray:
    """Shift row ``u`` by ``s * u`` along axis 1 (rightward for s*u > 0)."""
    if s == 0.0:
        return arr
    coords, freqs = _shear_tables(arr.shape[0])
    spectrum = fft.rfft(arr, axis=1, workers=workers)
    spectrum *= np.exp(-2j * np.pi * s * coords[:, None] * freqs[None, :])
    out: FloatArray = fft.irfft(
        spectrum, n=arr.shape[1], axis=1, workers=workers
    )
    return out


def shear_cols(
    arr: FloatArray, s: float, workers: int | None = None
) -> FloatArray:
    """Shift column ``v`` by ``s * v`` along axis 0."""
    if s == 0.0:
        return arr
    coords, freqs = _shear_tables(arr.shape[0])
    spectrum = fft.rfft(arr, axis=0, workers=workers)
    spectrum *= np.exp(-2j * np.pi * s * freqs[:, None] * coords[None, :])
    out: FloatArray = fft.irfft(
        spectrum, n=arr.shape[0], axis=0, workers=workers
    )
    return out


@dataclass(frozen=True)
class ShearPlan:
    """Precomputed decomposition of one clockwise rotation.

    Attributes:
        n: Image side
        n_padded: Padded side used for the circular shears
        angle: Requested angle in degrees, wrapped to [-180, 180)
        quarter_turns: Number of exact clockwise quarter turns applied first
        residual: Remaining angle in degrees, in [-45, 45)
        shear_y: Coefficient of both column shears, ``tan(residual/2)``
        shear_x: Coefficient of the row shear, ``-sin(residual)``
    """

    n: int
    n_padded: int
    angle: float
    quarter_turns: int
    residual: float
    shear_y: float
    shear_x: float

    @classmethod
    def for_angle(cls, n: int, angle: float) -> "ShearPlan":
        wrapped = wrap_angle(angle)
        turns = math.floor((wrapped + 45.0) / 90.0)
        residual = wrapped - 90.0 * turns
        # division rounding can push the residual just outside [-45, 45)
        if residual >= 45.0:
            turns, residual = turns + 1, residual - 90.0
        elif residual < -45.0:
            turns, residual = turns - 1, residual + 90.0
        phi = math.radians(residual)
        return cls(
            n=n,
            n_padded=padded_size(n),
            angle=wrapped,
            quarter_turns=turns % 4,
            residual=residual,
            shear_y=math.tan(phi / 2.0) if residual else 0.0,
            shear_x=-math.sin(phi) if residual else 0.0,
        )

    @property
    def offset(self) -> int:
        return (self.n_padded - self.n) // 2

    def pad(self, arr: FloatArray) -> FloatArray:
        out = np.zeros((self.n_padded, self.n_padded))
        o = self.offset
        out[o : o + self.n, o : o + self.n] = arr
        return out

    def crop(self, arr: FloatArray) -> FloatArray:
        o = self.offset
        return arr[o : o + self.n, o : o + self.n]

    def rotate_padded(
        self, arr: FloatArray, workers: int | None = None
    ) -> FloatArray:
        """Rotate a padded array clockwise by :attr:`angle`."""
        out = np.rot90(arr, -self.quarter_turns)
        if self.residual:
            out = shear_cols(out, self.shear_y, workers)
            out = shear_rows(out, self.shear_x, workers)
            out = shear_cols(out, self.shear_y, workers)
        return np.ascontiguousarray(out)

    def unrotate_padded(
        self, arr: FloatArray, workers: int | None = None
    ) -> FloatArray:
        """Inverse (and adjoint) of :meth:`rotate_padded`."""
        out = arr
        if self.residual:
            out = shear_cols(out, -self.shear_y, workers)
            out = shear_rows(out, -self.shear_x, workers)
            out = shear_cols(out, -self.shear_y, workers)
        return np.ascontiguousarray(np.rot90(out, self.quarter_turns))

    def project(
        self, arr: FloatArray, workers: int | None = None
    ) -> FloatArray:
        """Unscaled line integrals of an n×n array, one per sweep position."""
        rotated = self.rotate_padded(self.pad(arr), workers)
        o = self.offset
        out: FloatArray = rotated[o : o + self.n, :].sum(axis=1)
        return out

    def back_project(
        self, line: FloatArray, workers: int | None = None
    ) -> FloatArray:
        """Adjoint of :meth:`project`: smear one line back onto the grid."""
        smeared = np.zeros((self.n_padded, self.n_padded))
        o = self.offset
        smeared[o : o + self.n, :] = line[:, None]
        return self.crop(self.unrotate_padded(smeared, workers))


@functools.lru_cache(maxsize=32)
def plans_for(n: int, angles: tuple[float, ...]) -> tuple[ShearPlan, ...]:
    """Shear plans for every angle of a geometry (cached)."""
    return tuple(ShearPlan.for_angle(n, angle) for angle in angles)


def rotate(img: Image, angle: float, workers: int | None = None) -> Image:
    """Rotate an image clockwise by ``angle`` degrees about its center.

    The result is cropped back to n×n; content leaving the grid is lost.
    """
    plan = ShearPlan.for_angle(img.n, angle)
    rotated = plan.rotate_padded(plan.pad(img.data), workers)
    return Image(data=plan.crop(rotated), pixel_size=img.pixel_size)


def _check_side(actual: int, geom: ScanGeometry) -> None:
    if actual != geom.n:
        raise ShapeMismatchError(
            f"image side {actual} does not match scan geometry n={geom.n}",
            expected=(geom.n, geom.n),
            actual=(actual, actual),
        )


def project_array(
    y: FloatArray, geom: ScanGeometry, workers: int | None = None
) -> FloatArray:
    """Full-resolution projections of an n×n array, shape (n, m)."""
    _check_side(y.shape[0], geom)
    plans = plans_for(geom.n, geom.angles)
    out = np.empty((geom.n, geom.m))
    for i, plan in enumerate(plans):
        out[:, i] = plan.project(y, workers)
    out *= geom.scale
    return out


def back_project_array(
    r: FloatArray, geom: ScanGeometry, workers: int | None = None
) -> FloatArray:
    """Adjoint of :func:`project_array` for an (n, m) array."""
    if r.shape != (geom.n, geom.m):
        raise ShapeMismatchError(
            f"line data shape {r.shape} does not match ({geom.n}, {geom.m})",
            expected=(geom.n, geom.m),
            actual=tuple(r.shape),
        )
    plans = plans_for(geom.n, geom.angles)
    out = np.zeros((geom.n, geom.n))
    for i, plan in enumerate(plans):
        out += plan.back_project(r[:, i], workers)
    out *= geom.scale
    return out


def downsample(r: FloatArray, stride: int) -> FloatArray:
    """Keep every ``stride``-th sweep sample starting at 0."""
    return r[::stride] if stride > 1 else r


def upsample(r: FloatArray, stride: int, n: int) -> FloatArray:
    """Zero-upsampling, the adjoint of :func:`downsample`."""
    if stride == 1:
        return r
    out = np.zeros((n, r.shape[1]))
    out[::stride] = r
    return out


def line_project(
    y: Image, geom: ScanGeometry, workers: int | None = None
) -> LineScanSet:
    """Line projections ``L_Θ[Y]`` at every angle of ``geom``.

    Column ``i`` is ``scale * (line integrals of Y rotated by θ_i)`` where
    ``scale = 1/sqrt(m)`` when ``geom.normalize`` is set. The result is at
    full sweep resolution (stride 1).
    """
    full = geom.model_copy(update={"stride": 1})
    data = project_array(y.data, full, workers)
    _logger.debug(f"Projected {geom.n}x{geom.n} image onto {geom.m} lines")
    return LineScanSet(data=data, geometry=full)


def back_project(r: LineScanSet, workers: int | None = None) -> Image:
    """Back projection ``L_Θ*[R]``, the exact adjoint of :func:`line_project`.

    Strided scan sets are zero-upsampled to full resolution first.
    """
    geom = r.geometry
    full = upsample(r.data, geom.stride, geom.n)
    return Image(data=back_project_array(full, geom, workers))
