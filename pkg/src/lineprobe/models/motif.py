"""Motif shape description."""

from pydantic import Field

from .._base import LineprobeBaseModel
from ..enums import MotifKind, MotifNormalization


class Motif(LineprobeBaseModel):
    """Reactive-species shape D superposed at every spike of a sparse map.

    Gaussian motifs use covariance ``radius**2 * I``; disc motifs are the
    indicator of a disc of ``radius`` pixels, tested at pixel centers, or
    averaged over a 4×4 subpixel grid when ``supersample`` is set.
    """

    kind: MotifKind = MotifKind.DISC
    radius: float = Field(gt=0)
    normalization: MotifNormalization = MotifNormalization.UNIT_LINE_PROJECTION
    supersample: bool = False

    def __str__(self) -> str:
        radius = f"{self.radius:g}"
        return f"{self.kind.value}:{radius}"
