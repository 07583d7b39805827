"""Scan geometry and line measurement sets."""

import math
from typing import Any

import numpy as np
from pydantic import Field, field_validator, model_validator

from .._base import FloatArray, LineprobeBaseModel, readonly_array


class ScanGeometry(LineprobeBaseModel):
    """Ordered set of sweep angles plus grid and sampling metadata.

    Angles are stored in degrees in ``[-180, 180)``; the operators work with
    :attr:`radians`. ``normalize`` applies the ``1/sqrt(m)`` factor that
    makes the stacked operator an average over lines. ``stride`` is the
    sampling period along each sweep (1 keeps every sample).
    """

    angles: tuple[float, ...]
    n: int = Field(ge=2)
    normalize: bool = True
    stride: int = Field(default=1, ge=1)

    @field_validator("angles")
    @classmethod
    def _validate_angles(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if len(v) < 1:
            raise ValueError("at least one angle is required")
        for angle in v:
            if not math.isfinite(angle) or not -180.0 <= angle < 180.0:
                raise ValueError(f"angle {angle} outside [-180, 180)")
        if len(set(v)) != len(v):
            raise ValueError("angles must be pairwise distinct")
        return v

    @property
    def m(self) -> int:
        return len(self.angles)

    @property
    def radians(self) -> FloatArray:
        return np.deg2rad(np.asarray(self.angles, dtype=np.float64))

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.m) if self.normalize else 1.0

    @property
    def samples(self) -> int:
        """Number of recorded samples per sweep after stride sampling."""
        return -(-self.n // self.stride)


class LineScanSet(LineprobeBaseModel):
    """Line measurements: one column per angle, one row per sweep sample."""

    data: FloatArray
    geometry: ScanGeometry

    @field_validator("data", mode="before")
    @classmethod
    def _validate_data(cls, v: Any) -> FloatArray:
        return readonly_array(v, 2, "LineScanSet.data")

    @model_validator(mode="after")
    def _validate_shape(self) -> "LineScanSet":
        rows, cols = self.data.shape
        if cols != self.geometry.m:
            raise ValueError(
                f"expected {self.geometry.m} columns (one per angle), "
                f"got {cols}"
            )
        if rows != self.geometry.samples:
            raise ValueError(
                f"expected {self.geometry.samples} samples per line, "
                f"got {rows}"
            )
        return self

    @property
    def m(self) -> int:
        return self.geometry.m

    def column(self, i: int) -> FloatArray:
        return self.data[:, i]
