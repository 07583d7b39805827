"""Dense image grids and sparse activation maps."""

from collections.abc import Sequence
from typing import Any, Self

import numpy as np
from pydantic import Field, field_validator

from .._base import FloatArray, LineprobeBaseModel, readonly_array


def _square(arr: FloatArray, name: str) -> FloatArray:
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValueError(f"{name} side must be at least 2, got {arr.shape[0]}")
    return arr


class Image(LineprobeBaseModel):
    """Dense n×n real grid: a sample image Y or a reconstruction D*X.

    ``pixel_size`` is metadata only (length units per pixel); intensities
    are dimensionless.
    """

    data: FloatArray
    pixel_size: float = Field(default=1.0, gt=0)

    @field_validator("data", mode="before")
    @classmethod
    def _validate_data(cls, v: Any) -> FloatArray:
        return _square(readonly_array(v, 2, "Image.data"), "Image.data")

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @classmethod
    def zeros(cls, n: int) -> Self:
        return cls(data=np.zeros((n, n)))

    def total_mass(self) -> float:
        return float(self.data.sum())


class SparseMap(LineprobeBaseModel):
    """Nonnegative n×n activation grid X of discretized Dirac weights."""

    data: FloatArray

    @field_validator("data", mode="before")
    @classmethod
    def _validate_data(cls, v: Any) -> FloatArray:
        arr = _square(readonly_array(v, 2, "SparseMap.data"), "SparseMap.data")
        if np.any(arr < 0):
            raise ValueError("SparseMap entries must be nonnegative")
        return arr

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @classmethod
    def zeros(cls, n: int) -> Self:
        return cls(data=np.zeros((n, n)))

    @classmethod
    def from_centers(
        cls,
        n: int,
        centers: Sequence[tuple[int, int]],
        weights: Sequence[float] | None = None,
    ) -> Self:
        """Place one spike per ``(row, col)`` center.

        Coincident centers accumulate their weights.
        """
        grid = np.zeros((n, n))
        w = np.ones(len(centers)) if weights is None else weights
        for (row, col), weight in zip(centers, w, strict=True):
            grid[row, col] += weight
        return cls(data=grid)

    def support(self) -> list[tuple[int, int]]:
        """Indices with strictly positive weight, in row-major order."""
        rows, cols = np.nonzero(self.data > 0)
        return [(int(r), int(c)) for r, c in zip(rows, cols, strict=True)]

    @property
    def k(self) -> int:
        return int(np.count_nonzero(self.data > 0))
