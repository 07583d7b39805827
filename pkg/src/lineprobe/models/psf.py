"""Point-spread-function parameter vectors, feasible boxes and kernels."""

from collections.abc import Sequence
from typing import Any, Self

import numpy as np
from pydantic import field_validator, model_validator

from .._base import FloatArray, LineprobeBaseModel, readonly_array
from ..exceptions import DomainError

#: Coordinate order of one per-line parameter vector.
PSF_COORDINATES: tuple[str, ...] = (
    "amplitude",
    "c_left",
    "alpha_left",
    "c_right",
    "alpha_right",
    "sigma",
)
AMPLITUDE = 0
SIGMA = 5
N_COORDINATES = len(PSF_COORDINATES)

# Effectively a discrete delta: the first off-center tap is (1e6 + 1)**-8.
_DELTA_VECTOR = (1.0, 1e6, 8.0, 1e6, 8.0, 0.0)


def check_domain(vector: FloatArray) -> None:
    """Raise :class:`DomainError` unless ``vector`` is a valid PSF vector."""
    if vector.shape != (N_COORDINATES,):
        raise DomainError(
            f"PSF vector must have {N_COORDINATES} coordinates, "
            f"got shape {vector.shape}"
        )
    for idx, name in enumerate(PSF_COORDINATES):
        value = float(vector[idx])
        if not np.isfinite(value):
            raise DomainError(f"{name} is not finite", coordinate=name)
        if idx == SIGMA:
            if value < 0:
                raise DomainError(
                    f"{name} must be >= 0, got {value}",
                    coordinate=name,
                    value=value,
                )
        elif value <= 0:
            raise DomainError(
                f"{name} must be > 0, got {value}",
                coordinate=name,
                value=value,
            )


class PsfBox(LineprobeBaseModel):
    """Coordinatewise bounds defining the convex feasible set of PSF vectors.

    The same box applies to every line.
    """

    lower: FloatArray
    upper: FloatArray

    @field_validator("lower", "upper", mode="before")
    @classmethod
    def _validate_bounds(cls, v: Any) -> FloatArray:
        arr = readonly_array(v, 1, "PsfBox bound")
        if arr.shape != (N_COORDINATES,):
            raise ValueError(
                f"PSF bounds need {N_COORDINATES} coordinates, "
                f"got {arr.shape[0]}"
            )
        return arr

    @model_validator(mode="after")
    def _validate_order(self) -> Self:
        if np.any(self.lower > self.upper):
            raise ValueError("PSF box lower bound exceeds upper bound")
        check_domain(self.lower)
        return self

    @classmethod
    def point(cls, vector: Sequence[float] | FloatArray) -> Self:
        """Collapsed box containing only ``vector``."""
        return cls(lower=vector, upper=vector)

    def contains(self, vector: FloatArray) -> bool:
        return bool(
            np.all(vector >= self.lower) and np.all(vector <= self.upper)
        )

    def project(self, values: FloatArray) -> FloatArray:
        """Euclidean projection of a vector or an (m, 6) stack onto the box."""
        return np.clip(values, self.lower, self.upper)

    @property
    def collapsed(self) -> bool:
        return bool(np.all(self.lower == self.upper))


class PsfParams(LineprobeBaseModel):
    """Per-line PSF vectors ``p_i`` (rows) and their shared feasible box."""

    values: FloatArray
    box: PsfBox

    @field_validator("values", mode="before")
    @classmethod
    def _validate_values(cls, v: Any) -> FloatArray:
        arr = readonly_array(v, 2, "PsfParams.values")
        if arr.shape[1] != N_COORDINATES:
            raise ValueError(
                f"PSF rows need {N_COORDINATES} coordinates, "
                f"got {arr.shape[1]}"
            )
        if arr.shape[0] < 1:
            raise ValueError("at least one PSF row is required")
        return arr

    @model_validator(mode="after")
    def _validate_inside_box(self) -> Self:
        for i, row in enumerate(self.values):
            check_domain(row)
            if not self.box.contains(row):
                raise DomainError(
                    f"PSF parameters of line {i} lie outside the box",
                    details={"line": i},
                )
        return self

    @property
    def m(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def uniform(
        cls,
        vector: Sequence[float] | FloatArray,
        m: int,
        box: PsfBox | None = None,
    ) -> Self:
        """Same vector on every line; the box collapses to it if omitted."""
        vec = np.asarray(vector, dtype=np.float64)
        return cls(
            values=np.tile(vec, (m, 1)),
            box=box if box is not None else PsfBox.point(vec),
        )

    @classmethod
    def delta(cls, m: int) -> Self:
        """Known identity PSF on ``m`` lines (calibration impossible)."""
        return cls.uniform(_DELTA_VECTOR, m)

    def with_amplitudes(self, amplitudes: Sequence[float] | FloatArray) -> Self:
        values = np.array(self.values)
        values[:, AMPLITUDE] = amplitudes
        return type(self)(values=values, box=self.box)


class PsfKernel(LineprobeBaseModel):
    """Discrete PSF taps for offsets ``-w..w`` along the sweep."""

    taps: FloatArray
    params: tuple[float, ...]

    @field_validator("taps", mode="before")
    @classmethod
    def _validate_taps(cls, v: Any) -> FloatArray:
        arr = readonly_array(v, 1, "PsfKernel.taps")
        if arr.shape[0] % 2 != 1 or arr.shape[0] < 3:
            raise ValueError("PSF taps must have odd length 2w+1 with w >= 1")
        return arr

    @property
    def half_width(self) -> int:
        return int(self.taps.shape[0] // 2)


