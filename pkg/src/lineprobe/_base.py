"""Shared Pydantic base model for all lineprobe value types.

Grids, PSF parameters and the solver/campaign configuration all derive from
:class:`LineprobeBaseModel`: frozen, strict about unknown fields, able to
hold numpy arrays, and dumping enum members by name.
"""

from enum import Enum
from typing import Any

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict

FloatArray = npt.NDArray[np.float64]


def readonly_array(value: Any, ndim: int, name: str) -> FloatArray:
    """Coerce ``value`` to a finite float64 array and lock it against writes.

    Args:
        value: Array-like input
        ndim: Required number of dimensions
        name: Field name used in error messages

    Returns:
        A read-only, C-contiguous float64 copy of ``value``

    Raises:
        ValueError: If the dimensionality is wrong or entries are not finite
    """
    arr = np.array(value, dtype=np.float64, copy=True, order="C")
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def enum_names(data: Any) -> Any:
    """Replace enum members in a dumped structure with their names."""
    if isinstance(data, Enum):
        return data.name
    if isinstance(data, dict):
        return {key: enum_names(value) for key, value in data.items()}
    if isinstance(data, list | tuple):
        return type(data)(enum_names(item) for item in data)
    return data


class LineprobeBaseModel(BaseModel):
    """Immutable value type with validated numpy fields."""

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        arbitrary_types_allowed=True,
    )

    def model_dump(self, **kwargs: Any) -> dict[str, Any]:
        """Python-mode dump with enum members written by name."""
        kwargs.setdefault("mode", "python")
        dumped: dict[str, Any] = enum_names(super().model_dump(**kwargs))
        return dumped
