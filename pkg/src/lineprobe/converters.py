"""Conversions between user-facing text and library values.

Angles are written in degrees by users and files, motifs as ``kind:radius``
(``disc:3``, ``gauss:2``), and lists as comma-separated values.
"""

import math

from .enums import MotifKind, MotifNormalization
from .exceptions import ParameterValidationError
from .models import Motif

__all__ = [
    "wrap_angle",
    "parse_angle_list",
    "parse_int_list",
    "parse_float_list",
    "parse_pair_list",
    "parse_motif",
    "MOTIF_ALIASES",
]

#: Accepted spellings of the motif kind in ``kind:radius`` specs.
MOTIF_ALIASES: dict[str, MotifKind] = {
    "disc": MotifKind.DISC,
    "disk": MotifKind.DISC,
    "gauss": MotifKind.GAUSSIAN,
    "gaussian": MotifKind.GAUSSIAN,
}


def wrap_angle(degrees: float) -> float:
    """Wrap an angle in degrees into ``[-180, 180)``.

    Example:
        >>> wrap_angle(190.0)
        -170.0
        >>> wrap_angle(-180.0)
        -180.0
    """
    wrapped = math.fmod(degrees + 180.0, 360.0)
    if wrapped < 0:
        wrapped += 360.0
    if wrapped >= 360.0:
        wrapped -= 360.0
    return wrapped - 180.0


def parse_angle_list(text: str) -> tuple[float, ...]:
    """Parse ``"0,30,60"`` into wrapped, distinct angles in degrees.

    Raises:
        ParameterValidationError: On empty entries, non-numbers or duplicates
            after wrapping
    """
    angles: list[float] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            raise ParameterValidationError(
                f"empty angle in list {text!r}", parameter="angles", value=text
            )
        try:
            value = float(token)
        except ValueError:
            raise ParameterValidationError(
                f"angle {token!r} is not a number",
                parameter="angles",
                value=token,
            )
        angles.append(wrap_angle(value))
    if len(set(angles)) != len(angles):
        raise ParameterValidationError(
            f"angles must be distinct after wrapping to [-180, 180): {text}",
            parameter="angles",
            value=text,
        )
    return tuple(angles)


def parse_int_list(text: str, parameter: str) -> tuple[int, ...]:
    """Parse ``"2,4,8"`` or an inclusive range ``"2..16"``."""
    try:
        if ".." in text:
            lo, hi = (int(part) for part in text.split("..", 1))
            return tuple(range(lo, hi + 1))
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ParameterValidationError(
            f"{parameter} must be integers, got {text!r}",
            parameter=parameter,
            value=text,
        )


def parse_float_list(text: str, parameter: str) -> tuple[float, ...]:
    """Parse ``"0.5,1,2"`` into floats."""
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ParameterValidationError(
            f"{parameter} must be numbers, got {text!r}",
            parameter=parameter,
            value=text,
        )
    if not values:
        raise ParameterValidationError(
            f"{parameter} must not be empty", parameter=parameter, value=text
        )
    return values


def parse_pair_list(
    text: str, parameter: str
) -> tuple[tuple[float, float], ...]:
    """Parse ``"2:4,2:8"`` into ``((2.0, 4.0), (2.0, 8.0))``."""
    pairs: list[tuple[float, float]] = []
    for token in text.split(","):
        first, sep, second = token.strip().partition(":")
        try:
            if not sep:
                raise ValueError(token)
            pairs.append((float(first), float(second)))
        except ValueError:
            raise ParameterValidationError(
                f"{parameter} entries must look like 2:4, got {token!r}",
                parameter=parameter,
                value=text,
            )
    return tuple(pairs)


def parse_motif(
    spec: str,
    normalization: MotifNormalization = (
        MotifNormalization.UNIT_LINE_PROJECTION
    ),
) -> Motif:
    """Parse a ``kind:radius`` motif spec.

    Example:
        >>> str(parse_motif("gauss:2"))
        'gauss:2'
    """
    kind_text, sep, radius_text = spec.partition(":")
    kind = MOTIF_ALIASES.get(kind_text.strip().lower())
    if not sep or kind is None:
        raise ParameterValidationError(
            f"motif must look like disc:3 or gauss:2, got {spec!r}",
            parameter="motif",
            value=spec,
        )
    try:
        radius = float(radius_text)
    except ValueError:
        raise ParameterValidationError(
            f"motif radius {radius_text!r} is not a number",
            parameter="motif",
            value=spec,
        )
    if not radius > 0:
        raise ParameterValidationError(
            f"motif radius must be positive, got {radius_text}",
            parameter="motif",
            value=spec,
        )
    return Motif(kind=kind, radius=radius, normalization=normalization)
