"""Enumerations for the line-probe measurement and reconstruction pipeline.

String-valued so that key=value configuration files and the CLI can refer
to members by their lowercase value (``placement=random``) while dumps from
the models carry member names.
"""

from enum import StrEnum

# ============================================================================
# Sample Enumerations
# ============================================================================


class MotifKind(StrEnum):
    """Shape of the reactive species superposed at every spike."""

    DISC = "disc"
    GAUSSIAN = "gauss"


class MotifNormalization(StrEnum):
    """How a rendered motif is scaled.

    ``UNIT_LINE_PROJECTION`` makes the 0° line projection of the motif have
    unit Euclidean norm; ``UNIT_MASS`` makes the pixel values sum to one.
    """

    UNIT_LINE_PROJECTION = "unit-line-projection"
    UNIT_MASS = "unit-mass"


class MagnitudeMode(StrEnum):
    """Spike weights: all ones, or uniform random in ``[lo, hi]``."""

    EQUAL = "equal"
    UNIFORM = "uniform"


class PlacementMode(StrEnum):
    """How spike centers are chosen."""

    RANDOM = "random"
    HEXAGONAL = "hexagonal"
    EXPLICIT = "explicit"


class AngleMode(StrEnum):
    """How scan angles are chosen when only a count is given."""

    RANDOM = "random"
    EQUISPACED = "equispaced"


# ============================================================================
# Reconstruction Enumerations
# ============================================================================


class PsfCoupling(StrEnum):
    """How per-line PSF parameter vectors are tied together.

    ``SHARED_SHAPE`` estimates one shape (c_l, alpha_l, c_r, alpha_r, sigma)
    for all lines plus a per-line amplitude. ``INDEPENDENT`` estimates a full
    vector per line. ``FROZEN`` keeps the initial parameters (no calibration).
    """

    SHARED_SHAPE = "shared"
    INDEPENDENT = "independent"
    FROZEN = "frozen"


# ============================================================================
# Analysis and Campaign Enumerations
# ============================================================================


class GramMode(StrEnum):
    """Origin of a Gram matrix."""

    EMPIRICAL = "empirical"
    EXPECTED_APPROX = "expected-approx"


class ExperimentMode(StrEnum):
    """Phase-transition scaling: constant grid or constant motif density."""

    FIXED_AREA = "fixed-area"
    FIXED_DENSITY = "fixed-density"
