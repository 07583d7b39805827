"""
Errors raised by lineprobe.

Every error carries a message plus optional machine-readable metadata; the
CLI maps any of them to exit code 2.

Exception Hierarchy::

    LineprobeError (base)
    ├── ValidationError
    │   ├── ParameterValidationError
    │   ├── RangeValidationError
    │   └── ShapeMismatchError
    ├── FormatError
    │   └── ParseError
    ├── DomainError
    ├── InfeasibleSampleError
    └── SolverError
        └── LipschitzBlowupError

Usage
-----

.. code-block:: python

    try:
        image = read_image("sample.csv")
    except ParseError as e:
        print(f"{e.path}, line {e.line}: {e.message}")
    except FormatError:
        # handle other file format problems
        ...

    try:
        result = reconstruct(scans, motif, psf_init, settings)
    except LipschitzBlowupError as e:
        print(f"{e.block} step diverged after {e.halvings} halvings")
"""

from typing import Any

__author__ = "Emmanuel Levijarvi"
__copyright__ = "Emmanuel Levijarvi"
__license__ = "MIT"


class LineprobeError(Exception):
    """Root of the lineprobe error tree.

    Attributes:
        message: Human-readable error message
        error_code: Machine-readable error code (optional)
        details: Additional context as a dictionary (optional)
        retriable: Whether the operation can be retried (optional)
    """

    def __init__(
        self,
        message: str,
        *,
        error_code: str | None = None,
        details: dict[str, Any | None] | None = None,
        retriable: bool = False,
    ):
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        self.retriable = retriable
        super().__init__(self.message)

    def __str__(self) -> str:
        parts = [self.message]
        if self.error_code:
            parts.append(f"[{self.error_code}]")
        if self.retriable:
            parts.append("(retriable)")
        return " ".join(parts)

    def to_dict(self) -> dict[str, Any]:
        """Error type, message, code, details and retriability."""
        return {
            "error_type": self.__class__.__name__,
            "message": self.message,
            "error_code": self.error_code,
            "details": self.details,
            "retriable": self.retriable,
        }


# =============================================================================
# Validation Exceptions
# =============================================================================


class ValidationError(LineprobeError):
    """Inputs or data failed a validation check."""


class ParameterValidationError(ValidationError):
    """Invalid parameter value provided.

    Raised when a parameter value is invalid for reasons other than
    being out of range (e.g., duplicate angles, malformed motif spec).

    Attributes:
        parameter: Name of the invalid parameter
        value: The invalid value provided
    """

    def __init__(
        self,
        message: str,
        parameter: str | None = None,
        value: Any = None,
        **kwargs: Any,
    ):
        super().__init__(message, **kwargs)
        self.parameter = parameter
        self.value = value


class RangeValidationError(ValidationError):
    """A numeric value lies outside its valid range.

    Attributes:
        field: Name of the field
        value: The invalid value provided
        min_value: Minimum acceptable value
        max_value: Maximum acceptable value

    Example::

        try:
            render_motif(Motif(kind=MotifKind.DISC, radius=40), 64)
        except RangeValidationError as e:
            print(f"Invalid {e.field}: must be {e.min_value}-{e.max_value}")
    """

    def __init__(
        self,
        message: str,
        field: str | None = None,
        value: Any = None,
        min_value: Any = None,
        max_value: Any = None,
        **kwargs: Any,
    ):
        super().__init__(message, **kwargs)
        self.field = field
        self.value = value
        self.min_value = min_value
        self.max_value = max_value


class ShapeMismatchError(ValidationError):
    """Two arrays that must agree in shape do not.

    Attributes:
        expected: Expected shape
        actual: Shape that was received
    """

    def __init__(
        self,
        message: str,
        expected: tuple[int, ...] | None = None,
        actual: tuple[int, ...] | None = None,
        **kwargs: Any,
    ):
        super().__init__(message, **kwargs)
        self.expected = expected
        self.actual = actual


# =============================================================================
# File Format Exceptions
# =============================================================================


class FormatError(LineprobeError):
    """Base exception for malformed input files."""

    pass


class ParseError(FormatError):
    """A text or binary file could not be parsed.

    Attributes:
        path: File being read, if known
        line: 1-based line number of the offending row, if known
    """

    def __init__(
        self,
        message: str,
        path: str | None = None,
        line: int | None = None,
        **kwargs: Any,
    ):
        super().__init__(message, **kwargs)
        self.path = path
        self.line = line


# =============================================================================
# Model Domain Exceptions
# =============================================================================


class DomainError(LineprobeError):
    """PSF parameters fall outside their feasible box.

    Attributes:
        coordinate: Name of the offending coordinate
        value: The value found
    """

    def __init__(
        self,
        message: str,
        coordinate: str | None = None,
        value: float | None = None,
        **kwargs: Any,
    ):
        super().__init__(message, **kwargs)
        self.coordinate = coordinate
        self.value = value


class InfeasibleSampleError(LineprobeError):
    """The rejection sampler could not place the requested motifs.

    Attributes:
        draws: Number of candidate draws made before giving up
    """

    def __init__(self, message: str, draws: int = 0, **kwargs: Any) -> None:
        super().__init__(message, **kwargs)
        self.draws = draws


# =============================================================================
# Solver Exceptions
# =============================================================================


class SolverError(LineprobeError):
    """Base exception for reconstruction failures."""

    pass


class LipschitzBlowupError(SolverError):
    """Backtracking failed to find an acceptable step size.

    Attributes:
        block: Which block was being updated ("X" or "p")
        halvings: Number of step halvings attempted
    """

    def __init__(self, block: str, halvings: int) -> None:
        self.block = block
        self.halvings = halvings
        super().__init__(
            f"Lipschitz blowup: {block} step not accepted after "
            f"{halvings} halvings",
            error_code="LIPSCHITZ_BLOWUP",
            details={"block": block, "halvings": halvings},
        )
