"""Line-probe microscopy simulation and sparse reconstruction.

This package simulates line-probe scans of sparse samples, inverts them with
a reweighted inertial solver that also calibrates the probe's point spread
function, and provides the recoverability diagnostics and experiment
campaigns that go with it.
"""

from importlib.metadata import (
    PackageNotFoundError,
    version,
)  # pragma: no cover

try:
    # Change here if project is renamed and does not equal the package name
    dist_name = "lineprobe-python"
    __version__ = version(dist_name)
except PackageNotFoundError:  # pragma: no cover
    __version__ = "unknown"
finally:
    del version, PackageNotFoundError

from lineprobe.analysis import (
    CertificateReport,
    GramMatrix,
    SpectrumReport,
    approx_gram,
    build_certificate,
    check_certificate,
    coherence_bounds,
    coherence_study,
    empirical_gram,
    expected_coherence,
    lattice_eigen_study,
    least_eigenvalue,
    lowpass_spectrum,
)
from lineprobe.converters import parse_angle_list, parse_motif, wrap_angle
from lineprobe.enums import (
    AngleMode,
    ExperimentMode,
    GramMode,
    MagnitudeMode,
    MotifKind,
    MotifNormalization,
    PlacementMode,
    PsfCoupling,
)
from lineprobe.exceptions import (
    DomainError,
    FormatError,
    InfeasibleSampleError,
    LineprobeError,
    LipschitzBlowupError,
    ParameterValidationError,
    ParseError,
    RangeValidationError,
    ShapeMismatchError,
    SolverError,
    ValidationError,
)
from lineprobe.harness import (
    PhaseTransitionResult,
    TrialOutcome,
    efficiency_table,
    normalized_image_error,
    phase_transition,
    reweight_comparison,
    support_match,
)
from lineprobe.models import (
    CampaignConfig,
    Image,
    LineScanSet,
    LineprobeBaseModel,
    Motif,
    PsfBox,
    PsfKernel,
    PsfParams,
    SampleSpec,
    ScanGeometry,
    SolverConfig,
    SparseMap,
)
from lineprobe.motifs import convolve_motif, convolve_motif_adjoint
from lineprobe.ops import back_project, line_project, rotate
from lineprobe.psf import apply_psf, apply_psf_adjoint, render_psf
from lineprobe.sim import generate_sample, simulate_scan
from lineprobe.solver import (
    ReweightState,
    SolverResult,
    grad_p,
    grad_x,
    reconstruct,
    smooth_objective,
)

__all__ = [
    "__version__",
    # Models
    "LineprobeBaseModel",
    "Image",
    "SparseMap",
    "ScanGeometry",
    "LineScanSet",
    "Motif",
    "PsfBox",
    "PsfKernel",
    "PsfParams",
    "SampleSpec",
    "SolverConfig",
    "CampaignConfig",
    # Enumerations
    "AngleMode",
    "ExperimentMode",
    "GramMode",
    "MagnitudeMode",
    "MotifKind",
    "MotifNormalization",
    "PlacementMode",
    "PsfCoupling",
    # Exceptions
    "LineprobeError",
    "ValidationError",
    "ParameterValidationError",
    "RangeValidationError",
    "ShapeMismatchError",
    "FormatError",
    "ParseError",
    "DomainError",
    "InfeasibleSampleError",
    "SolverError",
    "LipschitzBlowupError",
    # Conversions
    "parse_angle_list",
    "parse_motif",
    "wrap_angle",
    # Operators
    "rotate",
    "line_project",
    "back_project",
    "convolve_motif",
    "convolve_motif_adjoint",
    "render_psf",
    "apply_psf",
    "apply_psf_adjoint",
    # Simulation
    "generate_sample",
    "simulate_scan",
    # Analysis
    "GramMatrix",
    "SpectrumReport",
    "CertificateReport",
    "empirical_gram",
    "approx_gram",
    "least_eigenvalue",
    "coherence_bounds",
    "expected_coherence",
    "coherence_study",
    "lattice_eigen_study",
    "lowpass_spectrum",
    "build_certificate",
    "check_certificate",
    # Reconstruction
    "ReweightState",
    "SolverResult",
    "smooth_objective",
    "grad_x",
    "grad_p",
    "reconstruct",
    # Experiments
    "TrialOutcome",
    "PhaseTransitionResult",
    "support_match",
    "normalized_image_error",
    "phase_transition",
    "efficiency_table",
    "reweight_comparison",
]
