"""Value types shared by every stage of the line-probe pipeline.

Images and sparse maps, scan geometries and line measurements, motif and
PSF descriptions, and the key=value configuration models.
"""

from .._base import LineprobeBaseModel
from .config import CampaignConfig, SampleSpec, SolverConfig
from .grids import Image, SparseMap
from .motif import Motif
from .psf import (
    AMPLITUDE,
    N_COORDINATES,
    PSF_COORDINATES,
    SIGMA,
    PsfBox,
    PsfKernel,
    PsfParams,
    check_domain,
)
from .scans import LineScanSet, ScanGeometry

__all__ = [
    "LineprobeBaseModel",
    # Grids
    "Image",
    "SparseMap",
    # Scans
    "LineScanSet",
    "ScanGeometry",
    # Motif
    "Motif",
    # PSF
    "AMPLITUDE",
    "N_COORDINATES",
    "PSF_COORDINATES",
    "SIGMA",
    "PsfBox",
    "PsfKernel",
    "PsfParams",
    "check_domain",
    # Configuration
    "CampaignConfig",
    "SampleSpec",
    "SolverConfig",
]
