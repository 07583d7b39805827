"""CLI package for lineprobe-python."""

from .__main__ import main, run
from .handlers import (
    RECONSTRUCTION_OUTPUTS,
    handle_analyze_coherence,
    handle_analyze_spectrum,
    handle_bench_pt,
    handle_bench_reweight,
    handle_certify,
    handle_generate,
    handle_reconstruct,
    handle_scan,
)
from .rich_output import OutputFormatter, get_formatter

__all__ = [
    # Main entry point
    "main",
    "run",
    # Command handlers
    "RECONSTRUCTION_OUTPUTS",
    "handle_analyze_coherence",
    "handle_analyze_spectrum",
    "handle_bench_pt",
    "handle_bench_reweight",
    "handle_certify",
    "handle_generate",
    "handle_reconstruct",
    "handle_scan",
    # Output
    "OutputFormatter",
    "get_formatter",
]
