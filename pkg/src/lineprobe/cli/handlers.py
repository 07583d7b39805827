"""Command handlers for CLI operations.

Each handler receives validated library values, calls the library, writes
the verb's declared outputs and reports to the terminal. Nothing here
changes numerical behavior.
"""

import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from ..analysis import (
    check_certificate,
    coherence_study,
    lattice_eigen_study,
    lowpass_spectrum,
)
from ..encoding import (
    write_grid,
    write_image,
    write_key_values,
    write_psf_params,
    write_scanset,
    write_sparse_map,
    write_table,
)
from ..harness import (
    REWEIGHT_FIELDS,
    efficiency_table,
    phase_transition,
    reweight_comparison,
    write_pgm,
    write_phase_transition,
)
from ..models import (
    PSF_COORDINATES,
    CampaignConfig,
    LineScanSet,
    Motif,
    PsfParams,
    SampleSpec,
    ScanGeometry,
    SolverConfig,
    SparseMap,
)
from ..motifs import convolve_motif
from ..sim import generate_sample, simulate_scan
from ..solver import SolverResult, reconstruct
from .rich_output import get_formatter

_logger = logging.getLogger(__name__)
_formatter = get_formatter()

RECONSTRUCTION_OUTPUTS = (
    "Xhat.csv",
    "Yhat.csv",
    "locmap.csv",
    "phat.csv",
    "trace.csv",
    "result.txt",
)


def handle_generate(spec: SampleSpec, output: Path) -> SparseMap:
    """Draw a sample and write it as a sparse-map grid."""
    x = generate_sample(spec)
    write_sparse_map(output, x)
    _logger.info(f"Generated {x.k} spikes on a {x.n}x{x.n} grid")
    _formatter.print_success(f"Wrote {x.k}-spike sample to {output}")
    return x


def handle_scan(
    x: SparseMap,
    motif: Motif,
    geometry: ScanGeometry,
    psf: PsfParams,
    output: Path,
    *,
    noise_std: float = 0.0,
    seed: int = 0,
    half_width: int | None = None,
    workers: int | None = None,
) -> LineScanSet:
    """Simulate line scans of ``x`` and write them."""
    scans = simulate_scan(
        x,
        motif,
        geometry,
        psf,
        noise_std,
        seed=seed,
        half_width=half_width,
        workers=workers,
    )
    write_scanset(output, scans)
    _formatter.print_success(
        f"Wrote {scans.m} line scans ({scans.data.shape[0]} samples each) "
        f"to {output}"
    )
    return scans


def _trace_rows(result: SolverResult) -> list[dict[str, Any]]:
    rows: list[dict[str, Any]] = []
    for state in result.states:
        for it, value in enumerate(state.history, start=1):
            rows.append(
                {"round": state.round, "iteration": it, "objective": value}
            )
    return rows


def handle_reconstruct(
    scans: LineScanSet,
    motif: Motif,
    psf_init: PsfParams,
    settings: SolverConfig,
    output_dir: Path,
    workers: int | None = None,
) -> SolverResult:
    """Run the reweighted reconstruction and write its result files."""
    result = reconstruct(scans, motif, psf_init, settings, workers)
    output_dir.mkdir(parents=True, exist_ok=True)
    write_sparse_map(output_dir / "Xhat.csv", result.x)
    write_image(output_dir / "Yhat.csv", convolve_motif(result.x, motif))
    write_grid(output_dir / "locmap.csv", result.location_map)
    write_psf_params(output_dir / "phat.csv", result.psf)
    write_table(
        output_dir / "trace.csv",
        ("round", "iteration", "objective"),
        _trace_rows(result),
    )
    trace = result.trace
    metadata = {
        "motif": str(motif),
        "n": scans.geometry.n,
        "lines": scans.m,
        "stride": scans.geometry.stride,
        "rounds": settings.rounds,
        "iterations": settings.iterations,
        "coupling": settings.coupling.value,
        "C": settings.reweight_scale,
        "eps": settings.floor,
        "alpha": settings.inertia,
        "seed": settings.seed,
        "smooth_value": result.smooth_value,
        "objective": trace[-1] if trace else math.nan,
        "nonzeros": int(np.count_nonzero(result.x.data)),
        "located": int(result.location_map.sum()),
        "certified_steps": sum(c.satisfied for c in result.certificates),
        "steps": len(result.certificates),
        "trace": str(output_dir / "trace.csv"),
        **{
            f"psf_{name}": [float(v) for v in result.psf.values[:, j]]
            for j, name in enumerate(PSF_COORDINATES)
        },
    }
    write_key_values(output_dir / "result.txt", metadata)
    _formatter.print_key_values("RECONSTRUCTION", metadata)
    return result


def handle_analyze_coherence(
    pairs: tuple[tuple[float, float], ...],
    angles: int,
    output: Path,
    *,
    lattice_output: Path | None = None,
    shells: tuple[int, ...] = (),
    sites: tuple[int, ...] = (),
    ratios: tuple[float, ...] = (),
    workers: int | None = None,
) -> list[dict[str, float]]:
    """Pairwise coherence table, plus the lattice eigenvalue table if asked."""
    rows = coherence_study(pairs, angles, workers)
    fields = ("r", "d", "lower", "upper", "expected", "empirical")
    write_table(output, fields, rows)
    _formatter.print_table("COHERENCE", fields, rows)
    if lattice_output is not None:
        lattice = lattice_eigen_study(ratios, shells=shells, sites=sites)
        lattice_fields = ("ratio", "shells", "sites", "lambda_min")
        write_table(lattice_output, lattice_fields, lattice)
        _formatter.print_table("LATTICE EIGENVALUES", lattice_fields, lattice)
    return rows


def handle_analyze_spectrum(
    r: float,
    angles: int,
    n: int,
    epsilon: float,
    output: Path,
    workers: int | None = None,
) -> dict[str, Any]:
    """Radial spectrum of the averaged operator and its cutoff."""
    report = lowpass_spectrum(r, angles, n, epsilon, workers)
    write_table(output, ("frequency", "empirical", "analytic"), report.rows())
    summary = {
        "r": r,
        "angles": angles,
        "n": n,
        "epsilon": epsilon,
        "cutoff": report.cutoff,
        "cutoff_bound": report.cutoff_bound,
    }
    _formatter.print_key_values("LOW-PASS SPECTRUM", summary)
    return summary


def handle_certify(
    x: SparseMap,
    motif: Motif,
    geometry: ScanGeometry,
    output: Path,
    *,
    field_output: Path | None = None,
    workers: int | None = None,
) -> bool:
    """Build and check a certificate; write the report (and field)."""
    report = check_certificate(x, motif, geometry, workers=workers)
    summary = report.summary()
    write_key_values(output, summary)
    if field_output is not None:
        write_grid(field_output, report.field)
    _formatter.print_key_values("CERTIFICATE", summary)
    _formatter.print_verdict(report.passed, "Certificate")
    return report.passed


def handle_bench_pt(
    campaign: CampaignConfig,
    output_dir: Path,
    *,
    heatmap: bool = False,
    threads: int | None = None,
) -> dict[str, Path]:
    """Run a phase-transition campaign and write its CSV files."""
    result = phase_transition(campaign, threads)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = write_phase_transition(output_dir, result, campaign.log_runtime)
    if heatmap:
        paths["heatmap"] = output_dir / f"pt_{campaign.mode.value}.pgm"
        write_pgm(paths["heatmap"], result.success)
    _formatter.print_table(
        f"SUCCESS FRACTION ({campaign.mode.value})",
        result.fieldnames,
        result.rows(),
    )
    efficiency = efficiency_table(result)
    if efficiency:
        _formatter.print_table(
            "PROBE EFFICIENCY", list(efficiency[0].keys()), efficiency
        )
    return paths


def handle_bench_reweight(
    discs: tuple[int, ...],
    trials: int,
    seed: int,
    output: Path,
    *,
    n: int = 60,
    r: float = 3.0,
    threads: int | None = None,
) -> list[dict[str, Any]]:
    """Compare vanilla and reweighted penalties; write the error table."""
    rows = reweight_comparison(
        discs, trials, seed, n=n, r=r, threads=threads
    )
    write_table(output, REWEIGHT_FIELDS, rows)
    _formatter.print_table("NORMALIZED IMAGE ERROR", REWEIGHT_FIELDS, rows)
    return rows
