"""Line-probe microscopy CLI - Main Entry Point."""

import logging
import sys
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import click
import numpy as np
import pydantic

from lineprobe import __version__
from lineprobe.converters import (
    parse_angle_list,
    parse_float_list,
    parse_int_list,
    parse_motif,
    parse_pair_list,
)
from lineprobe.encoding import (
    model_from_key_values,
    read_key_values,
    read_psf_box,
    read_psf_params,
    read_scanset,
    read_sparse_map,
)
from lineprobe.enums import AngleMode
from lineprobe.exceptions import (
    FormatError,
    LineprobeError,
    SolverError,
    ValidationError,
)
from lineprobe.models import (
    CampaignConfig,
    PsfParams,
    SampleSpec,
    ScanGeometry,
    SolverConfig,
)
from lineprobe.sim import equispaced_angles, random_angles
from lineprobe.utils import derive_seed, resolve_threads

from . import handlers
from .rich_output import get_formatter

_logger = logging.getLogger(__name__)
_formatter = get_formatter()

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_ANGLE_MODES = click.Choice([m.value for m in AngleMode], case_sensitive=False)


# ============================================================================
# Option plumbing
# ============================================================================


def _merge_config[M: pydantic.BaseModel](
    model: type[M], config: Path | None, overrides: Mapping[str, Any]
) -> M:
    """Validate a key=value file with command-line values layered on top."""
    values = read_key_values(config) if config is not None else {}
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, bool):
            values[key] = "true" if value else "false"
        else:
            values[key] = str(value)
    return model_from_key_values(model, values)


def _angles(
    angles: str | None, m: int | None, angle_mode: str, seed: int
) -> tuple[float, ...]:
    if angles is not None and m is not None:
        raise click.UsageError("use either --angles or --m, not both")
    if angles is not None:
        return parse_angle_list(angles)
    if m is None:
        raise click.UsageError("one of --angles or --m is required")
    if m < 1:
        raise click.UsageError("--m must be >= 1")
    if AngleMode(angle_mode.lower()) is AngleMode.EQUISPACED:
        return equispaced_angles(m)
    return random_angles(m, np.random.default_rng(derive_seed(seed, "angles")))


def _workers(ctx: click.Context) -> int:
    return resolve_threads(ctx.obj.get("threads"))


def _angle_options(f: Any) -> Any:
    f = click.option(
        "--angle-mode",
        type=_ANGLE_MODES,
        default=AngleMode.RANDOM.value,
        show_default=True,
        help="How --m angles are chosen",
    )(f)
    f = click.option("--m", "m", type=int, help="Number of scan angles")(f)
    f = click.option(
        "--angles", help="Comma-separated angles in degrees (e.g. 0,60,120)"
    )(f)
    return f


def _one_line(e: Exception) -> str:
    if isinstance(e, pydantic.ValidationError):
        parts = []
        for err in e.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "value"
            parts.append(f"{loc}: {err['msg']}")
        return "; ".join(parts)
    return " ".join(str(e).split())


def _error_title(e: Exception) -> str:
    if isinstance(e, (ValidationError, pydantic.ValidationError)):
        return "Validation Error"
    if isinstance(e, FormatError):
        return "File Format Error"
    if isinstance(e, SolverError):
        return "Solver Error"
    if isinstance(e, OSError):
        return "File Error"
    return "Library Error"


# ============================================================================
# Command group
# ============================================================================


@click.group()
@click.option(
    "--threads",
    type=int,
    default=None,
    help="Worker threads (fallback: LSCS_THREADS, then all cores)",
)
@click.option("-v", "--verbose", count=True, help="Increase verbosity")
@click.version_option(version=__version__)
@click.pass_context
def cli(ctx: click.Context, threads: int | None, verbose: int) -> None:
    """Line-probe scanning: simulate, reconstruct, analyze and benchmark."""
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads

    log_level = logging.WARNING
    if verbose == 1:
        log_level = logging.INFO
    elif verbose >= 2:
        log_level = logging.DEBUG

    logging.basicConfig(
        level=logging.WARNING,  # Default for other libraries
        stream=sys.stdout,
        format="[%(asctime)s] %(levelname)s:%(name)s:%(message)s",
    )
    logging.getLogger("lineprobe").setLevel(log_level)


@cli.command()  # type: ignore[attr-defined]
@click.option("--config", type=Path, help="SampleSpec key=value file")
@click.option("--n", type=int, help="Grid side in pixels")
@click.option("--k", type=int, help="Number of spikes")
@click.option("--r", type=float, help="Motif radius in pixels")
@click.option("--ratio", type=float, help="Minimum separation d/2r")
@click.option(
    "--placement",
    type=click.Choice(["random", "hexagonal"], case_sensitive=False),
    help="Center placement",
)
@click.option(
    "--magnitudes",
    type=click.Choice(["equal", "uniform"], case_sensitive=False),
    help="Spike weights",
)
@click.option("--lo", type=float, help="Lower weight for uniform magnitudes")
@click.option("--hi", type=float, help="Upper weight for uniform magnitudes")
@click.option("--seed", type=int, help="Random seed (default 0)")
@click.option("-o", "--output", type=Path, required=True, help="Output grid")
def generate(
    config: Path | None,
    n: int | None,
    k: int | None,
    r: float | None,
    ratio: float | None,
    placement: str | None,
    magnitudes: str | None,
    lo: float | None,
    hi: float | None,
    seed: int | None,
    output: Path,
) -> None:
    """Draw a synthetic sparse sample."""
    spec = _merge_config(
        SampleSpec,
        config,
        {
            "n": n,
            "k": k,
            "r": r,
            "ratio": ratio,
            "placement": placement,
            "magnitudes": magnitudes,
            "lo": lo,
            "hi": hi,
            "seed": seed,
        },
    )
    handlers.handle_generate(spec, output)


@cli.command()  # type: ignore[attr-defined]
@click.option("--sample", type=Path, required=True, help="Sparse-map grid")
@click.option("--motif", required=True, help="Motif as kind:radius")
@_angle_options
@click.option("--psf", type=Path, help="PSF rows (default: delta PSF)")
@click.option("--psf-box", type=Path, help="PSF box (lower, upper rows)")
@click.option("--noise", type=float, default=0.0, help="Noise std")
@click.option("--stride", type=int, default=1, help="Sampling period")
@click.option("--half-width", type=int, help="PSF half-width in samples")
@click.option("--seed", type=int, default=0, help="Random seed")
@click.option("-o", "--output", type=Path, required=True, help="Scan CSV")
@click.pass_context
def scan(
    ctx: click.Context,
    sample: Path,
    motif: str,
    angles: str | None,
    m: int | None,
    angle_mode: str,
    psf: Path | None,
    psf_box: Path | None,
    noise: float,
    stride: int,
    half_width: int | None,
    seed: int,
    output: Path,
) -> None:
    """Simulate line scans of a sample."""
    workers = _workers(ctx)
    shape = parse_motif(motif)
    x = read_sparse_map(sample)
    values = _angles(angles, m, angle_mode, seed)
    geometry = ScanGeometry(angles=values, n=x.n, stride=stride)
    box = read_psf_box(psf_box) if psf_box is not None else None
    params = (
        read_psf_params(psf, box, geometry.m)
        if psf is not None
        else PsfParams.delta(geometry.m)
    )
    handlers.handle_scan(
        x,
        shape,
        geometry,
        params,
        output,
        noise_std=noise,
        seed=seed,
        half_width=half_width,
        workers=workers,
    )


@cli.command()  # type: ignore[attr-defined]
@click.option("--scans", type=Path, required=True, help="Scan CSV")
@click.option("--motif", required=True, help="Motif as kind:radius")
@click.option("--psf-init", type=Path, help="Initial PSF rows")
@click.option("--psf-box", type=Path, help="Feasible PSF box")
@click.option("--n", type=int, help="Grid side (required for strided scans)")
@click.option("--stride", type=int, default=1, help="Sampling period")
@click.option("--config", type=Path, help="SolverConfig key=value file")
@click.option("--K", "rounds", type=int, help="Reweighting rounds")
@click.option("--L", "iterations", type=int, help="Iterations per round")
@click.option("--C", "reweight_scale", type=float, help="Reweight scale")
@click.option("--alpha", type=float, help="Inertia")
@click.option(
    "--coupling",
    type=click.Choice(["shared", "independent", "frozen"]),
    help="How PSF vectors are tied across lines",
)
@click.option(
    "--lambda-scale", type=float, help="First-round penalty scale"
)
@click.option("--half-width", type=int, help="PSF half-width in samples")
@click.option("--seed", type=int, help="Random seed")
@click.option(
    "-o", "--output", type=Path, required=True, help="Output directory"
)
@click.pass_context
def reconstruct(
    ctx: click.Context,
    scans: Path,
    motif: str,
    psf_init: Path | None,
    psf_box: Path | None,
    n: int | None,
    stride: int,
    config: Path | None,
    rounds: int | None,
    iterations: int | None,
    reweight_scale: float | None,
    alpha: float | None,
    coupling: str | None,
    lambda_scale: float | None,
    half_width: int | None,
    seed: int | None,
    output: Path,
) -> None:
    """Reconstruct a sparse map and calibrate the PSF from line scans."""
    workers = _workers(ctx)
    shape = parse_motif(motif)
    settings = _merge_config(
        SolverConfig,
        config,
        {
            "K": rounds,
            "L": iterations,
            "C": reweight_scale,
            "alpha": alpha,
            "coupling": coupling,
            "lambda_scale": lambda_scale,
            "half_width": half_width,
            "seed": seed,
        },
    )
    data = read_scanset(scans, n=n, stride=stride)
    box = read_psf_box(psf_box) if psf_box is not None else None
    if psf_init is not None:
        params = read_psf_params(psf_init, box, data.m)
    elif box is not None:
        raise click.UsageError("--psf-box needs --psf-init")
    else:
        params = PsfParams.delta(data.m)
    handlers.handle_reconstruct(data, shape, params, settings, output, workers)


@cli.command("analyze-coherence")  # type: ignore[attr-defined]
@click.option(
    "--pairs",
    default="2:4,2:8,4:8,4:32",
    show_default=True,
    help="Comma-separated r:d pairs",
)
@click.option("--angles", type=int, default=360, show_default=True)
@click.option("--lattice-output", type=Path, help="Lattice eigenvalue CSV")
@click.option(
    "--shells", default="1..6", show_default=True, help="Hexagonal shells"
)
@click.option("--sites", help="Extra patches by site count, e.g. 900")
@click.option("--ratios", default="0.5,1,1.5,2", show_default=True)
@click.option("-o", "--output", type=Path, required=True, help="Output CSV")
@click.pass_context
def analyze_coherence(
    ctx: click.Context,
    pairs: str,
    angles: int,
    lattice_output: Path | None,
    shells: str,
    sites: str | None,
    ratios: str,
    output: Path,
) -> None:
    """Projected coherence of motif pairs and lattice eigenvalues."""
    workers = _workers(ctx)
    if angles < 1:
        raise click.UsageError("--angles must be >= 1")
    handlers.handle_analyze_coherence(
        parse_pair_list(pairs, "pairs"),
        angles,
        output,
        lattice_output=lattice_output,
        shells=parse_int_list(shells, "shells"),
        sites=parse_int_list(sites, "sites") if sites else (),
        ratios=parse_float_list(ratios, "ratios"),
        workers=workers,
    )


@cli.command("analyze-spectrum")  # type: ignore[attr-defined]
@click.option("--r", type=float, default=1.0, show_default=True)
@click.option("--angles", type=int, default=360, show_default=True)
@click.option("--n", type=int, default=128, show_default=True)
@click.option("--epsilon", type=float, default=0.01, show_default=True)
@click.option("-o", "--output", type=Path, required=True, help="Output CSV")
@click.pass_context
def analyze_spectrum(
    ctx: click.Context,
    r: float,
    angles: int,
    n: int,
    epsilon: float,
    output: Path,
) -> None:
    """Radial spectrum of the angle-averaged operator."""
    workers = _workers(ctx)
    handlers.handle_analyze_spectrum(r, angles, n, epsilon, output, workers)


@cli.command()  # type: ignore[attr-defined]
@click.option("--sample", type=Path, required=True, help="Sparse-map grid")
@click.option("--motif", required=True, help="Motif as kind:radius")
@_angle_options
@click.option("--seed", type=int, default=0, help="Random seed")
@click.option("--field-output", type=Path, help="Certificate field grid")
@click.option(
    "-o", "--output", type=Path, required=True, help="key=value report"
)
@click.pass_context
def certify(
    ctx: click.Context,
    sample: Path,
    motif: str,
    angles: str | None,
    m: int | None,
    angle_mode: str,
    seed: int,
    field_output: Path | None,
    output: Path,
) -> None:
    """Build and check a support certificate for a sample."""
    workers = _workers(ctx)
    shape = parse_motif(motif)
    x = read_sparse_map(sample)
    geometry = ScanGeometry(angles=_angles(angles, m, angle_mode, seed), n=x.n)
    handlers.handle_certify(
        x, shape, geometry, output, field_output=field_output, workers=workers
    )


@cli.command("bench-pt")  # type: ignore[attr-defined]
@click.option("--config", type=Path, help="CampaignConfig key=value file")
@click.option(
    "--mode",
    type=click.Choice(["fixed-area", "fixed-density"]),
    help="Grid scaling",
)
@click.option("--lines", help="Line counts, e.g. 2,4,8 or 2..16")
@click.option("--discs", help="Disc counts, e.g. 2,4,8 or 2..20")
@click.option("--trials", type=int, help="Trials per cell")
@click.option("--n", type=int, help="Grid side (fixed-area)")
@click.option("--r", type=float, help="Disc radius")
@click.option("--seed", type=int, help="Campaign seed")
@click.option("--log-runtime", is_flag=True, help="Log per-trial runtime")
@click.option("--heatmap", is_flag=True, help="Also write a PGM heatmap")
@click.option(
    "-o", "--output", type=Path, required=True, help="Output directory"
)
@click.pass_context
def bench_pt(
    ctx: click.Context,
    config: Path | None,
    mode: str | None,
    lines: str | None,
    discs: str | None,
    trials: int | None,
    n: int | None,
    r: float | None,
    seed: int | None,
    log_runtime: bool,
    heatmap: bool,
    output: Path,
) -> None:
    """Phase-transition campaign over lines x discs."""
    threads = _workers(ctx)
    campaign = _merge_config(
        CampaignConfig,
        config,
        {
            "mode": mode,
            "lines": lines,
            "discs": discs,
            "trials": trials,
            "n": n,
            "r": r,
            "seed": seed,
            "log_runtime": True if log_runtime else None,
        },
    )
    handlers.handle_bench_pt(
        campaign, output, heatmap=heatmap, threads=threads
    )


@cli.command("bench-reweight")  # type: ignore[attr-defined]
@click.option("--discs", default="2,4,8,12,16,20", show_default=True)
@click.option("--trials", type=int, default=10, show_default=True)
@click.option("--n", type=int, default=60, show_default=True)
@click.option("--r", type=float, default=3.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", type=Path, required=True, help="Output CSV")
@click.pass_context
def bench_reweight(
    ctx: click.Context,
    discs: str,
    trials: int,
    n: int,
    r: float,
    seed: int,
    output: Path,
) -> None:
    """Vanilla big/small penalty versus reweighting."""
    threads = _workers(ctx)
    if trials < 1:
        raise click.UsageError("--trials must be >= 1")
    handlers.handle_bench_reweight(
        parse_int_list(discs, "discs"),
        trials,
        seed,
        output,
        n=n,
        r=r,
        threads=threads,
    )


# ============================================================================
# Entry points
# ============================================================================


def run(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and map failures to exit codes.

    Returns 0 on success, 1 on a usage error and 2 on invalid data (library
    errors, validation errors, unreadable files).
    """
    args = list(argv) if argv is not None else sys.argv[1:]
    try:
        rv = cli.main(  # type: ignore[attr-defined]
            args=args, prog_name="lineprobe", standalone_mode=False
        )
    except click.UsageError as e:
        _formatter.print_error(e.format_message(), title="Usage Error")
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    except (LineprobeError, pydantic.ValidationError, OSError) as e:
        _logger.error(f"{type(e).__name__}: {e}")
        _formatter.print_error(_one_line(e), title=_error_title(e))
        return EXIT_DATA
    return rv if isinstance(rv, int) else EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
