"""Reproducible experiment campaigns over synthetic line-probe data.

Every trial derives its seed from the campaign seed and its cell
coordinates, so cells can run in any order on any number of threads and
still produce byte-identical CSV files.
"""

import logging
import math
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import field_validator
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from ._base import FloatArray, LineprobeBaseModel
from .encoding import write_table
from .enums import AngleMode, ExperimentMode, PlacementMode, PsfCoupling
from .exceptions import InfeasibleSampleError
from .models import (
    CampaignConfig,
    Image,
    Motif,
    PsfBox,
    PsfParams,
    SampleSpec,
    ScanGeometry,
    SolverConfig,
    SparseMap,
)
from .motifs import convolve_array
from .psf import box_half_width
from .sim import equispaced_angles, generate_sample, random_angles
from .sim import simulate_scan
from .solver import location_map, reconstruct
from .utils import derive_seed, resolve_threads

_logger = logging.getLogger(__name__)

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


# ============================================================================
# Trial scoring
# ============================================================================


def _grid(x: SparseMap | Image | FloatArray) -> FloatArray:
    if isinstance(x, (SparseMap, Image)):
        return x.data
    return np.asarray(x, dtype=np.float64)


def component_centers(
    x: SparseMap | FloatArray, threshold: float = 0.5
) -> FloatArray:
    """Weighted centroids of the 8-connected components of the location map."""
    grid = _grid(x)
    mask = location_map(grid, threshold) > 0
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if count == 0:
        return np.zeros((0, 2))
    centers = ndimage.center_of_mass(grid, labels, range(1, count + 1))
    return np.asarray(centers, dtype=np.float64).reshape(count, 2)


def support_match(
    x_hat: SparseMap | FloatArray,
    x0: SparseMap,
    tol_px: float = 1,
    threshold: float = 0.5,
) -> bool:
    """One-to-one match between estimated components and true spikes.

    Components of ``x_hat >= threshold * max(x_hat)`` (8-connected) are
    reduced to their weighted centroids and matched to the spikes of ``x0``
    by minimum total distance. The match succeeds when the counts agree and
    every matched pair is at most ``tol_px`` apart.
    """
    found = component_centers(x_hat, threshold)
    truth = np.asarray(x0.support(), dtype=np.float64).reshape(-1, 2)
    if found.shape[0] != truth.shape[0]:
        return False
    if truth.shape[0] == 0:
        return True
    diff = found[:, None, :] - truth[None, :, :]
    cost = np.hypot(diff[..., 0], diff[..., 1])
    rows, cols = linear_sum_assignment(cost)
    return bool(np.all(cost[rows, cols] <= tol_px + 1e-9))


def normalized_image_error(
    y_hat: Image | FloatArray, y0: Image | FloatArray
) -> float:
    """``|| y_hat/|y_hat| - y0/|y0| ||``; a zero image normalizes to zero."""
    a = _grid(y_hat)
    b = _grid(y0)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    ua = a / na if na > 0 else np.zeros_like(a)
    ub = b / nb if nb > 0 else np.zeros_like(b)
    return float(np.linalg.norm(ua - ub))


class TrialOutcome(LineprobeBaseModel):
    """Result of one seeded sample/scan/reconstruct trial."""

    mode: ExperimentMode
    n: int
    lines: int
    discs: int
    trial: int
    seed: int
    feasible: bool = True
    success: bool = False
    relative_error: float = math.nan
    runtime: float | None = None

    def row(self, log_runtime: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {
            "mode": self.mode.value,
            "n": self.n,
            "lines": self.lines,
            "discs": self.discs,
            "trial": self.trial,
            "seed": self.seed,
            "feasible": int(self.feasible),
            "success": int(self.success),
            "relative_error": self.relative_error,
        }
        if log_runtime:
            out["runtime"] = self.runtime
        return out


TRIAL_FIELDS = (
    "mode",
    "n",
    "lines",
    "discs",
    "trial",
    "seed",
    "feasible",
    "success",
    "relative_error",
)


# ============================================================================
# Single trial
# ============================================================================


def fixed_density_side(k: int, r: float, density_fraction: float) -> int:
    """Grid side whose inscribed disc holds ``k`` motifs at the density.

    Each motif is given ``2 sqrt(3) r^2 / density_fraction`` of area (the
    hexagonal packing cell scaled down by the target fill fraction).
    """
    area = 2.0 * math.sqrt(3.0) * r * r / density_fraction
    side = math.ceil(math.sqrt(k * area * 4.0 / math.pi))
    return max(side, math.ceil(4.0 * r) + 4)


def campaign_side(campaign: CampaignConfig, k: int) -> int:
    if campaign.mode is ExperimentMode.FIXED_DENSITY:
        return fixed_density_side(k, campaign.r, campaign.density_fraction)
    return campaign.n


def _angles(
    mode: AngleMode, m: int, rng: np.random.Generator
) -> tuple[float, ...]:
    if mode is AngleMode.EQUISPACED:
        return equispaced_angles(m)
    return random_angles(m, rng)


def run_trial(
    n: int,
    k: int,
    lines: int,
    r: float,
    seed: int,
    *,
    motif: Motif,
    min_sep_ratio: float = 1.0,
    angle_mode: AngleMode = AngleMode.RANDOM,
    settings: SolverConfig | None = None,
    tol_px: float = 1,
    mode: ExperimentMode = ExperimentMode.FIXED_AREA,
    trial: int = 0,
) -> TrialOutcome:
    """Sample, scan with a delta PSF, reconstruct and score one trial."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    spec = SampleSpec(
        n=n,
        k=k,
        r=r,
        min_sep_ratio=min_sep_ratio,
        placement=PlacementMode.RANDOM,
        seed=seed,
    )
    echo: dict[str, Any] = {
        "mode": mode,
        "n": n,
        "lines": lines,
        "discs": k,
        "trial": trial,
        "seed": seed,
    }
    try:
        x0 = generate_sample(spec)
    except InfeasibleSampleError as e:
        _logger.warning(f"Infeasible cell n={n} k={k}: {e}")
        return TrialOutcome(**echo, feasible=False)
    geometry = ScanGeometry(angles=_angles(angle_mode, lines, rng), n=n)
    psf = PsfParams.delta(lines)
    scans = simulate_scan(x0, motif, geometry, psf, seed=seed)
    settings = settings or SolverConfig(seed=seed)
    result = reconstruct(scans, motif, psf, settings)
    error = normalized_image_error(
        convolve_array(result.x.data, motif), convolve_array(x0.data, motif)
    )
    return TrialOutcome(
        **echo,
        success=support_match(result.x, x0, tol_px),
        relative_error=error,
        runtime=time.perf_counter() - start,
    )


def _map_jobs[T](
    jobs: Sequence[Callable[[], T]], threads: int | None
) -> list[T]:
    workers = resolve_threads(threads)
    if workers == 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


# ============================================================================
# Phase transitions
# ============================================================================


class PhaseTransitionResult(LineprobeBaseModel):
    """Success fractions, rows indexed by disc count, columns by lines."""

    mode: ExperimentMode
    lines: tuple[int, ...]
    discs: tuple[int, ...]
    sides: tuple[int, ...]
    success: FloatArray
    outcomes: tuple[TrialOutcome, ...] = ()

    @field_validator("success", mode="before")
    @classmethod
    def _validate_success(cls, v: Any) -> FloatArray:
        arr = np.array(v, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError("success matrix must be 2-dimensional")
        arr.setflags(write=False)
        return arr

    def rows(self) -> list[dict[str, Any]]:
        out: list[dict[str, Any]] = []
        for i, k in enumerate(self.discs):
            row: dict[str, Any] = {"discs": k, "n": self.sides[i]}
            for j, m in enumerate(self.lines):
                row[f"lines_{m}"] = float(self.success[i, j])
            out.append(row)
        return out

    @property
    def fieldnames(self) -> list[str]:
        return ["discs", "n", *(f"lines_{m}" for m in self.lines)]

    def frontier(self, level: float = 0.5) -> list[int | None]:
        """Smallest line count reaching ``level`` for every disc count."""
        out: list[int | None] = []
        for i in range(len(self.discs)):
            hits = [
                m
                for j, m in enumerate(self.lines)
                if self.success[i, j] >= level
            ]
            out.append(min(hits) if hits else None)
        return out


def phase_transition(
    campaign: CampaignConfig, threads: int | None = None
) -> PhaseTransitionResult:
    """Success fraction of support recovery over a lines × discs grid.

    Infeasible cells (the sampler cannot place the motifs) are NaN.
    """
    motif = Motif(kind=campaign.motif, radius=campaign.r)
    jobs: list[Callable[[], TrialOutcome]] = []
    sides = tuple(campaign_side(campaign, k) for k in campaign.discs)
    for k, n in zip(campaign.discs, sides, strict=True):
        for m in campaign.lines:
            for trial in range(campaign.trials):
                seed = derive_seed(campaign.seed, m, k, trial)
                jobs.append(
                    _trial_job(campaign, motif, n, k, m, trial, seed)
                )
    _logger.info(
        f"Phase transition ({campaign.mode.value}): {len(jobs)} trials"
    )
    outcomes = _map_jobs(jobs, threads)

    success = np.full((len(campaign.discs), len(campaign.lines)), np.nan)
    by_cell: dict[tuple[int, int], list[TrialOutcome]] = {}
    for outcome in outcomes:
        by_cell.setdefault((outcome.discs, outcome.lines), []).append(outcome)
    for i, k in enumerate(campaign.discs):
        for j, m in enumerate(campaign.lines):
            cell = by_cell.get((k, m), [])
            if cell and all(o.feasible for o in cell):
                success[i, j] = sum(o.success for o in cell) / len(cell)
    if not campaign.log_runtime:
        outcomes = [o.model_copy(update={"runtime": None}) for o in outcomes]
    return PhaseTransitionResult(
        mode=campaign.mode,
        lines=campaign.lines,
        discs=campaign.discs,
        sides=sides,
        success=success,
        outcomes=tuple(outcomes),
    )


def _trial_job(
    campaign: CampaignConfig,
    motif: Motif,
    n: int,
    k: int,
    m: int,
    trial: int,
    seed: int,
) -> Callable[[], TrialOutcome]:
    def job() -> TrialOutcome:
        return run_trial(
            n,
            k,
            m,
            campaign.r,
            seed,
            motif=motif,
            min_sep_ratio=campaign.min_sep_ratio,
            angle_mode=campaign.angle_mode,
            settings=campaign.solver_config(seed),
            tol_px=campaign.tol_px,
            mode=campaign.mode,
            trial=trial,
        )

    return job


def efficiency_table(result: PhaseTransitionResult) -> list[dict[str, Any]]:
    """Samples at 50% recovery: line probe ``N * n`` vs raster ``n^2``."""
    rows: list[dict[str, Any]] = []
    for k, n, lines in zip(
        result.discs, result.sides, result.frontier(0.5), strict=True
    ):
        point = n * n
        line = lines * n if lines is not None else math.nan
        rows.append(
            {
                "discs": k,
                "n": n,
                "lines_at_50": lines if lines is not None else "",
                "line_probe_samples": line,
                "point_probe_samples": point,
                "ratio": point / line if lines is not None else math.nan,
            }
        )
    return rows


EFFICIENCY_FIELDS = (
    "discs",
    "n",
    "lines_at_50",
    "line_probe_samples",
    "point_probe_samples",
    "ratio",
)


# ============================================================================
# Reweighting, calibration and three-line studies
# ============================================================================


def reweight_lines(k: int) -> int:
    """Line count used for ``k`` discs: 8 below 16 discs, else 16."""
    return 8 if k < 16 else 16


def reweight_comparison(
    discs: Sequence[int],
    trials: int,
    seed: int = 0,
    *,
    n: int = 60,
    r: float = 3.0,
    big_scale: float = 0.5,
    small_scale: float = 0.01,
    rounds: int = 6,
    iterations: int = 50,
    threads: int | None = None,
) -> list[dict[str, Any]]:
    """Mean normalized image error of big-λ, small-λ and reweighted solves.

    The two vanilla variants run a single round with a uniform penalty of
    ``scale * peak``; the reweighted variant runs ``rounds`` rounds.
    """
    motif = Motif(radius=r)
    variants = {
        "big_lambda": SolverConfig(
            rounds=1, iterations=iterations, initial_scale=big_scale,
            coupling=PsfCoupling.FROZEN,
        ),
        "small_lambda": SolverConfig(
            rounds=1, iterations=iterations, initial_scale=small_scale,
            coupling=PsfCoupling.FROZEN,
        ),
        "reweighted": SolverConfig(
            rounds=rounds, iterations=iterations, coupling=PsfCoupling.FROZEN
        ),
    }
    jobs: list[Callable[[], dict[str, float]]] = []
    for k in discs:
        for trial in range(trials):
            jobs.append(
                _comparison_job(
                    n, k, r, derive_seed(seed, "reweight", k, trial),
                    motif, variants,
                )
            )
    results = _map_jobs(jobs, threads)
    rows: list[dict[str, Any]] = []
    for idx, k in enumerate(discs):
        chunk = results[idx * trials : (idx + 1) * trials]
        row: dict[str, Any] = {"discs": k, "lines": reweight_lines(k)}
        for name in variants:
            values = [c[name] for c in chunk if not math.isnan(c[name])]
            row[name] = float(np.mean(values)) if values else math.nan
        rows.append(row)
        _logger.info(f"Reweight comparison k={k}: {row}")
    return rows


def _comparison_job(
    n: int,
    k: int,
    r: float,
    seed: int,
    motif: Motif,
    variants: dict[str, SolverConfig],
) -> Callable[[], dict[str, float]]:
    def job() -> dict[str, float]:
        spec = SampleSpec(n=n, k=k, r=r, seed=seed)
        try:
            x0 = generate_sample(spec)
        except InfeasibleSampleError:
            return dict.fromkeys(variants, math.nan)
        m = reweight_lines(k)
        rng = np.random.default_rng(seed)
        geometry = ScanGeometry(angles=random_angles(m, rng), n=n)
        psf = PsfParams.delta(m)
        scans = simulate_scan(x0, motif, geometry, psf)
        truth = convolve_array(x0.data, motif)
        out: dict[str, float] = {}
        for name, settings in variants.items():
            result = reconstruct(scans, motif, psf, settings)
            out[name] = normalized_image_error(
                convolve_array(result.x.data, motif), truth
            )
        return out

    return job


REWEIGHT_FIELDS = ("discs", "lines", "big_lambda", "small_lambda", "reweighted")

#: True probe response of the calibration study: fast left decay, long
#: right tail ``(0.4 k + 1)**-1`` and light smoothing.
CALIBRATION_SHAPE = (4.0, 4.0, 0.4, 1.0, 0.5)
#: Right-tail exponent both solvers start from (an almost one-sided delta).
CALIBRATION_START_TAIL = 6.0
_TAIL = 3  # index of the right-tail exponent within the shape


def calibration_study(
    trials: int,
    seed: int = 0,
    *,
    n: int = 48,
    k: int = 4,
    lines: int = 6,
    r: float = 3.0,
    spread: float = 4.0,
    min_sep_ratio: float = 1.0,
    rounds: int = 6,
    iterations: int = 100,
    lambda_scale: float = 0.02,
    threads: int | None = None,
) -> dict[str, float]:
    """Support recovery with and without blind PSF calibration.

    Samples are touching discs scanned at equispaced angles over 180°
    through a probe with per-line amplitudes spanning ``[1, spread]`` and a
    long right tail. Both solvers start from unit amplitudes and a short
    tail. The calibrated solver may move the amplitudes and the tail
    exponent inside a box; the frozen one keeps its starting PSF, whose
    missing tail displaces every line by the same sweep offset and so
    shifts each recovered spike off its center.

    Returns:
        Dict with the number of feasible trials, both success rates and
        ``contrast``, the fraction of trials where only the calibrated
        solver recovers the support
    """
    motif = Motif(radius=r)
    jobs = [
        _calibration_job(
            n, k, lines, r, spread, min_sep_ratio,
            derive_seed(seed, "calibration", t), motif,
            SolverConfig(
                rounds=rounds, iterations=iterations,
                initial_scale=lambda_scale, seed=seed,
            ),
        )
        for t in range(trials)
    ]
    results = _map_jobs(jobs, threads)
    feasible = [res for res in results if res is not None]
    total = max(len(feasible), 1)
    out = {
        "trials": float(len(feasible)),
        "calibrated": sum(res[0] for res in feasible) / total,
        "frozen": sum(res[1] for res in feasible) / total,
        "contrast": sum(res[0] and not res[1] for res in feasible) / total,
    }
    _logger.info(f"Calibration study: {out}")
    return out


def calibration_box(spread: float) -> PsfBox:
    """Box freeing the amplitude and the right-tail exponent only."""
    shape = np.asarray(CALIBRATION_SHAPE)
    upper_shape = shape.copy()
    upper_shape[_TAIL] = CALIBRATION_START_TAIL
    lower_shape = shape.copy()
    lower_shape[_TAIL] = 0.8 * shape[_TAIL]
    return PsfBox(
        lower=np.concatenate([[0.1], lower_shape]),
        upper=np.concatenate([[10.0 * spread], upper_shape]),
    )


def _calibration_job(
    n: int,
    k: int,
    lines: int,
    r: float,
    spread: float,
    min_sep_ratio: float,
    seed: int,
    motif: Motif,
    settings: SolverConfig,
) -> Callable[[], tuple[bool, bool] | None]:
    def job() -> tuple[bool, bool] | None:
        rng = np.random.default_rng(seed)
        spec = SampleSpec(
            n=n, k=k, r=r, min_sep_ratio=min_sep_ratio, seed=seed
        )
        try:
            x0 = generate_sample(spec)
        except InfeasibleSampleError:
            return None
        geometry = ScanGeometry(angles=equispaced_angles(lines), n=n)
        amplitudes = rng.permutation(np.linspace(1.0, spread, lines))
        box = calibration_box(spread)
        shape = np.asarray(CALIBRATION_SHAPE)
        truth = PsfParams(
            values=np.column_stack([amplitudes, np.tile(shape, (lines, 1))]),
            box=box,
        )
        scans = simulate_scan(x0, motif, geometry, truth)
        guess = shape.copy()
        guess[_TAIL] = CALIBRATION_START_TAIL
        start = PsfParams.uniform(np.concatenate([[1.0], guess]), lines, box)
        calibrated = reconstruct(scans, motif, start, settings)
        frozen = reconstruct(
            scans,
            motif,
            PsfParams.uniform(start.values[0], lines),
            settings.model_copy(
                update={
                    "coupling": PsfCoupling.FROZEN,
                    "half_width": box_half_width(box, n),
                }
            ),
        )
        return support_match(calibrated.x, x0), support_match(frozen.x, x0)

    return job


def three_line_study(
    trials: int,
    seed: int = 0,
    *,
    n: int = 128,
    k: int = 3,
    r: float = 1.0,
    separation: float = 40.0,
    threads: int | None = None,
) -> float:
    """Recovery rate with three random angles, a delta PSF and tiny discs."""
    motif = Motif(radius=r)
    ratio = separation / (2.0 * r)
    jobs = [
        _three_line_job(n, k, r, ratio, derive_seed(seed, "three", t), motif)
        for t in range(trials)
    ]
    results = _map_jobs(jobs, threads)
    return sum(results) / max(len(results), 1)


def _three_line_job(
    n: int, k: int, r: float, ratio: float, seed: int, motif: Motif
) -> Callable[[], bool]:
    def job() -> bool:
        outcome = run_trial(
            n, k, 3, r, seed, motif=motif, min_sep_ratio=ratio,
            settings=SolverConfig(seed=seed, coupling=PsfCoupling.FROZEN),
        )
        return outcome.success

    return job


# ============================================================================
# Output
# ============================================================================


def write_phase_transition(
    directory: str | Path, result: PhaseTransitionResult, log_runtime: bool
) -> dict[str, Path]:
    """Write ``pt_<mode>.csv``, ``efficiency_<mode>.csv`` and the trial log."""
    out = Path(directory)
    mode = result.mode.value
    paths = {
        "pt": out / f"pt_{mode}.csv",
        "efficiency": out / f"efficiency_{mode}.csv",
        "trials": out / f"trials_{mode}.csv",
    }
    write_table(paths["pt"], result.fieldnames, result.rows())
    write_table(
        paths["efficiency"], EFFICIENCY_FIELDS, efficiency_table(result)
    )
    fields = [*TRIAL_FIELDS, "runtime"] if log_runtime else list(TRIAL_FIELDS)
    write_table(
        paths["trials"], fields, (o.row(log_runtime) for o in result.outcomes)
    )
    return paths


def write_pgm(path: str | Path, matrix: FloatArray, scale: int = 8) -> None:
    """Plain (P2) PGM heatmap of values in [0, 1]; NaN cells are black."""
    values = np.nan_to_num(np.asarray(matrix, dtype=np.float64), nan=0.0)
    pixels = np.rint(np.clip(values, 0.0, 1.0) * 255).astype(int)
    pixels = np.kron(pixels, np.ones((scale, scale), dtype=int))
    height, width = pixels.shape
    with Path(path).open("w") as fh:
        fh.write(f"P2\n{width} {height}\n255\n")
        for row in pixels:
            fh.write(" ".join(str(v) for v in row))
            fh.write("\n")
