"""Configuration models for samples, the solver and experiment campaigns.

All three are read from key=value files; field aliases are the keys used in
those files (``K=6``, ``ratio=1.0``, ...).
"""

from typing import Self

from pydantic import ConfigDict, Field, model_validator

from .. import config
from .._base import LineprobeBaseModel
from ..enums import (
    AngleMode,
    ExperimentMode,
    MagnitudeMode,
    MotifKind,
    PlacementMode,
    PsfCoupling,
)


class SampleSpec(LineprobeBaseModel):
    """Recipe for a synthetic sparse sample."""

    model_config = ConfigDict(populate_by_name=True)

    n: int = Field(ge=2)
    k: int = Field(ge=0)
    r: float = Field(gt=0)
    min_sep_ratio: float = Field(default=1.0, gt=0, alias="ratio")
    magnitudes: MagnitudeMode = MagnitudeMode.EQUAL
    magnitude_low: float = Field(default=1.0, gt=0, alias="lo")
    magnitude_high: float = Field(default=1.0, gt=0, alias="hi")
    placement: PlacementMode = PlacementMode.RANDOM
    centers: tuple[tuple[int, int], ...] = ()
    seed: int = 0

    @model_validator(mode="after")
    def _validate_recipe(self) -> Self:
        if self.magnitude_low > self.magnitude_high:
            raise ValueError("magnitude lo must not exceed hi")
        if self.placement is PlacementMode.EXPLICIT:
            if len(self.centers) != self.k:
                raise ValueError(
                    f"explicit placement needs {self.k} centers, "
                    f"got {len(self.centers)}"
                )
            for row, col in self.centers:
                if not (0 <= row < self.n and 0 <= col < self.n):
                    raise ValueError(f"center ({row}, {col}) out of bounds")
        return self

    @property
    def min_distance(self) -> float:
        return self.min_sep_ratio * 2.0 * self.r


class SolverConfig(LineprobeBaseModel):
    """Constants of the reweighted inertial reconstruction."""

    model_config = ConfigDict(populate_by_name=True)

    rounds: int = Field(default=config.REWEIGHT_ROUNDS, ge=1, alias="K")
    iterations: int = Field(default=config.IPALM_ITERATIONS, ge=1, alias="L")
    reweight_scale: float = Field(
        default=config.REWEIGHT_SCALE, gt=0, alias="C"
    )
    initial_scale: float | None = Field(
        default=None, gt=0, alias="lambda_scale"
    )
    floor: float = Field(default=config.REWEIGHT_FLOOR, gt=0, alias="eps")
    inertia: float = Field(default=config.INERTIA, ge=0, lt=1, alias="alpha")
    seed: int = 0
    coupling: PsfCoupling = PsfCoupling.SHARED_SHAPE
    max_halvings: int = Field(default=config.MAX_HALVINGS, ge=1)
    initial_step: float = Field(default=config.INITIAL_STEP, gt=0)
    step_growth: float = Field(default=config.STEP_GROWTH, ge=1)
    early_stop_tolerance: float = Field(
        default=config.EARLY_STOP_TOLERANCE, ge=0
    )
    early_stop_patience: int = Field(
        default=config.EARLY_STOP_PATIENCE, ge=0
    )
    location_threshold: float = Field(
        default=config.LOCATION_THRESHOLD, gt=0, le=1
    )
    half_width: int | None = Field(default=None, ge=1)

    @property
    def first_round_scale(self) -> float:
        """Scale of the uniform first-round penalty (defaults to ``C``)."""
        if self.initial_scale is not None:
            return self.initial_scale
        return self.reweight_scale


class CampaignConfig(LineprobeBaseModel):
    """Experiment campaign description (phase transitions, sweeps)."""

    model_config = ConfigDict(populate_by_name=True)

    mode: ExperimentMode = ExperimentMode.FIXED_AREA
    n: int = Field(default=60, ge=8)
    r: float = Field(default=3.0, gt=0)
    min_sep_ratio: float = Field(default=1.0, gt=0, alias="ratio")
    motif: MotifKind = MotifKind.DISC
    lines: tuple[int, ...] = (2, 4, 6, 8, 10, 12, 14, 16)
    discs: tuple[int, ...] = (2, 4, 8, 12, 16, 20)
    trials: int = Field(default=config.TRIALS_PER_CELL, ge=1)
    seed: int = 0
    angle_mode: AngleMode = AngleMode.RANDOM
    rounds: int = Field(default=config.REWEIGHT_ROUNDS, ge=1, alias="K")
    iterations: int = Field(default=config.IPALM_ITERATIONS, ge=1, alias="L")
    reweight_scale: float = Field(
        default=config.REWEIGHT_SCALE, gt=0, alias="C"
    )
    tol_px: int = Field(default=config.SUPPORT_TOLERANCE_PX, ge=0)
    density_fraction: float = Field(default=1.0 / 6.0, gt=0, le=1)
    log_runtime: bool = False

    @model_validator(mode="after")
    def _validate_grid(self) -> Self:
        if not self.lines or min(self.lines) < 1:
            raise ValueError("lines must be a nonempty list of positive counts")
        if not self.discs or min(self.discs) < 1:
            raise ValueError("discs must be a nonempty list of positive counts")
        return self

    def solver_config(self, seed: int = 0) -> SolverConfig:
        return SolverConfig(
            rounds=self.rounds,
            iterations=self.iterations,
            reweight_scale=self.reweight_scale,
            seed=seed,
            coupling=PsfCoupling.FROZEN,
        )
