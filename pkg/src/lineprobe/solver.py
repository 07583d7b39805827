"""Reweighted, PSF-calibrating nonnegative sparse reconstruction.

The data term is the smooth least-squares misfit::

    h(X, p) = sum_i 1/2 || S{psi(p_i) * L_i[D * X]} - R_i ||^2

and each reweighting round minimizes ``<lambda, X> + h(X, p)`` over
``X >= 0`` and ``p`` in the PSF box with inertial proximal alternating
linearized steps: an extrapolated soft-threshold step on ``X`` followed by
an extrapolated projected-gradient step on ``p``, each with backtracking on
the sufficient-decrease inequality

    h(X+) <= h(Y) + <grad h(Y), X+ - Y> + ||X+ - Y||^2 / (2t).

Round one uses a uniform penalty scaled to the peak of the back-projected,
PSF-correlated data; later rounds set ``lambda = C * h / (X + eps)``.
"""

import logging
from typing import Any

import numpy as np
from pydantic import Field, field_validator

from . import config as defaults
from ._base import FloatArray, LineprobeBaseModel, readonly_array
from .enums import PsfCoupling
from .exceptions import LipschitzBlowupError, ShapeMismatchError
from .models import (
    LineScanSet,
    Motif,
    PsfBox,
    PsfParams,
    SolverConfig,
    SparseMap,
)
from .motifs import convolve_array, correlate_array
from .ops import back_project_array, downsample, project_array, upsample
from .psf import (
    box_half_width,
    convolve_columns,
    correlate_columns,
    psf_param_gradient,
    render_taps,
)
from .utils import log_performance

_logger = logging.getLogger(__name__)

# Relative slack on objective comparisons (floating-point roundoff only).
_ROUNDOFF = 1e-12


# =============================================================================
# Result types
# =============================================================================


class StepCertificate(LineprobeBaseModel):
    """Evidence that one accepted step met the sufficient-decrease test."""

    round: int
    iteration: int
    block: str
    value: float
    bound: float
    step: float
    halvings: int

    @property
    def satisfied(self) -> bool:
        slack = _ROUNDOFF * max(1.0, abs(self.bound))
        return self.value <= self.bound + slack


class ReweightState(LineprobeBaseModel):
    """Penalty grid of one reweighting round and its objective history."""

    lam: FloatArray
    round: int = Field(ge=1)
    history: tuple[float, ...] = ()

    @field_validator("lam", mode="before")
    @classmethod
    def _validate_lam(cls, v: Any) -> FloatArray:
        arr = readonly_array(v, 2, "ReweightState.lam")
        if np.any(arr <= 0):
            raise ValueError("penalties must be strictly positive")
        return arr


class IpalmResult(LineprobeBaseModel):
    """Final iterates of one inner solve."""

    x: FloatArray
    psf_values: FloatArray
    history: tuple[float, ...]
    smooth_value: float
    certificates: tuple[StepCertificate, ...] = ()
    restarts: int = 0

    @field_validator("x", "psf_values", mode="before")
    @classmethod
    def _validate_arrays(cls, v: Any) -> FloatArray:
        return readonly_array(v, 2, "IpalmResult array")


class SolverResult(LineprobeBaseModel):
    """Output of :func:`reconstruct`.

    Attributes:
        x: Estimated sparse map
        psf: Estimated per-line PSF parameters (inside the box)
        states: Penalty grid and objective history of every round
        certificates: Sufficient-decrease evidence of every accepted step
        location_map: ``1`` where ``x >= threshold * max(x)``, else ``0``
        smooth_value: Final data misfit ``h``
    """

    x: SparseMap
    psf: PsfParams
    states: tuple[ReweightState, ...]
    certificates: tuple[StepCertificate, ...] = ()
    location_map: FloatArray
    smooth_value: float

    @field_validator("location_map", mode="before")
    @classmethod
    def _validate_map(cls, v: Any) -> FloatArray:
        return readonly_array(v, 2, "SolverResult.location_map")

    @property
    def trace(self) -> tuple[float, ...]:
        """Full objective after every iteration, all rounds concatenated."""
        return tuple(v for state in self.states for v in state.history)


# =============================================================================
# Forward model
# =============================================================================


class ForwardModel:
    """Measurement operator ``X, p -> S{psi(p) * L[D * X]}`` for one data set.

    Caches the full-resolution geometry and exposes the pieces the solver
    needs: projections, residuals, and both gradients.
    """

    def __init__(
        self,
        scans: LineScanSet,
        motif: Motif,
        half_width: int,
        workers: int | None = None,
    ) -> None:
        self.scans = scans
        self.motif = motif
        self.half_width = half_width
        self.workers = workers
        self.geometry = scans.geometry.model_copy(update={"stride": 1})
        self.stride = scans.geometry.stride
        self.n = scans.geometry.n
        self.data = scans.data

    def taps(self, values: FloatArray) -> FloatArray:
        """Stacked taps, one row per line."""
        return np.stack([render_taps(row, self.half_width) for row in values])

    def project(self, x: FloatArray) -> FloatArray:
        """Unblurred full-resolution projections ``L[D * x]``."""
        if x.shape != (self.n, self.n):
            raise ShapeMismatchError(
                f"sparse map shape {x.shape} does not match grid {self.n}",
                expected=(self.n, self.n),
                actual=tuple(x.shape),
            )
        return project_array(
            convolve_array(x, self.motif), self.geometry, self.workers
        )

    def residual(self, z: FloatArray, taps: FloatArray) -> FloatArray:
        predicted = downsample(convolve_columns(z, taps), self.stride)
        out: FloatArray = predicted - self.data
        return out

    @staticmethod
    def value(residual: FloatArray) -> float:
        return 0.5 * float(np.vdot(residual, residual))

    def grad_x(self, residual: FloatArray, taps: FloatArray) -> FloatArray:
        """``D`` correlation of the back projection of the PSF adjoint."""
        full = upsample(residual, self.stride, self.n)
        lines = correlate_columns(full, taps)
        image = back_project_array(lines, self.geometry, self.workers)
        return correlate_array(image, self.motif)

    def grad_taps(self, residual: FloatArray, z: FloatArray) -> FloatArray:
        """Gradient of ``h`` with respect to every tap, shape (m, 2w+1)."""
        w = self.half_width
        full = upsample(residual, self.stride, self.n)
        out = np.empty((z.shape[1], 2 * w + 1))
        for i in range(z.shape[1]):
            padded = np.pad(z[:, i], w)
            out[i] = np.correlate(padded, full[:, i], mode="valid")[::-1]
        return out

    def grad_params(
        self,
        residual: FloatArray,
        z: FloatArray,
        values: FloatArray,
        box: PsfBox | None,
    ) -> FloatArray:
        """Per-line gradient of ``h`` with respect to the PSF vectors."""
        tap_grad = self.grad_taps(residual, z)
        out = np.empty_like(values)
        for i, row in enumerate(values):
            sens = psf_param_gradient(row, self.half_width, box)
            out[i] = sens.contract(tap_grad[i])
        return out


def _grid(x: SparseMap | FloatArray) -> FloatArray:
    return x.data if isinstance(x, SparseMap) else np.asarray(x, np.float64)


def _model_for(
    scans: LineScanSet,
    motif: Motif,
    psf: PsfParams,
    half_width: int | None,
    workers: int | None,
) -> ForwardModel:
    if psf.m != scans.m:
        raise ShapeMismatchError(
            f"expected {scans.m} PSF rows (one per angle), got {psf.m}",
            expected=(scans.m,),
            actual=(psf.m,),
        )
    w = half_width if half_width is not None else box_half_width(
        psf.box, scans.geometry.n
    )
    return ForwardModel(scans, motif, w, workers)


def smooth_objective(
    x: SparseMap | FloatArray,
    psf: PsfParams,
    scans: LineScanSet,
    motif: Motif,
    half_width: int | None = None,
    workers: int | None = None,
) -> float:
    """Data misfit ``h(X, p)`` of a candidate sparse map and PSF."""
    model = _model_for(scans, motif, psf, half_width, workers)
    res = model.residual(model.project(_grid(x)), model.taps(psf.values))
    return model.value(res)


def grad_x(
    x: SparseMap | FloatArray,
    psf: PsfParams,
    scans: LineScanSet,
    motif: Motif,
    half_width: int | None = None,
    workers: int | None = None,
) -> FloatArray:
    """Gradient of ``h`` with respect to the sparse map."""
    model = _model_for(scans, motif, psf, half_width, workers)
    taps = model.taps(psf.values)
    res = model.residual(model.project(_grid(x)), taps)
    return model.grad_x(res, taps)


def grad_p(
    x: SparseMap | FloatArray,
    psf: PsfParams,
    scans: LineScanSet,
    motif: Motif,
    half_width: int | None = None,
    coupling: PsfCoupling = PsfCoupling.INDEPENDENT,
    workers: int | None = None,
) -> FloatArray:
    """Gradient of ``h`` with respect to the PSF parameters, shape (m, 6).

    With ``SHARED_SHAPE`` coupling every row carries the summed shape
    gradient; with ``FROZEN`` coupling the gradient is zero.
    """
    model = _model_for(scans, motif, psf, half_width, workers)
    if coupling is PsfCoupling.FROZEN:
        return np.zeros_like(psf.values)
    z = model.project(_grid(x))
    res = model.residual(z, model.taps(psf.values))
    raw = model.grad_params(res, z, np.asarray(psf.values), psf.box)
    return tie_gradient(raw, coupling)


# =============================================================================
# Coupling helpers
# =============================================================================


def tie_values(values: FloatArray, coupling: PsfCoupling) -> FloatArray:
    """Make shape coordinates equal across lines for shared-shape coupling."""
    out = np.array(values, dtype=np.float64)
    if coupling is PsfCoupling.SHARED_SHAPE:
        out[:, 1:] = out[:, 1:].mean(axis=0)
    return out


def tie_gradient(grad: FloatArray, coupling: PsfCoupling) -> FloatArray:
    out = np.array(grad, dtype=np.float64)
    if coupling is PsfCoupling.SHARED_SHAPE:
        out[:, 1:] = out[:, 1:].sum(axis=0)
    elif coupling is PsfCoupling.FROZEN:
        out[:] = 0.0
    return out


def _p_norm2(delta: FloatArray, coupling: PsfCoupling) -> float:
    # squared norm in the free variables of the coupling
    if coupling is PsfCoupling.SHARED_SHAPE:
        return float(np.sum(delta[:, 0] ** 2) + np.sum(delta[0, 1:] ** 2))
    return float(np.sum(delta**2))


# =============================================================================
# Proximal iterations
# =============================================================================


def prox_step(v: FloatArray, t_lam: FloatArray | float) -> FloatArray:
    """Nonnegative soft threshold ``max(v - t*lambda, 0)``."""
    out: FloatArray = np.maximum(v - t_lam, 0.0)
    return out


def location_map(
    x: SparseMap | FloatArray, threshold: float = defaults.LOCATION_THRESHOLD
) -> FloatArray:
    """Binary map of entries at least ``threshold`` times the maximum."""
    grid = _grid(x)
    peak = float(grid.max()) if grid.size else 0.0
    if peak <= 0:
        return np.zeros_like(grid)
    return (grid >= threshold * peak).astype(np.float64)


def _accepts(value: float, bound: float) -> bool:
    return value <= bound + _ROUNDOFF * max(1.0, abs(bound))


class _Iterate:
    """Mutable state of the inner solve (kept out of the public API)."""

    def __init__(
        self, model: ForwardModel, x: FloatArray, values: FloatArray
    ) -> None:
        self.x = x
        self.values = values
        self.z = model.project(x)
        self.taps = model.taps(values)
        self.residual = model.residual(self.z, self.taps)
        self.h = model.value(self.residual)


def ipalm(
    model: ForwardModel,
    x0: FloatArray,
    psf0: PsfParams,
    lam: FloatArray,
    settings: SolverConfig,
    round_index: int = 1,
) -> IpalmResult:
    """Inertial proximal alternating minimization with backtracking.

    Runs ``settings.iterations`` outer iterations from ``(x0, psf0)``
    (momentum starts at rest). Each accepted step is certified; when an
    extrapolated iteration raises ``<lambda, X> + h``, it is redone from the
    current iterate without extrapolation.

    Raises:
        LipschitzBlowupError: If backtracking exceeds ``max_halvings``
    """
    coupling = settings.coupling
    box = psf0.box
    calibrate = coupling is not PsfCoupling.FROZEN and not box.collapsed
    alpha = settings.inertia

    cur = _Iterate(model, np.array(x0, np.float64), np.array(psf0.values))
    prev_x, prev_z, prev_values = cur.x, cur.z, cur.values
    t_x = settings.initial_step
    t_p = settings.initial_step
    objective = float(np.vdot(lam, cur.x)) + cur.h
    history: list[float] = []
    certificates: list[StepCertificate] = []
    restarts = 0
    quiet = 0

    for it in range(1, settings.iterations + 1):
        for extrapolate in (True, False):
            x_new, z_new, t_x, cert_x = _x_step(
                model, cur, prev_x, prev_z, lam, t_x,
                alpha if extrapolate else 0.0, settings, round_index, it,
            )
            values_new = cur.values
            taps_new = cur.taps
            cert_p = None
            if calibrate:
                values_new, taps_new, t_p, cert_p = _p_step(
                    model, z_new, cur.values, prev_values, box, t_p,
                    alpha if extrapolate else 0.0, settings, round_index, it,
                )
            residual = model.residual(z_new, taps_new)
            h_new = model.value(residual)
            new_objective = float(np.vdot(lam, x_new)) + h_new
            if (
                extrapolate
                and alpha > 0
                and not _accepts(new_objective, objective)
            ):
                restarts += 1
                _logger.debug(
                    f"Round {round_index} it {it}: objective rose "
                    f"{objective:.6e} -> {new_objective:.6e}, restarting"
                )
                prev_x, prev_z, prev_values = cur.x, cur.z, cur.values
                continue
            break

        certificates.append(cert_x)
        if cert_p is not None:
            certificates.append(cert_p)
        prev_x, prev_z, prev_values = cur.x, cur.z, cur.values
        cur.x, cur.z, cur.values = x_new, z_new, values_new
        cur.taps, cur.residual, cur.h = taps_new, residual, h_new

        change = abs(objective - new_objective) / max(abs(objective), 1e-300)
        objective = new_objective
        history.append(objective)
        if change < settings.early_stop_tolerance:
            quiet += 1
            if settings.early_stop_patience and (
                quiet >= settings.early_stop_patience
            ):
                _logger.debug(
                    f"Round {round_index}: early stop at iteration {it}"
                )
                break
        else:
            quiet = 0

    return IpalmResult(
        x=cur.x,
        psf_values=cur.values,
        history=tuple(history),
        smooth_value=cur.h,
        certificates=tuple(certificates),
        restarts=restarts,
    )


def _x_step(
    model: ForwardModel,
    cur: _Iterate,
    prev_x: FloatArray,
    prev_z: FloatArray,
    lam: FloatArray,
    t0: float,
    alpha: float,
    settings: SolverConfig,
    round_index: int,
    it: int,
) -> tuple[FloatArray, FloatArray, float, StepCertificate]:
    y = cur.x + alpha * (cur.x - prev_x)
    z_y = cur.z + alpha * (cur.z - prev_z)
    res_y = model.residual(z_y, cur.taps)
    h_y = model.value(res_y)
    grad = model.grad_x(res_y, cur.taps)
    t = t0
    for halvings in range(settings.max_halvings + 1):
        x_new = prox_step(y - t * grad, t * lam)
        delta = x_new - y
        z_new = model.project(x_new)
        value = model.value(model.residual(z_new, cur.taps))
        bound = h_y + float(np.vdot(grad, delta)) + np.vdot(delta, delta) / (
            2.0 * t
        )
        if _accepts(value, float(bound)) or not np.any(delta):
            cert = StepCertificate(
                round=round_index, iteration=it, block="X", value=value,
                bound=float(bound), step=t, halvings=halvings,
            )
            _logger.debug(
                f"X step r{round_index} it{it}: h={value:.6e} "
                f"bound={float(bound):.6e} t={t:.3e}"
            )
            return x_new, z_new, settings.step_growth * t, cert
        t *= 0.5
    raise LipschitzBlowupError("X", settings.max_halvings)


def _p_step(
    model: ForwardModel,
    z: FloatArray,
    values: FloatArray,
    prev_values: FloatArray,
    box: PsfBox,
    t0: float,
    alpha: float,
    settings: SolverConfig,
    round_index: int,
    it: int,
) -> tuple[FloatArray, FloatArray, float, StepCertificate]:
    coupling = settings.coupling
    extrap = box.project(values + alpha * (values - prev_values))
    taps_z = model.taps(extrap)
    res_z = model.residual(z, taps_z)
    h_z = model.value(res_z)
    grad = tie_gradient(model.grad_params(res_z, z, extrap, box), coupling)
    t = t0
    for halvings in range(settings.max_halvings + 1):
        values_new = box.project(extrap - t * grad)
        delta = values_new - extrap
        taps_new = model.taps(values_new)
        value = model.value(model.residual(z, taps_new))
        if coupling is PsfCoupling.SHARED_SHAPE:
            inner = _tied_dot(grad, delta)
        else:
            inner = float(np.vdot(grad, delta))
        bound = h_z + inner + _p_norm2(delta, coupling) / (2.0 * t)
        if _accepts(value, bound) or not np.any(delta):
            cert = StepCertificate(
                round=round_index, iteration=it, block="p", value=value,
                bound=bound, step=t, halvings=halvings,
            )
            _logger.debug(
                f"p step r{round_index} it{it}: h={value:.6e} "
                f"bound={bound:.6e} t={t:.3e}"
            )
            return values_new, taps_new, settings.step_growth * t, cert
        t *= 0.5
    raise LipschitzBlowupError("p", settings.max_halvings)


def _tied_dot(grad: FloatArray, delta: FloatArray) -> float:
    # inner product in the free variables: amplitudes plus one shape row
    return float(
        np.dot(grad[:, 0], delta[:, 0]) + np.dot(grad[0, 1:], delta[0, 1:])
    )


# =============================================================================
# Reweighting
# =============================================================================


def first_round_penalty(
    model: ForwardModel, taps: FloatArray, scale: float, floor: float
) -> FloatArray:
    """Uniform penalty ``scale * max(D (x) L*[psi (x) R])``.

    The peak is the largest entry of the negated gradient at ``X = 0``, so
    a scale of 1 or more makes ``X = 0`` optimal for the first round.
    """
    peak = max(float(model.grad_x(model.data, taps).max()), floor)
    return np.full((model.n, model.n), scale * peak)


def reweight_penalty(
    x: FloatArray, h: float, scale: float, floor: float
) -> FloatArray:
    """``lambda_ij = C * h / (X_ij + eps)`` (``h`` floored at ``eps``)."""
    out: FloatArray = scale * max(h, floor) / (np.maximum(x, 0.0) + floor)
    return out


@log_performance
def reconstruct(
    scans: LineScanSet,
    motif: Motif,
    psf_init: PsfParams,
    settings: SolverConfig | None = None,
    workers: int | None = None,
) -> SolverResult:
    """Reconstruct the sparse map and calibrate the PSF from line scans.

    Args:
        scans: Measured line scans (possibly strided)
        motif: Motif the sample is built from
        psf_init: Starting PSF parameters; their box is the feasible set
        settings: Solver constants (defaults from :mod:`lineprobe.config`)
        workers: FFT worker count

    Returns:
        SolverResult with the final estimate and per-round diagnostics

    Raises:
        LipschitzBlowupError: If a backtracking search fails
    """
    settings = settings or SolverConfig()
    model = _model_for(scans, motif, psf_init, settings.half_width, workers)
    n = scans.geometry.n
    values = tie_values(np.asarray(psf_init.values), settings.coupling)
    values = psf_init.box.project(values)
    x = np.zeros((n, n))
    lam = first_round_penalty(
        model, model.taps(values), settings.first_round_scale, settings.floor
    )

    states: list[ReweightState] = []
    certificates: list[StepCertificate] = []
    psf = PsfParams(values=values, box=psf_init.box)
    h = model.value(model.residual(model.project(x), model.taps(values)))
    for k in range(1, settings.rounds + 1):
        if k > 1:
            lam = reweight_penalty(
                x, h, settings.reweight_scale, settings.floor
            )
        run = ipalm(model, x, psf, lam, settings, round_index=k)
        x = np.array(run.x)
        psf = PsfParams(values=run.psf_values, box=psf_init.box)
        h = run.smooth_value
        states.append(ReweightState(lam=lam, round=k, history=run.history))
        certificates.extend(run.certificates)
        _logger.info(
            f"Round {k}/{settings.rounds}: h={h:.6e}, "
            f"nonzeros={int(np.count_nonzero(x))}, restarts={run.restarts}"
        )

    return SolverResult(
        x=SparseMap(data=x),
        psf=psf,
        states=tuple(states),
        certificates=tuple(certificates),
        location_map=location_map(x, settings.location_threshold),
        smooth_value=h,
    )
