"""*******************************************************************************
* Copyright (c) 2024 PNMF contributors
*
* All rights reserved. This program and the accompanying materials
* are made available under the terms of MIT and  is provided "as is",
* without warranty of any kind, express or implied, including but
* not limited to the warranties of merchantability, fitness for a
* particular purpose and noninfringement. In no event shall the
* authors, contributors or copyright holders be liable for any claim,
* damages or other liability, whether in an action of contract,
* tort or otherwise, arising from, out of or in connection with the software
* or the use or other dealings in the software.
*
* Contributors:
*    -
*******************************************************************************

Alternating multiplicative-update solver for blind unmixing with a plug-and-play denoiser prior.

The tracked objective of (E, A, A~) is
    1/2 ||R - EA||_F^2 + alpha ||A||_2,1 + lambda/2 ||A - A~||_F^2
With noise_scaled_split on, lambda and mu are given in units of the noise variance of the cube:
both are multiplied by the variance estimated from the cube before the first iteration.
The prior on A~ has no closed form and lives inside the denoiser call.
Each iteration updates E, then A on the sum-to-one augmented system, then A~ = Denoiser(A, sqrt(mu/lambda)).
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from hsi_core.cube import AbundanceMatrix, EndmemberMatrix, SpectralCube, reshape_to_cube, reshape_to_matrix
from hsi_core.metrics import align, rmse
from pnmf.denoisers import DenoiseRequest, DenoiserKind, DenoiserSpec, denoise
from pnmf.endmember_init import estimate_noise_variance, fcls, vca
from pnmf.engine_config import MAX_EPS_GUARD, EngineDefaults

LOGGER = logging.getLogger(__name__)

# floor of the previous objective in the relative change test
_OBJECTIVE_FLOOR = 1e-30

# smallest noise variance used to scale lambda and mu, keeps lambda > 0 on noiseless cubes
NOISE_VARIANCE_FLOOR = 1e-12


def _default_denoiser() -> DenoiserSpec:
    return DenoiserSpec(kind=DenoiserKind.parse(EngineDefaults.denoiser))


@dataclass(frozen=True)
class UnmixConfig:
    """
    Parameters of one unmixing run. Defaults come from EngineDefaults
    """

    p: int
    alpha: float = EngineDefaults.alpha
    lam: float = EngineDefaults.lam
    mu: float = EngineDefaults.mu
    delta: float = EngineDefaults.delta
    max_iters: int = EngineDefaults.max_iters
    rel_tol: float = EngineDefaults.rel_tol
    denoiser: DenoiserSpec = field(default_factory=_default_denoiser)
    eps_guard: float = EngineDefaults.eps_guard
    seed: int = EngineDefaults.seed
    clamp_negative: bool = EngineDefaults.clamp_negative
    stall_window: int = EngineDefaults.stall_window
    noise_scaled_split: bool = EngineDefaults.noise_scaled_split

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1. Got {self.p}")
        for name in ("alpha", "lam", "mu", "delta", "rel_tol", "eps_guard"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite. Got {value}")
        for name in ("alpha", "lam", "mu", "rel_tol"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0. Got {getattr(self, name)}")
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0. Got {self.delta}")
        if not 0 < self.eps_guard <= MAX_EPS_GUARD:
            raise ValueError(f"eps_guard must be in (0, {MAX_EPS_GUARD}]. Got {self.eps_guard}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0. Got {self.max_iters}")
        if self.stall_window < 1:
            raise ValueError(f"stall_window must be >= 1. Got {self.stall_window}")
        if self.mu > 0 and self.lam == 0:
            raise ValueError("lambda must be > 0 when mu > 0, the prior noise level is sqrt(mu / lambda)")

    @property
    def prior_sigma(self) -> float:
        """
        Noise level handed to the denoiser, sqrt(mu / lambda). 0 when the prior is off
        """
        return 0.0 if self.mu == 0 else math.sqrt(self.mu / self.lam)

    def in_noise_units(self, noise_variance: float) -> "UnmixConfig":
        """
        Copy with lambda and mu multiplied by the noise variance and the scaling switched off.
        prior_sigma is unchanged
        """
        if not (math.isfinite(noise_variance) and noise_variance >= 0):
            raise ValueError(f"Noise variance must be finite and >= 0. Got {noise_variance}")
        scale = max(noise_variance, NOISE_VARIANCE_FLOOR)
        return replace(self, lam=self.lam * scale, mu=self.mu * scale, noise_scaled_split=False)

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "alpha": self.alpha,
            "lambda": self.lam,
            "mu": self.mu,
            "delta": self.delta,
            "max_iters": self.max_iters,
            "rel_tol": self.rel_tol,
            "stall_window": self.stall_window,
            "eps_guard": self.eps_guard,
            "seed": self.seed,
            "clamp_negative": self.clamp_negative,
            "noise_scaled_split": self.noise_scaled_split,
            "denoiser": self.denoiser.as_dict(),
        }


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """
    Terms of the tracked objective. sum_to_one is the penalty 1/2 delta^2 ||1^T A - 1^T||^2 carried by the
    augmented rows, reported next to the objective but not part of it
    """

    data_fit: float
    l21: float
    split: float
    sum_to_one: float = 0.0

    @property
    def total(self) -> float:
        return self.data_fit + self.l21 + self.split

    @property
    def augmented_fit(self) -> float:
        """
        1/2 ||Rf - Ef A||^2, the fit the abundance update descends on
        """
        return self.data_fit + self.sum_to_one


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    objective: float
    data_fit: float
    l21: float
    split: float
    sum_to_one: float
    rmse: Optional[float]
    seconds: float

    @property
    def augmented_fit(self) -> float:
        return self.data_fit + self.sum_to_one


@dataclass
class RunTrace:
    """
    One record per executed iteration
    """

    records: list[TraceRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: TraceRecord):
        self.records.append(record)

    def as_rows(self) -> list[dict]:
        return [
            {
                "iter": record.iter,
                "objective": record.objective,
                "data_fit": record.data_fit,
                "l21": record.l21,
                "split": record.split,
                "sum_to_one": record.sum_to_one,
                "rmse": record.rmse,
                "seconds": record.seconds,
            }
            for record in self.records
        ]

    def rmse_curve(self) -> list[float]:
        return [record.rmse for record in self.records if record.rmse is not None]


@dataclass(frozen=True, eq=False)
class RunTruth:
    """
    Optional ground truth used to trace RMSE per iteration
    """

    endmembers: EndmemberMatrix
    abundances: AbundanceMatrix

    def __post_init__(self):
        if self.endmembers.count != self.abundances.count:
            raise ValueError(
                f"Truth has {self.endmembers.count} endmembers but {self.abundances.count} abundance rows"
            )

    def abundance_rmse(self, endmembers: np.ndarray, abundances: np.ndarray) -> float:
        """
        RMSE of the abundances after the estimate is aligned on the truth by spectral angle
        """
        alignment = align(endmembers, self.endmembers)
        return rmse(alignment.reorder_rows(abundances), self.abundances)


@dataclass(frozen=True, eq=False)
class EngineState:
    e: EndmemberMatrix
    a: AbundanceMatrix
    a_tilde: AbundanceMatrix
    iter: int
    trace: RunTrace
    # variance lambda and mu were scaled by, None when they were used as given
    noise_variance: Optional[float] = None


def _check_finite(name: str, values: np.ndarray, iteration: int):
    if not np.all(np.isfinite(values)):
        raise FloatingPointError(f"Non-finite values in {name} at iteration {iteration}")


def objective(r: np.ndarray, e: np.ndarray, a: np.ndarray, a_tilde: np.ndarray, cfg: UnmixConfig) -> ObjectiveBreakdown:
    """
    The three explicit terms of the tracked objective, plus the sum-to-one penalty of the augmented rows
    """
    if not all(np.all(np.isfinite(matrix)) for matrix in (r, e, a, a_tilde)):
        raise ValueError("Objective inputs contain non-finite values")
    if e.shape[0] != r.shape[0] or a.shape != (e.shape[1], r.shape[1]) or a_tilde.shape != a.shape:
        raise ValueError(f"Inconsistent dimensions: R {r.shape}, E {e.shape}, A {a.shape}, A~ {a_tilde.shape}")
    data_fit = 0.5 * float(np.sum((r - e @ a) ** 2))
    l21 = cfg.alpha * float(np.sum(np.linalg.norm(a, axis=1)))
    split = 0.5 * cfg.lam * float(np.sum((a - a_tilde) ** 2))
    sum_to_one = 0.5 * cfg.delta**2 * float(np.sum((a.sum(axis=0) - 1.0) ** 2))
    return ObjectiveBreakdown(data_fit=data_fit, l21=l21, split=split, sum_to_one=sum_to_one)


def endmember_update_terms(r: np.ndarray, e: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Numerator RA^T and denominator EAA^T of the endmember update.
    denominator - numerator is the gradient of the data fit in E
    """
    return r @ a.T, e @ (a @ a.T)


def update_endmembers(r: np.ndarray, e: np.ndarray, a: np.ndarray, eps_guard: float) -> np.ndarray:
    """
    E <- E * max(RA^T, 0) / (EAA^T + eps)
    """
    numerator, denominator = endmember_update_terms(r, e, a)
    return e * np.maximum(numerator, 0.0) / (denominator + eps_guard)


def augment_asc(r: np.ndarray, e: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Appends a row of delta to R and E so that least squares on the pair
    penalises abundance columns that do not sum to one
    """
    if not (math.isfinite(delta) and delta > 0):
        raise ValueError(f"delta must be finite and > 0. Got {delta}")
    r_f = np.vstack((r, np.full((1, r.shape[1]), delta)))
    e_f = np.vstack((e, np.full((1, e.shape[1]), delta)))
    return r_f, e_f


def row_norm_diag(a: np.ndarray, eps_guard: float) -> np.ndarray:
    """
    Reweighting of the l2,1 term: d_i = 1 / (||A_i||_2 + eps)
    """
    return 1.0 / (np.linalg.norm(a, axis=1) + eps_guard)


def abundance_update_terms(
    r_f: np.ndarray, e_f: np.ndarray, a: np.ndarray, a_tilde: np.ndarray, cfg: UnmixConfig
) -> tuple[np.ndarray, np.ndarray]:
    """
    Numerator Ef^T Rf + lambda A~ and denominator Ef^T Ef A + lambda A + alpha D A of the abundance update
    """
    weights = row_norm_diag(a, cfg.eps_guard)
    numerator = e_f.T @ r_f + cfg.lam * a_tilde
    denominator = (e_f.T @ e_f) @ a + cfg.lam * a + cfg.alpha * weights[:, np.newaxis] * a
    return numerator, denominator


def update_abundances(r_f: np.ndarray, e_f: np.ndarray, a: np.ndarray, a_tilde: np.ndarray, cfg: UnmixConfig) -> np.ndarray:
    numerator, denominator = abundance_update_terms(r_f, e_f, a, a_tilde, cfg)
    return a * np.maximum(numerator, 0.0) / (denominator + cfg.eps_guard)


def apply_prior(a: np.ndarray, cfg: UnmixConfig, rows: int, cols: int, iteration: int = 0) -> np.ndarray:
    """
    New A~: the abundance maps denoised at sigma_n = sqrt(mu / lambda), negatives clamped to 0.
    mu = 0 switches the prior off and returns A
    """
    if cfg.mu == 0:
        return a.copy()
    try:
        denoised = denoise(cfg.denoiser, DenoiseRequest(maps=reshape_to_cube(a, rows, cols), sigma=cfg.prior_sigma))
    except Exception as ex:
        raise RuntimeError(f"Denoiser {cfg.denoiser.kind.value} failed at iteration {iteration}") from ex
    return np.maximum(reshape_to_matrix(denoised), 0.0)


def _initial_state(cube: SpectralCube, cfg: UnmixConfig) -> tuple[np.ndarray, np.ndarray]:
    try:
        extracted = vca(cube, cfg.p, cfg.seed)
        abundances = fcls(cube, extracted.endmembers, cfg.delta)
    except ValueError as ex:
        raise ValueError(f"Initialisation failed: {ex}") from ex
    LOGGER.debug("Initialised from pixels %s with %s projection", extracted.indices.tolist(), extracted.projection_mode)
    return np.array(extracted.endmembers.data), np.array(abundances.data)


def run_unmixing(
    cube: SpectralCube, cfg: UnmixConfig, truth: Optional[RunTruth] = None
) -> tuple[EngineState, RunTrace]:
    """
    VCA + FCLS initialisation followed by alternating updates until max_iters, or until the
    relative objective change stays below rel_tol for stall_window consecutive iterations.
    Traced objectives are in data units, after any noise scaling of lambda and mu
    """
    if cfg.p > min(cube.bands, cube.pixels):
        raise ValueError(f"p:{cfg.p} exceeds min(bands, pixels) = {min(cube.bands, cube.pixels)}")
    if truth is not None and (truth.endmembers.bands != cube.bands or truth.abundances.pixels != cube.pixels):
        raise ValueError("Truth dimensions do not match the cube")
    if truth is not None and truth.endmembers.count != cfg.p:
        raise ValueError(f"Truth holds {truth.endmembers.count} endmembers but p:{cfg.p}")
    if cfg.clamp_negative:
        cube = cube.clamped()
    noise_variance = None
    if cfg.noise_scaled_split:
        noise_variance = estimate_noise_variance(cube, cfg.p)
        cfg = cfg.in_noise_units(noise_variance)
        LOGGER.info("Estimated noise variance %s, lambda %s and mu %s in data units", noise_variance, cfg.lam, cfg.mu)

    r = cube.data
    e, a = _initial_state(cube, cfg)
    a_tilde = a.copy()
    r_f, _ = augment_asc(r, e, cfg.delta)
    previous = objective(r, e, a, a_tilde, cfg).total
    trace = RunTrace()
    stalled = 0
    reason = "max_iters reached"
    iteration = 0
    for iteration in range(1, cfg.max_iters + 1):
        started = time.perf_counter()
        e = update_endmembers(r, e, a, cfg.eps_guard)
        _check_finite("E", e, iteration)
        _, e_f = augment_asc(r, e, cfg.delta)
        a = update_abundances(r_f, e_f, a, a_tilde, cfg)
        _check_finite("A", a, iteration)
        a_tilde = apply_prior(a, cfg, cube.rows, cube.cols, iteration)
        _check_finite("A~", a_tilde, iteration)

        terms = objective(r, e, a, a_tilde, cfg)
        current = terms.total
        error = truth.abundance_rmse(e, a) if truth is not None else None
        trace.append(
            TraceRecord(
                iter=iteration,
                objective=current,
                data_fit=terms.data_fit,
                l21=terms.l21,
                split=terms.split,
                sum_to_one=terms.sum_to_one,
                rmse=error,
                seconds=time.perf_counter() - started,
            )
        )
        LOGGER.debug(
            "iter %s objective %s (fit %s, l21 %s, split %s, sum-to-one %s) rmse %s",
            iteration,
            current,
            terms.data_fit,
            terms.l21,
            terms.split,
            terms.sum_to_one,
            error,
        )

        change = abs(current - previous) / max(previous, _OBJECTIVE_FLOOR)
        stalled = stalled + 1 if change < cfg.rel_tol else 0
        previous = current
        if stalled >= cfg.stall_window:
            reason = f"relative change below {cfg.rel_tol} for {cfg.stall_window} iterations"
            break

    LOGGER.info("Unmixing stopped after %s iterations: %s", iteration, reason)
    state = EngineState(
        e=EndmemberMatrix(data=e),
        a=AbundanceMatrix(data=a),
        a_tilde=AbundanceMatrix(data=a_tilde),
        iter=iteration,
        trace=trace,
        noise_variance=noise_variance,
    )
    return state, trace
