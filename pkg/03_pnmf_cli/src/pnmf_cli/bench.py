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

Benchmark harness: scores unmixing results against the truth, runs the SNR x denoiser grid
on synthetic scenes and the one-parameter sensitivity sweep. Cells are independent and are
fanned out with joblib.
"""

import logging
import math
import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Final, Literal, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from hsi_core.cube import AbundanceMatrix, EndmemberMatrix, SpectralCube
from hsi_core.metrics import align, psnr, reconstruction_error, rmse
from hsi_core.synth import SynthConfig, add_noise, generate_abundances, mix, noise_seed, toy_library
from pnmf.denoisers import DenoiserKind, DenoiserSpec
from pnmf.engine import RunTruth, UnmixConfig, run_unmixing

LOGGER = logging.getLogger(__name__)

RESULT_COLUMNS: Final[tuple[str, ...]] = (
    "method",
    "denoiser",
    "snr_db",
    "seed",
    "rmse",
    "sad_deg",
    "psnr_db",
    "re",
    "iters",
    "seconds",
)
SWEEP_COLUMNS: Final[tuple[str, ...]] = ("param", "value", "rmse", "sad_deg", "psnr_db", "re", "iters")
METRIC_COLUMNS: Final[tuple[str, ...]] = ("rmse", "sad_deg", "psnr_db", "re", "iters")
# sweep parameter name -> UnmixConfig field
SWEEP_PARAMS: Final[dict[str, str]] = {"alpha": "alpha", "lambda": "lam", "mu": "mu"}
BASELINE_METHOD: Final[str] = "NMF-L21"


def method_name(cfg: UnmixConfig) -> str:
    """
    NMF-L21 for runs without a prior, PNMF-<DENOISER> otherwise
    """
    if cfg.mu == 0 or cfg.denoiser.kind is DenoiserKind.IDENTITY:
        return BASELINE_METHOD
    return f"PNMF-{cfg.denoiser.kind.value.upper()}"


def denoiser_label(cfg: UnmixConfig) -> str:
    return "none" if cfg.denoiser.kind is DenoiserKind.IDENTITY else cfg.denoiser.kind.value


def score(
    endmembers: EndmemberMatrix | np.ndarray,
    abundances: AbundanceMatrix | np.ndarray,
    truth: Optional[RunTruth] = None,
    cube: Optional[SpectralCube] = None,
    normalizer: Literal["np", "nl"] = "np",
) -> dict[str, Optional[float]]:
    """
    Aligned RMSE, mean SAD in degrees and PSNR when a truth is given, RE when the observed cube is given.
    Metrics that cannot be computed are None
    """
    result: dict[str, Optional[float]] = {"rmse": None, "sad_deg": None, "psnr_db": None, "re": None}
    if truth is not None:
        alignment = align(endmembers, truth.endmembers)
        aligned = alignment.reorder_rows(abundances)
        result["rmse"] = rmse(aligned, truth.abundances)
        result["sad_deg"] = math.degrees(alignment.mean_sad)
        result["psnr_db"] = psnr(aligned, truth.abundances)
    if cube is not None:
        result["re"] = reconstruction_error(cube, endmembers, abundances, normalizer)
    return result


@dataclass(frozen=True, eq=False)
class Scene:
    clean: SpectralCube
    noisy: SpectralCube
    truth: RunTruth


def make_scene(synth_cfg: SynthConfig) -> Scene:
    """
    Toy-library scene of the config. Noise is drawn from noise_seed(seed, snr) so every SNR of
    a seed sees the same abundances and independent noise
    """
    library = toy_library(synth_cfg.p)
    abundances = generate_abundances(synth_cfg)
    clean = mix(library, abundances, synth_cfg.rows, synth_cfg.cols)
    noisy = clean
    if synth_cfg.snr_db is not None:
        noisy = add_noise(clean, synth_cfg.snr_db, noise_seed(synth_cfg.seed, synth_cfg.snr_db))
    return Scene(clean=clean, noisy=noisy, truth=RunTruth(endmembers=library, abundances=abundances))


def cell_config(p: int, denoiser: str, engine_params: Mapping[str, Any]) -> UnmixConfig:
    """
    Engine config of one grid cell. The 'none' denoiser is the baseline and runs with mu = 0
    """
    spec = DenoiserSpec(kind=DenoiserKind.parse(denoiser))
    params = dict(engine_params)
    if spec.kind is DenoiserKind.IDENTITY:
        params["mu"] = 0.0
    return UnmixConfig(p=p, denoiser=spec, **params)


@dataclass(frozen=True)
class BenchCell:
    snr_db: float
    denoiser: str
    seed: int


@dataclass(frozen=True, eq=False)
class CellResult:
    cell: BenchCell
    row: dict[str, Any]
    rmse_curve: list[float]


def bench_grid(snrs: Sequence[float], denoisers: Sequence[str], seeds: Sequence[int]) -> list[BenchCell]:
    """
    Cells ordered by seed, then SNR, then denoiser
    """
    if not snrs or not denoisers or not seeds:
        raise ValueError("The benchmark grid needs at least one SNR, one denoiser and one seed")
    for name in denoisers:
        DenoiserKind.parse(name)
    return [BenchCell(snr_db=float(snr), denoiser=name, seed=seed) for seed in seeds for snr in snrs for name in denoisers]


def run_cell(
    cell: BenchCell, synth_cfg: SynthConfig, engine_params: Mapping[str, Any], record_timing: bool = False
) -> CellResult:
    scene = make_scene(replace(synth_cfg, seed=cell.seed, snr_db=cell.snr_db))
    cfg = cell_config(synth_cfg.p, cell.denoiser, engine_params)
    started = time.perf_counter()
    state, trace = run_unmixing(scene.noisy, cfg, scene.truth)
    seconds = time.perf_counter() - started
    row = {
        "method": method_name(cfg),
        "denoiser": denoiser_label(cfg),
        "snr_db": cell.snr_db,
        "seed": cell.seed,
        **score(state.e, state.a, scene.truth, scene.noisy),
        "iters": state.iter,
        "seconds": seconds if record_timing else None,
    }
    LOGGER.info("%s at %s dB seed %s: rmse %s", row["method"], cell.snr_db, cell.seed, row["rmse"])
    return CellResult(cell=cell, row=row, rmse_curve=trace.rmse_curve())


def run_bench(
    cells: Sequence[BenchCell],
    synth_cfg: SynthConfig,
    engine_params: Mapping[str, Any],
    n_jobs: int = 1,
    record_timing: bool = False,
) -> tuple[pd.DataFrame, list[CellResult]]:
    """
    Runs every cell. Rows come back in the order of the cells whatever the number of workers
    """
    LOGGER.info("Running %s benchmark cells with n_jobs=%s", len(cells), n_jobs)
    results = Parallel(n_jobs=n_jobs)(
        delayed(run_cell)(cell, synth_cfg, dict(engine_params), record_timing) for cell in cells
    )
    frame = pd.DataFrame([result.row for result in results], columns=list(RESULT_COLUMNS))
    return frame, results


def summarize(frame: pd.DataFrame) -> pd.DataFrame:
    """
    Mean and standard deviation of every metric over the seeds of a (method, denoiser, snr) cell
    """
    keys = ["method", "denoiser", "snr_db"]
    grouped = frame.groupby(keys, sort=False)
    stats = grouped[list(METRIC_COLUMNS)].agg(["mean", "std"])
    stats.columns = [f"{metric}_{stat}" for metric, stat in stats.columns]
    stats.insert(0, "runs", grouped.size())
    return stats.reset_index()


def _sweep_point(scene: Scene, cfg: UnmixConfig, param: str, value: float) -> dict[str, Any]:
    state, _ = run_unmixing(scene.noisy, cfg, scene.truth)
    return {"param": param, "value": value, **score(state.e, state.a, scene.truth, scene.noisy), "iters": state.iter}


def run_sweep(
    param: str,
    values: Sequence[float],
    synth_cfg: SynthConfig,
    denoiser: str,
    engine_params: Mapping[str, Any],
    n_jobs: int = 1,
) -> pd.DataFrame:
    """
    Runs one scene once per value of 'alpha', 'lambda' or 'mu', every other parameter fixed
    """
    if param not in SWEEP_PARAMS:
        raise ValueError(f"Cannot sweep '{param}'. Valid parameters: {sorted(SWEEP_PARAMS)}")
    if not values:
        raise ValueError("A sweep needs at least one value")
    scene = make_scene(synth_cfg)
    spec = DenoiserSpec(kind=DenoiserKind.parse(denoiser))
    configs = [
        UnmixConfig(p=synth_cfg.p, denoiser=spec, **{**engine_params, SWEEP_PARAMS[param]: float(value)}) for value in values
    ]
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_sweep_point)(scene, cfg, param, float(value)) for cfg, value in zip(configs, values, strict=True)
    )
    return pd.DataFrame(rows, columns=list(SWEEP_COLUMNS))


def write_table(frame: pd.DataFrame, path: Path | str):
    """
    CSV with '\\n' line ends and 10 significant digits, empty cells for missing values
    """
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.10g")
