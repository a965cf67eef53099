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

Trend checks of the benchmark harness on the full-size synthetic grid: the denoiser prior must
help at low SNR, must not hurt at high SNR, and the RMSE curves must settle
"""

import pandas as pd
import pytest

from hsi_core.synth import SynthConfig
from pnmf_cli.bench import bench_grid, run_bench

GRID_SCENE = SynthConfig(rows=64, cols=64, p=4)
GRID_SNRS = [5.0, 10.0, 30.0]
GRID_SEEDS = [0, 1, 2]
SHIPPED_DENOISERS = ["gaussian", "median", "nlm", "tv"]


@pytest.fixture(scope="module")
def grid_means() -> pd.DataFrame:
    """
    Mean RMSE and PSNR over the seeds, indexed by (denoiser, snr_db)
    """
    frame, _ = run_bench(bench_grid(GRID_SNRS, ["none", "nlm", "tv"], GRID_SEEDS), GRID_SCENE, {}, n_jobs=-1)
    assert frame["rmse"].notna().all(), "Every cell must be scored against the truth"
    return frame.groupby(["denoiser", "snr_db"])[["rmse", "psnr_db"]].mean()


@pytest.mark.integrationtest
@pytest.mark.timeout(1800)
@pytest.mark.parametrize("snr_db", [5.0, 10.0])
@pytest.mark.parametrize("denoiser", ["nlm", "tv"])
def test_prior_beats_baseline_at_low_snr(grid_means: pd.DataFrame, denoiser: str, snr_db: float):
    baseline = grid_means.loc[("none", snr_db)]
    prior = grid_means.loc[(denoiser, snr_db)]
    assert prior["rmse"] < baseline["rmse"], f"{denoiser} RMSE {prior['rmse']} vs baseline {baseline['rmse']} at {snr_db} dB"
    assert prior["psnr_db"] > baseline["psnr_db"], (
        f"{denoiser} PSNR {prior['psnr_db']} vs baseline {baseline['psnr_db']} at {snr_db} dB"
    )
    if snr_db == 5.0:
        gain = 1.0 - prior["rmse"] / baseline["rmse"]
        assert gain >= 0.10, f"{denoiser} improves RMSE by {gain:.1%} at 5 dB, at least 10% expected"


@pytest.mark.integrationtest
@pytest.mark.timeout(1800)
def test_prior_does_not_hurt_at_high_snr(grid_means: pd.DataFrame):
    baseline = grid_means.loc[("none", 30.0), "rmse"]
    prior = grid_means.loc[("nlm", 30.0), "rmse"]
    assert prior <= 1.1 * baseline, f"NLM RMSE {prior} exceeds 1.1 x baseline {baseline} at 30 dB"


@pytest.mark.integrationtest
@pytest.mark.timeout(1800)
def test_rmse_settles_over_last_iterations():
    cells = bench_grid([5.0], SHIPPED_DENOISERS, [0])
    _, results = run_bench(cells, GRID_SCENE, {"max_iters": 300, "rel_tol": 0.0}, n_jobs=-1)
    for result in results:
        curve = result.rmse_curve
        assert len(curve) == 300, f"{result.cell.denoiser} ran {len(curve)} iterations"
        change = abs(curve[-1] - curve[-21]) / curve[-21]
        assert change < 0.01, f"{result.cell.denoiser} RMSE moved by {change:.2%} over the last 20 iterations"
