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

Synthetic linear-mixture scenes with spatially smooth abundances (Gaussian random fields)
"""

import logging
import math
from dataclasses import dataclass
from typing import Final, Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from hsi_core.cube import AbundanceMatrix, EndmemberMatrix, SpectralCube
from hsi_core.rng import NormalStream

LOGGER = logging.getLogger(__name__)

# samples of the built-in toy library
TOY_LIBRARY_SAMPLES: Final[int] = 224
TOY_LIBRARY_BASELINE: Final[float] = 0.05
# (center, width, amplitude) on a [0, 1] wavelength axis, one tuple list per spectrum
TOY_LIBRARY_PEAKS: Final[tuple[tuple[tuple[float, float, float], ...], ...]] = (
    ((0.15, 0.08, 0.80), (0.55, 0.15, 0.30)),
    ((0.35, 0.06, 0.70), (0.80, 0.10, 0.40)),
    ((0.10, 0.05, 0.20), (0.60, 0.07, 0.75), (0.95, 0.05, 0.30)),
    ((0.30, 0.12, 0.25), (0.85, 0.08, 0.80)),
)


@dataclass(frozen=True)
class SynthConfig:
    """
    Parameters of a Gaussian-field scene. snr_db None means noiseless
    """

    rows: int = 64
    cols: int = 64
    p: int = 4
    smoothness: float = 4.0
    pure_pixel_fraction: float = 0.05
    seed: int = 0
    snr_db: Optional[float] = None
    contrast: float = 1.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"Scene size must be positive. Got {self.rows}x{self.cols}")
        if self.p < 2:
            raise ValueError(f"At least 2 endmembers are needed. Got p:{self.p}")
        if not self.smoothness > 0:
            raise ValueError(f"smoothness must be > 0. Got {self.smoothness}")
        if not 0.0 <= self.pure_pixel_fraction <= 1.0:
            raise ValueError(f"pure_pixel_fraction must be in [0, 1]. Got {self.pure_pixel_fraction}")
        if not self.contrast > 0:
            raise ValueError(f"contrast must be > 0. Got {self.contrast}")


def toy_library(p: int = 4) -> EndmemberMatrix:
    """
    Smooth synthetic spectra, baseline plus a few Gaussian bumps, sampled at 224 points of [0, 1]
    """
    if not 1 <= p <= len(TOY_LIBRARY_PEAKS):
        raise ValueError(f"The built-in library holds {len(TOY_LIBRARY_PEAKS)} spectra. Requested p:{p}")
    axis = np.linspace(0.0, 1.0, TOY_LIBRARY_SAMPLES)
    spectra = np.full((TOY_LIBRARY_SAMPLES, p), TOY_LIBRARY_BASELINE)
    for k, peaks in enumerate(TOY_LIBRARY_PEAKS[:p]):
        for center, width, amplitude in peaks:
            spectra[:, k] += amplitude * np.exp(-((axis - center) ** 2) / (2.0 * width**2))
    return EndmemberMatrix(data=spectra)


def generate_abundances(cfg: SynthConfig) -> AbundanceMatrix:
    """
    One smoothed normal field per endmember, standardised, mapped per pixel through a
    softmax onto the simplex. The pixels with the largest dominant abundance are then
    snapped to pure pixels.
    """
    n_pixels = cfg.rows * cfg.cols
    fields = NormalStream(cfg.seed).normal((cfg.p, cfg.rows, cfg.cols))
    for k in range(cfg.p):
        smoothed = gaussian_filter(fields[k], sigma=cfg.smoothness, mode="reflect", truncate=3.0)
        spread = smoothed.std()
        # a 1x1 scene has no spread
        fields[k] = (smoothed - smoothed.mean()) / spread if spread > 0 else 0.0

    logits = cfg.contrast * fields.reshape(cfg.p, n_pixels)
    logits -= logits.max(axis=0, keepdims=True)
    weights = np.exp(logits)
    abundances = weights / weights.sum(axis=0, keepdims=True)

    n_pure = math.ceil(cfg.pure_pixel_fraction * n_pixels)
    if n_pure > 0:
        dominant = abundances.max(axis=0)
        # stable sort keeps the lowest pixel index first among ties
        pure_pixels = np.argsort(-dominant, kind="stable")[:n_pure]
        winners = abundances[:, pure_pixels].argmax(axis=0)
        abundances[:, pure_pixels] = 0.0
        abundances[winners, pure_pixels] = 1.0

    abundances /= abundances.sum(axis=0, keepdims=True)
    LOGGER.debug("Generated %sx%s abundances for %s endmembers with %s pure pixels", cfg.rows, cfg.cols, cfg.p, n_pure)
    return AbundanceMatrix(data=abundances, simplex=True)


def mix(
    endmembers: EndmemberMatrix, abundances: AbundanceMatrix, rows: Optional[int] = None, cols: Optional[int] = None
) -> SpectralCube:
    """
    Noiseless linear mixture R = EA. Without a spatial shape the scene is a single row
    """
    if endmembers.count != abundances.count:
        raise ValueError(f"Endmember count {endmembers.count} does not match abundance rows {abundances.count}")
    if rows is None or cols is None:
        rows, cols = 1, abundances.pixels
    return SpectralCube(rows=rows, cols=cols, data=endmembers.data @ abundances.data, allow_negative=False)


def noise_sigma(cube: SpectralCube, snr_db: float) -> float:
    """
    Standard deviation giving the target SNR on the mean signal power ||R||_F^2 / (L*N)
    """
    power = float(np.sum(cube.data**2)) / cube.data.size
    return math.sqrt(power / 10.0 ** (snr_db / 10.0))


def add_noise(cube: SpectralCube, snr_db: float, seed: int | tuple[int, ...]) -> SpectralCube:
    """
    Adds i.i.d. zero-mean Gaussian noise at the target SNR. snr_db = +inf returns the cube unchanged
    """
    if cube.data.size == 0:
        raise ValueError("Cannot add noise to an empty cube")
    if math.isinf(snr_db) and snr_db > 0:
        return cube
    if math.isnan(snr_db):
        raise ValueError("snr_db must not be NaN")
    sigma = noise_sigma(cube, snr_db)
    noise = sigma * NormalStream(seed).normal(cube.data.shape)
    LOGGER.debug("Adding noise with sigma %s for SNR %s dB", sigma, snr_db)
    return SpectralCube(rows=cube.rows, cols=cube.cols, data=cube.data + noise, allow_negative=True)


def measured_snr_db(clean: SpectralCube, noisy: SpectralCube) -> float:
    """
    10 log10(||R||^2 / ||R_noisy - R||^2)
    """
    residual = float(np.sum((noisy.data - clean.data) ** 2))
    if residual == 0:
        return math.inf
    return 10.0 * math.log10(float(np.sum(clean.data**2)) / residual)


def noise_seed(seed: int, snr_db: float) -> tuple[int, int]:
    """
    Per-SNR noise seed, independent of the order in which SNRs are requested
    """
    return seed, round(snr_db * 1000) & 0xFFFFFFFF
