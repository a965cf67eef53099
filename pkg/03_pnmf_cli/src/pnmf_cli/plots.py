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

Plot files: abundance maps as grayscale PPM images with a sidecar scale file, and line
charts (spectra, convergence, sweeps) as standalone SVG. Figures are built without pyplot
so nothing is ever displayed.
"""

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Final, Optional

import matplotlib
import numpy as np
from matplotlib.axes import Axes
from matplotlib.figure import Figure
from PIL import Image

from pnmf_cli.cli_config import PlotConfig

matplotlib.use("Agg")

LOGGER = logging.getLogger(__name__)

# gray level of a map whose values are all equal
DEGENERATE_GRAY: Final[int] = 128
DEGENERATE_NOTE: Final[str] = "degenerate scale: the map is constant and is drawn as uniform gray"


@dataclass(frozen=True)
class MapScale:
    low: float
    high: float

    @property
    def degenerate(self) -> bool:
        return self.high <= self.low

    def describe(self) -> str:
        lines = [f"min {self.low:.17g}", f"max {self.high:.17g}"]
        if self.degenerate:
            lines.append(DEGENERATE_NOTE)
        return "\n".join(lines) + "\n"


def to_gray(values: np.ndarray) -> tuple[np.ndarray, MapScale]:
    """
    Min-max scales a 2-D map onto 0..255
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.size == 0:
        raise ValueError(f"An abundance map must be a non empty 2-D array. Got shape:{values.shape}")
    scale = MapScale(low=float(values.min()), high=float(values.max()))
    if scale.degenerate:
        return np.full(values.shape, DEGENERATE_GRAY, dtype=np.uint8), scale
    gray = np.rint(255.0 * (values - scale.low) / (scale.high - scale.low))
    return gray.astype(np.uint8), scale


def write_abundance_map(values: np.ndarray, path: Path | str) -> MapScale:
    """
    Writes the map as a binary PPM with equal channels, and its scale next to it in a .txt file
    """
    path = Path(path)
    gray, scale = to_gray(values)
    Image.fromarray(np.repeat(gray[:, :, np.newaxis], 3, axis=2)).save(path, format="PPM")
    path.with_suffix(".txt").write_text(scale.describe(), encoding="utf-8")
    if scale.degenerate:
        LOGGER.info("%s is constant at %s", path.name, scale.low)
    return scale


def _new_figure(title: str, xlabel: str, ylabel: str) -> tuple[Figure, Axes]:
    figure = Figure(figsize=(PlotConfig.width, PlotConfig.height))
    axes = figure.add_subplot()
    axes.set_title(title)
    axes.set_xlabel(xlabel)
    axes.set_ylabel(ylabel)
    axes.grid(visible=True, alpha=0.3)
    return figure, axes


def save_svg(figure: Figure, path: Path | str):
    """
    Writes the figure without a date and with stable element ids, so reruns are byte identical
    """
    with matplotlib.rc_context({"svg.hashsalt": PlotConfig.hashsalt}):
        figure.savefig(path, format="svg", metadata={"Date": None})


def spectra_chart(
    endmembers: np.ndarray, truth: Optional[np.ndarray] = None, perm: Optional[Sequence[int]] = None
) -> Figure:
    """
    Estimated spectra in blue. With a truth, truth spectrum perm[k] is overlaid in red on estimate k
    """
    endmembers = np.asarray(endmembers, dtype=np.float64)
    figure, axes = _new_figure("Endmember spectra", "band", "reflectance")
    bands = np.arange(1, endmembers.shape[0] + 1)
    for k in range(endmembers.shape[1]):
        axes.plot(bands, endmembers[:, k], color=PlotConfig.estimate_color, label="estimate" if k == 0 else None)
        if truth is not None:
            match = k if perm is None else int(perm[k])
            axes.plot(
                bands, truth[:, match], color=PlotConfig.truth_color, linestyle="--", label="truth" if k == 0 else None
            )
    if endmembers.shape[1] > 0:
        axes.legend()
    return figure


def convergence_chart(curves: Mapping[str, Sequence[float]], ylabel: str, title: str = "Convergence") -> Figure:
    """
    One line per named curve, plotted against iterations 1..K
    """
    figure, axes = _new_figure(title, "iteration", ylabel)
    for label, curve in curves.items():
        axes.plot(np.arange(1, len(curve) + 1), np.asarray(curve, dtype=np.float64), label=label)
    if len(curves) > 1:
        axes.legend()
    return figure


def sweep_chart(param: str, values: Sequence[float], rmse: Sequence[float]) -> Figure:
    figure, axes = _new_figure(f"Sensitivity to {param}", param, "abundance RMSE")
    axes.plot(values, rmse, marker="o")
    if len(values) > 0 and min(values) > 0:
        axes.set_xscale("log")
    return figure
