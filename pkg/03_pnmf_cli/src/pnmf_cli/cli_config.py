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

Configuration reader for the command line: output root, scene defaults, benchmark grid and plots
"""

import logging
from pathlib import Path

import psutil
from dynaconf import Dynaconf

# Logger
LOGGER = logging.getLogger(__name__)

current_folder = Path(__file__).resolve()

settings = Dynaconf(
    envvar_prefix="PNMF",
    root_path=current_folder,
    settings_files=["../../conf/settings.yaml", "../../conf/.secrets.yaml"],
)
# `envvar_prefix` = export envvars with `export PNMF_OUTPUT__ROOT=/tmp/runs`.
# `settings_files` = Load these files in the order.


def parse_size(size: str) -> tuple[int, int]:
    """
    Parses 'ROWSxCOLS' e.g. '64x64'
    """
    rows, separator, cols = str(size).lower().partition("x")
    try:
        parsed = (int(rows), int(cols))
    except ValueError:
        parsed = (0, 0)
    if not separator or min(parsed) < 1:
        raise ValueError(f"Scene size must look like ROWSxCOLS with positive integers. Got '{size}'")
    return parsed


class OutputConfig:
    """
    Where the commands write when no output directory is given
    """

    root: Path = Path(settings.get("output.root", "runs"))


class SynthDefaults:
    """
    Default scene parameters of 'synth', 'bench' and 'sweep'
    """

    size: str = str(settings.get("synth.size", "64x64"))
    p: int = int(settings.get("synth.p", 4))
    smoothness: float = float(settings.get("synth.smoothness", 4.0))
    pure_pixel_fraction: float = float(settings.get("synth.pure_pixel_fraction", 0.05))
    contrast: float = float(settings.get("synth.contrast", 1.0))
    seed: int = int(settings.get("synth.seed", 0))

    try:
        parse_size(size)
    except ValueError:
        LOGGER.error("Invalid value for 'synth.size':%s. Update '../../conf/settings.yaml'", size)

    @classmethod
    def is_config_valid(cls) -> bool:
        try:
            parse_size(cls.size)
        except ValueError:
            return False
        return cls.p >= 2 and cls.smoothness > 0 and 0 <= cls.pure_pixel_fraction <= 1 and cls.contrast > 0


class BenchDefaults:
    """
    The SNR x denoiser grid of 'bench'
    """

    snrs: list[float] = [float(snr) for snr in settings.get("bench.snrs", [5, 10, 20, 30])]
    denoisers: list[str] = [str(name) for name in settings.get("bench.denoisers", ["none", "gaussian", "median", "nlm", "tv"])]
    repeat: int = int(settings.get("bench.repeat", 1))
    # physical cores, the solver is bound by BLAS and the NLM loops
    n_jobs: int = int(settings.get("bench.n_jobs", psutil.cpu_count(logical=False) or 1))
    record_timing: bool = bool(settings.get("bench.record_timing", False))

    if repeat < 1:
        LOGGER.error("Invalid value for 'bench.repeat':%s. Must be >= 1. Update '../../conf/settings.yaml'", repeat)

    @classmethod
    def is_config_valid(cls) -> bool:
        return len(cls.snrs) > 0 and len(cls.denoisers) > 0 and cls.repeat >= 1 and cls.n_jobs != 0


class SweepDefaults:
    snr: float = float(settings.get("sweep.snr", 10.0))
    denoiser: str = str(settings.get("sweep.denoiser", "nlm"))


class PlotConfig:
    """
    Look of the SVG charts
    """

    hashsalt: str = str(settings.get("plot.hashsalt", "pnmf"))
    width: float = float(settings.get("plot.width", 6.4))
    height: float = float(settings.get("plot.height", 4.0))
    truth_color: str = str(settings.get("plot.truth_color", "tab:red"))
    estimate_color: str = str(settings.get("plot.estimate_color", "tab:blue"))
