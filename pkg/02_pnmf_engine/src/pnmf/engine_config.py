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

Configuration reader for the unmixing engine and its denoisers
"""

import logging
import math
from pathlib import Path
from typing import Final

from dynaconf import Dynaconf

# Logger
LOGGER = logging.getLogger(__name__)

current_folder = Path(__file__).resolve()

settings = Dynaconf(
    envvar_prefix="PNMF",
    root_path=current_folder,
    settings_files=["../../conf/settings.yaml", "../../conf/.secrets.yaml"],
)
# `envvar_prefix` = export envvars with `export PNMF_ENGINE__MU=100`.
# `settings_files` = Load these files in the order.

# upper bound of the guard added to multiplicative denominators
MAX_EPS_GUARD: Final[float] = 1e-6


class EngineDefaults:
    """
    Default solver parameters. Read from the 'engine' section of '../../conf/settings.yaml'
    """

    alpha: float = float(settings.get("engine.alpha", 0.1))
    lam: float = float(settings.get("engine.lambda", 500.0))
    mu: float = float(settings.get("engine.mu", 1.0))
    delta: float = float(settings.get("engine.delta", 10.0))
    max_iters: int = int(settings.get("engine.max_iters", 300))
    rel_tol: float = float(settings.get("engine.rel_tol", 1e-5))
    stall_window: int = int(settings.get("engine.stall_window", 5))
    eps_guard: float = float(settings.get("engine.eps_guard", 1e-12))
    seed: int = int(settings.get("engine.seed", 0))
    clamp_negative: bool = bool(settings.get("engine.clamp_negative", False))
    denoiser: str = str(settings.get("engine.denoiser", "nlm"))
    noise_scaled_split: bool = bool(settings.get("engine.noise_scaled_split", True))

    if not 0 < eps_guard <= MAX_EPS_GUARD:
        LOGGER.error(
            "Invalid value for 'engine.eps_guard':%s. Must be in (0, %s]. Update '../../conf/settings.yaml'",
            eps_guard,
            MAX_EPS_GUARD,
        )
    if not delta > 0:
        LOGGER.error("Invalid value for 'engine.delta':%s. Must be > 0. Update '../../conf/settings.yaml'", delta)

    @classmethod
    def is_config_valid(cls) -> bool:
        """
        Checks that the configured defaults can build a valid UnmixConfig
        """
        scalars = (cls.alpha, cls.lam, cls.mu, cls.delta, cls.rel_tol, cls.eps_guard)
        return (
            all(math.isfinite(value) for value in scalars)
            and min(cls.alpha, cls.lam, cls.mu, cls.rel_tol) >= 0
            and cls.delta > 0
            and 0 < cls.eps_guard <= MAX_EPS_GUARD
            and cls.max_iters >= 0
            and cls.stall_window >= 1
            and not (cls.mu > 0 and cls.lam == 0)
        )


class DenoiserDefaults:
    """
    Default knobs of each denoiser, tied to the prior noise level sigma_n.
    Read from the 'denoisers' section of '../../conf/settings.yaml'
    """

    gaussian: dict = {
        "c_g": float(settings.get("denoisers.gaussian.c_g", 25.0)),
        "rows_scale": float(settings.get("denoisers.gaussian.rows_scale", 1.0)),
    }
    median: dict = {"window": int(settings.get("denoisers.median.window", 3))}
    nlm: dict = {
        "patch": int(settings.get("denoisers.nlm.patch", 3)),
        "search": int(settings.get("denoisers.nlm.search", 10)),
        "h_factor": float(settings.get("denoisers.nlm.h_factor", 0.55)),
    }
    tv: dict = {
        "c_tv": float(settings.get("denoisers.tv.c_tv", 1.0)),
        "iters": int(settings.get("denoisers.tv.iters", 50)),
    }

    @classmethod
    def for_kind(cls, kind: str) -> dict:
        """
        Returns a copy of the defaults of one denoiser kind. Kinds without knobs get an empty dict
        """
        return dict(getattr(cls, kind, {}))
