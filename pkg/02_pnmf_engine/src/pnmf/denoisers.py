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

Plug-in denoisers for the prior step of the engine.

Every denoiser receives the full P x rows x cols stack of abundance maps and the
noise level sigma of the prior subproblem, and filters each map on its own.
Boundaries are reflected everywhere (scipy 'reflect' == numpy 'symmetric').
"""

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Final

import numpy as np
from scipy.ndimage import gaussian_filter, median_filter, uniform_filter
from skimage.restoration import denoise_tv_chambolle

from pnmf.engine_config import DenoiserDefaults

LOGGER = logging.getLogger(__name__)

# smallest Gaussian kernel std in pixels
MIN_GAUSSIAN_STD: Final[float] = 0.5

# knobs that must hold integral values
_INTEGER_PARAMS: Final[frozenset[str]] = frozenset({"window", "patch", "search", "iters"})


def _identity(maps: np.ndarray, sigma: float, params: Mapping[str, float]) -> np.ndarray:  # noqa: ARG001
    return maps.copy()


def _gaussian(maps: np.ndarray, sigma: float, params: Mapping[str, float]) -> np.ndarray:
    std = max(MIN_GAUSSIAN_STD, params["c_g"] * sigma * params["rows_scale"])
    # std 0 along the first axis keeps the bands apart
    return gaussian_filter(maps, sigma=(0.0, std, std), mode="reflect", truncate=3.0)


def _median(maps: np.ndarray, sigma: float, params: Mapping[str, float]) -> np.ndarray:  # noqa: ARG001
    window = int(params["window"])
    return median_filter(maps, size=(1, window, window), mode="reflect")


def _non_local_means(maps: np.ndarray, sigma: float, params: Mapping[str, float]) -> np.ndarray:
    """
    Pixelwise NLM. Each pixel becomes the weighted mean of the pixels in its
    (2*search+1)^2 window, weighted by exp(-max(d2 - 2 sigma^2, 0) / h^2) where d2 is the
    mean squared difference of the patch x patch neighbourhoods. The centre pixel gets the
    largest weight among the others.
    All bands are processed together, one window offset at a time.
    """
    patch = int(params["patch"])
    search = int(params["search"])
    h_squared = (params["h_factor"] * sigma) ** 2
    if h_squared == 0:
        return maps.copy()
    _, rows, cols = maps.shape
    padded = np.pad(maps, ((0, 0), (search, search), (search, search)), mode="symmetric")

    weighted_sum = np.zeros_like(maps)
    weight_total = np.zeros_like(maps)
    max_weight = np.zeros_like(maps)
    for dy in range(-search, search + 1):
        for dx in range(-search, search + 1):
            if dy == 0 and dx == 0:
                continue
            shifted = padded[:, search + dy : search + dy + rows, search + dx : search + dx + cols]
            distance = uniform_filter((maps - shifted) ** 2, size=(1, patch, patch), mode="reflect")
            weight = np.exp(-np.maximum(distance - 2.0 * sigma**2, 0.0) / h_squared)
            weighted_sum += weight * shifted
            weight_total += weight
            np.maximum(max_weight, weight, out=max_weight)

    # all neighbour weights underflowed, or there are no neighbours
    self_weight = np.where(max_weight > 0, max_weight, 1.0)
    return (weighted_sum + self_weight * maps) / (weight_total + self_weight)


def _total_variation(maps: np.ndarray, sigma: float, params: Mapping[str, float]) -> np.ndarray:
    weight = params["c_tv"] * sigma
    if weight == 0:
        return maps.copy()
    iters = int(params["iters"])
    return np.stack([denoise_tv_chambolle(band, weight=weight, eps=0.0, max_num_iter=iters) for band in maps])


class DenoiserKind(str, Enum):
    def __new__(cls, value: str, band_function: Callable[[np.ndarray, float, Mapping[str, float]], np.ndarray]):
        """
        Override creation of the enum
        Each kind carries
        - band_function: filters a P x rows x cols stack at noise level sigma with the resolved params
        - defaults: the configured knobs of the kind (see DenoiserDefaults)
        """
        obj = str.__new__(cls, value)
        obj._value_ = value
        obj.band_function = band_function
        obj.defaults = MappingProxyType(DenoiserDefaults.for_kind(value))
        return obj

    IDENTITY = ("identity", _identity)
    GAUSSIAN = ("gaussian", _gaussian)
    MEDIAN = ("median", _median)
    NLM = ("nlm", _non_local_means)
    TV = ("tv", _total_variation)

    @classmethod
    def parse(cls, name: "str | DenoiserKind") -> "DenoiserKind":
        """
        Looks up a kind by its name. 'none' is accepted for identity
        """
        if isinstance(name, DenoiserKind):
            return name
        key = str(name).strip().lower()
        if key == "none":
            return cls.IDENTITY
        try:
            return cls(key)
        except ValueError as ex:
            valid = ", ".join(kind.value for kind in cls)
            raise ValueError(f"Unknown denoiser: '{name}'. Valid values are none, {valid}") from ex


def _check_param(kind: DenoiserKind, key: str, value: float):
    if not math.isfinite(value):
        raise ValueError(f"Denoiser {kind.value}: parameter {key} must be finite. Got {value}")
    if key in _INTEGER_PARAMS and value != int(value):
        raise ValueError(f"Denoiser {kind.value}: parameter {key} must be an integer. Got {value}")
    match key:
        case "window" | "patch":
            if value < 1 or int(value) % 2 == 0:
                raise ValueError(f"Denoiser {kind.value}: {key} must be an odd integer >= 1. Got {value}")
        case "search":
            if value < 0:
                raise ValueError(f"Denoiser {kind.value}: search must be >= 0. Got {value}")
        case "iters":
            if value < 1:
                raise ValueError(f"Denoiser {kind.value}: iters must be >= 1. Got {value}")
        case "h_factor":
            if value <= 0:
                raise ValueError(f"Denoiser {kind.value}: h_factor must be > 0. Got {value}")
        case _:
            if value < 0:
                raise ValueError(f"Denoiser {kind.value}: {key} must be >= 0. Got {value}")


@dataclass(frozen=True)
class DenoiserSpec:
    """
    A denoiser kind and its knobs. Missing knobs are filled from the configured defaults
    """

    kind: DenoiserKind = DenoiserKind.IDENTITY
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        kind = DenoiserKind.parse(self.kind)
        unknown = sorted(set(self.params) - set(kind.defaults))
        if unknown:
            raise ValueError(
                f"Denoiser {kind.value} does not accept parameters {unknown}. Valid parameters: {sorted(kind.defaults)}"
            )
        resolved = {**kind.defaults, **{key: float(value) for key, value in self.params.items()}}
        for key, value in resolved.items():
            _check_param(kind, key, value)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", resolved)

    @classmethod
    def from_cli(cls, kind: str, assignments: Sequence[str] = ()) -> "DenoiserSpec":
        """
        Builds a DenoiserSpec from '--denoiser' and repeated '--denoiser-param key=value' flags
        """
        params: dict[str, float] = {}
        for assignment in assignments:
            key, separator, value = assignment.partition("=")
            if not separator or not key.strip():
                raise ValueError(f"Denoiser parameter must look like key=value. Got '{assignment}'")
            try:
                params[key.strip()] = float(value)
            except ValueError as ex:
                raise ValueError(f"Denoiser parameter {key.strip()} is not a number: '{value}'") from ex
        return cls(kind=DenoiserKind.parse(kind), params=params)

    def as_dict(self) -> dict:
        return {"kind": self.kind.value, "params": dict(sorted(self.params.items()))}


@dataclass(frozen=True, eq=False)
class DenoiseRequest:
    """
    A P x rows x cols stack of maps to filter at noise level sigma >= 0
    """

    maps: np.ndarray
    sigma: float

    def __post_init__(self):
        maps = np.asarray(self.maps, dtype=np.float64)
        if maps.ndim != 3:
            raise ValueError(f"Denoiser input must be a P x rows x cols stack. Got shape:{maps.shape}")
        if not np.all(np.isfinite(maps)):
            raise ValueError("Denoiser input contains non-finite values")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"Denoiser sigma must be finite and >= 0. Got {self.sigma}")
        object.__setattr__(self, "maps", maps)


def denoise(spec: DenoiserSpec, request: DenoiseRequest) -> np.ndarray:
    """
    Applies the denoiser to every map of the request. sigma = 0 is the identity for every kind
    """
    if request.sigma == 0 or spec.kind is DenoiserKind.IDENTITY:
        return request.maps.copy()
    output = spec.kind.band_function(request.maps, request.sigma, spec.params)
    if output.shape != request.maps.shape or not np.all(np.isfinite(output)):
        raise ValueError(f"Denoiser {spec.kind.value} returned an invalid result of shape {output.shape}")
    LOGGER.debug("Applied %s denoiser at sigma %s to %s maps", spec.kind.value, request.sigma, request.maps.shape[0])
    return output
