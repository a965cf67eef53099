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

Domain types of the linear mixture model R = EA + N.

Matrices are stored column-per-pixel: a cube is L x N, endmembers L x P and
abundances P x N. Pixel j sits at spatial position (j // cols, j % cols).
"""

import logging
import re
from dataclasses import dataclass
from typing import Final

import numpy as np

LOGGER = logging.getLogger(__name__)

# tolerance on the column sums of an abundance matrix flagged as simplex
SIMPLEX_TOLERANCE: Final[float] = 1e-6


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    """
    Returns a read-only float64 copy of values after checking the dimensionality
    """
    array = np.array(values, dtype=np.float64, copy=True)
    if array.ndim != ndim:
        raise ValueError(f"{name} must be a {ndim}D array. Got shape:{array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SpectralCube:
    """
    Observed image R with `bands` rows and rows*cols pixel columns in row-major spatial order
    """

    rows: int
    cols: int
    data: np.ndarray
    allow_negative: bool = True

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_array(self.data, 2, "cube data"))
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"Spatial dimensions must be positive. Got rows:{self.rows}, cols:{self.cols}")
        if self.data.shape[1] != self.rows * self.cols:
            raise ValueError(
                f"Cube has {self.data.shape[1]} pixel columns but rows*cols = {self.rows}*{self.cols}"
            )
        if self.data.shape[0] < 1:
            raise ValueError("Cube must have at least one band")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("Cube contains non-finite values")
        if not self.allow_negative and np.any(self.data < 0):
            raise ValueError("Cube contains negative values but allow_negative is False")

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def pixels(self) -> int:
        return self.data.shape[1]

    def clamped(self) -> "SpectralCube":
        """
        Returns a copy with negative values set to 0
        """
        return SpectralCube(rows=self.rows, cols=self.cols, data=np.maximum(self.data, 0.0), allow_negative=False)


@dataclass(frozen=True, eq=False)
class EndmemberMatrix:
    """
    L x P matrix of nonnegative endmember spectra, one column per material
    """

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_array(self.data, 2, "endmember data"))
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError(f"Endmember matrix must be non empty. Got shape:{self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("Endmember matrix contains non-finite values")
        if np.any(self.data < 0):
            raise ValueError("Endmember matrix contains negative entries")
        zero_columns = np.flatnonzero(~np.any(self.data > 0, axis=0))
        if zero_columns.size > 0:
            raise ValueError(f"Endmember matrix has all-zero columns: {zero_columns.tolist()}")

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def count(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class AbundanceMatrix:
    """
    P x N matrix of nonnegative abundances.
    When `simplex` is set every column must sum to 1 within SIMPLEX_TOLERANCE
    """

    data: np.ndarray
    simplex: bool = False

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_array(self.data, 2, "abundance data"))
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError(f"Abundance matrix must be non empty. Got shape:{self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("Abundance matrix contains non-finite values")
        if np.any(self.data < 0):
            raise ValueError("Abundance matrix contains negative entries")
        if self.simplex:
            worst = float(np.max(np.abs(self.data.sum(axis=0) - 1.0)))
            if worst > SIMPLEX_TOLERANCE:
                raise ValueError(f"Abundance columns do not sum to one. Max deviation:{worst}")

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def pixels(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class BandMask:
    """
    Boolean vector over the original bands. True keeps the band
    """

    keep: np.ndarray

    def __post_init__(self):
        keep = np.array(self.keep, dtype=bool, copy=True)
        if keep.ndim != 1:
            raise ValueError(f"Band mask must be 1D. Got shape:{keep.shape}")
        if not keep.any():
            raise ValueError("Band mask must keep at least one band")
        keep.setflags(write=False)
        object.__setattr__(self, "keep", keep)

    @property
    def kept(self) -> int:
        return int(self.keep.sum())


def reshape_to_cube(abundances: AbundanceMatrix | np.ndarray, rows: int, cols: int) -> np.ndarray:
    """
    Turns a P x N abundance matrix into a stack of P images of rows x cols.
    Image p at (i, j) is column i*cols + j of row p
    """
    matrix = abundances.data if isinstance(abundances, AbundanceMatrix) else np.asarray(abundances)
    if matrix.ndim != 2:
        raise ValueError(f"Expected a P x N matrix. Got shape:{matrix.shape}")
    if matrix.shape[1] != rows * cols:
        raise ValueError(f"Matrix has {matrix.shape[1]} pixels which does not match rows*cols = {rows * cols}")
    return matrix.reshape(matrix.shape[0], rows, cols).copy()


def reshape_to_matrix(maps: np.ndarray) -> np.ndarray:
    """
    Inverse of reshape_to_cube: P x rows x cols stack back to a P x N matrix
    """
    stack = np.asarray(maps)
    if stack.ndim != 3:
        raise ValueError(f"Expected a P x rows x cols stack. Got shape:{stack.shape}")
    return stack.reshape(stack.shape[0], stack.shape[1] * stack.shape[2]).copy()


def apply_band_mask(cube: SpectralCube, mask: BandMask) -> SpectralCube:
    """
    Keeps only the bands flagged in the mask, in their original order
    """
    if mask.keep.shape[0] != cube.bands:
        raise ValueError(f"Band mask length {mask.keep.shape[0]} does not match cube bands {cube.bands}")
    LOGGER.debug("Keeping %s of %s bands", mask.kept, cube.bands)
    return SpectralCube(rows=cube.rows, cols=cube.cols, data=cube.data[mask.keep, :], allow_negative=cube.allow_negative)


# one range item: "7" or "105-115"
_BAND_RANGE: Final[re.Pattern] = re.compile(r"^\s*(\d+)\s*(?:-\s*(\d+)\s*)?$")


def parse_band_ranges(drop: str, bands: int) -> BandMask:
    """
    Builds a BandMask from a list of 1-based band numbers or ranges to drop,
    e.g. "2,105-115,150-170,223,224"
    """
    keep = np.ones(bands, dtype=bool)
    for item in drop.split(","):
        if not item.strip():
            continue
        match = _BAND_RANGE.match(item)
        if match is None:
            raise ValueError(f"Invalid band range: '{item}'")
        start = int(match.group(1))
        end = int(match.group(2)) if match.group(2) else start
        if start < 1 or end > bands or start > end:
            raise ValueError(f"Band range '{item.strip()}' is outside 1..{bands}")
        keep[start - 1 : end] = False
    return BandMask(keep=keep)
