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

Initialisation of the engine: endmembers by vertex component analysis (VCA),
abundances by fully constrained least squares (FCLS)
"""

import logging
import math
from dataclasses import dataclass
from enum import unique

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11: equivalent of the stdlib StrEnum
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from typing import Final

import numpy as np
from scipy.linalg import pinv, svd, svdvals
from scipy.optimize import nnls

from hsi_core.cube import AbundanceMatrix, EndmemberMatrix, SpectralCube
from hsi_core.rng import NormalStream

LOGGER = logging.getLogger(__name__)

# entries of extracted spectra are floored here so that noisy pixels still give a nonnegative E
ENDMEMBER_FLOOR: Final[float] = 1e-6

# relative singular value below which a direction counts as noise-free rank deficiency
_RANK_TOLERANCE: Final[float] = 1e-10


@unique
class ProjectionMode(StrEnum):
    SUBSPACE = "subspace"  # mean removed data projected on p-1 principal directions
    PROJECTIVE = "projective"  # data projected on p principal directions then onto a hyperplane
    PRINCIPAL = "principal"  # p = 1, first principal direction only


@dataclass(frozen=True, eq=False)
class VcaResult:
    """
    Endmembers extracted by VCA. indices[k] is the pixel column that gave endmember k
    """

    endmembers: EndmemberMatrix
    indices: np.ndarray
    projection_mode: ProjectionMode

    def __post_init__(self):
        if len(set(self.indices.tolist())) != len(self.indices):
            raise ValueError(f"VCA picked the same pixel twice: {self.indices.tolist()}")


def _signed_singular_vectors(matrix: np.ndarray, count: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Left singular vectors of matrix with the largest-magnitude entry of each made positive,
    so that results do not depend on the LAPACK sign convention
    """
    u, s, _ = svd(matrix, full_matrices=False)
    u = u[:, :count]
    pivots = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[pivots, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, s


def estimate_snr(data: np.ndarray, mean: np.ndarray, projected: np.ndarray) -> float:
    """
    SNR in dB of the data with respect to its p-dimensional principal subspace.
    Returns +inf when the data lies exactly in the subspace
    """
    bands, pixels = data.shape
    p = projected.shape[0]
    power_data = float(np.sum(data**2)) / pixels
    power_signal = float(np.sum(projected**2)) / pixels + float(np.sum(mean**2))
    noise = power_data - power_signal
    signal = power_signal - p / bands * power_data
    if noise <= 0:
        return math.inf
    if signal <= 0:
        return -math.inf
    return 10.0 * math.log10(signal / noise)


def estimate_noise_variance(cube: SpectralCube | np.ndarray, p: int) -> float:
    """
    Per-entry variance of white noise in the cube, from the energy left outside its p leading
    singular directions. 0 when the cube has no direction left over
    """
    data = np.asarray(getattr(cube, "data", cube), dtype=np.float64)
    bands, pixels = data.shape
    # noise energy outside a rank p signal spreads over (bands - p)(pixels - p) degrees of freedom
    degrees = (bands - p) * (pixels - p)
    if bands <= p or pixels <= p:
        return 0.0
    singular_values = svdvals(data)
    return float(np.sum(singular_values[p:] ** 2)) / degrees


def vca(cube: SpectralCube, p: int, seed: int | tuple[int, ...] = 0) -> VcaResult:
    """
    Vertex component analysis. Picks p pixels at the vertices of the data simplex by
    repeatedly projecting the data on a random direction orthogonal to the vertices
    found so far. The subspace projection is chosen from the estimated SNR against
    the threshold 15 + 10 log10(p) dB.
    """
    data = cube.data
    bands, pixels = data.shape
    if not 1 <= p <= min(bands, pixels):
        raise ValueError(f"Number of endmembers p:{p} must be between 1 and min(bands, pixels) = {min(bands, pixels)}")

    mean = data.mean(axis=1, keepdims=True)
    centered = data - mean
    principal, singular_values = _signed_singular_vectors(centered, p)
    rank = int(np.sum(singular_values > _RANK_TOLERANCE * max(float(singular_values[0]), 1e-300)))
    if rank < p - 1:
        raise ValueError(f"Cube is rank deficient: rank {rank} after mean removal but p:{p} needs at least {p - 1}")

    if p == 1:
        projection = np.abs(principal[:, 0] @ centered)
        index = int(np.argmax(projection))
        LOGGER.debug("VCA with p=1 picked pixel %s", index)
        return VcaResult(
            endmembers=EndmemberMatrix(data=np.maximum(data[:, [index]], ENDMEMBER_FLOOR)),
            indices=np.array([index]),
            projection_mode=ProjectionMode.PRINCIPAL,
        )

    snr = estimate_snr(data, mean, principal.T @ centered)
    snr_threshold = 15.0 + 10.0 * math.log10(p)
    if snr < snr_threshold:
        mode = ProjectionMode.SUBSPACE
        reduced = principal[:, : p - 1].T @ centered
        scale = math.sqrt(float(np.max(np.sum(reduced**2, axis=0))))
        projected = np.vstack((reduced, np.full((1, pixels), scale)))
    else:
        mode = ProjectionMode.PROJECTIVE
        basis, _ = _signed_singular_vectors(data, p)
        reduced = basis.T @ data
        direction = reduced.mean(axis=1, keepdims=True)
        projected = reduced / (direction.T @ reduced)
    LOGGER.debug("VCA estimated SNR %s dB (threshold %s dB), using %s projection", snr, snr_threshold, mode)

    stream = NormalStream(seed)
    indices = np.zeros(p, dtype=int)
    vertices = np.zeros((p, p))
    vertices[-1, 0] = 1.0
    for k in range(p):
        draw = stream.normal(p)
        direction = draw - vertices @ (pinv(vertices) @ draw)
        norm = float(np.linalg.norm(direction))
        if norm > 0:
            direction /= norm
        projection = np.abs(direction @ projected)
        # vertices already found are never picked again
        projection[indices[:k]] = -1.0
        indices[k] = int(np.argmax(projection))
        vertices[:, k] = projected[:, indices[k]]

    if not np.all(np.isfinite(vertices)):
        raise ValueError("VCA projection produced non-finite values. Check the cube for degenerate pixels")
    return VcaResult(
        endmembers=EndmemberMatrix(data=np.maximum(data[:, indices], ENDMEMBER_FLOOR)),
        indices=indices,
        projection_mode=mode,
    )


def fcls(cube: SpectralCube | np.ndarray, endmembers: EndmemberMatrix | np.ndarray, delta: float) -> AbundanceMatrix:
    """
    Fully constrained least squares. Solves per pixel
        min ||[r; delta] - [E; delta 1^T] a||^2  s.t. a >= 0
    with the Lawson-Hanson active set NNLS. Column sums approach 1 as delta grows
    """
    data = np.asarray(getattr(cube, "data", cube), dtype=np.float64)
    library = np.asarray(getattr(endmembers, "data", endmembers), dtype=np.float64)
    if not (math.isfinite(delta) and delta > 0):
        raise ValueError(f"delta must be finite and > 0. Got {delta}")
    if library.ndim != 2 or library.shape[1] < 1:
        raise ValueError(f"Endmember matrix must be L x P with P >= 1. Got shape:{library.shape}")
    if data.shape[0] != library.shape[0]:
        raise ValueError(f"Cube has {data.shape[0]} bands but endmembers have {library.shape[0]}")
    if not (np.all(np.isfinite(data)) and np.all(np.isfinite(library))):
        raise ValueError("FCLS input contains non-finite values")

    augmented_library = np.vstack((library, np.full((1, library.shape[1]), delta)))
    augmented_data = np.vstack((data, np.full((1, data.shape[1]), delta)))
    abundances = np.empty((library.shape[1], data.shape[1]))
    for pixel in range(data.shape[1]):
        abundances[:, pixel], _ = nnls(augmented_library, augmented_data[:, pixel])
    return AbundanceMatrix(data=abundances)
