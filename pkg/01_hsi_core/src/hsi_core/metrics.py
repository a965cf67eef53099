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

Evaluation metrics of an unmixing result against ground truth.
All angles are radians; callers convert to degrees for reporting.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import linear_sum_assignment

from hsi_core.cube import AbundanceMatrix, EndmemberMatrix

LOGGER = logging.getLogger(__name__)


def _matrix(value: EndmemberMatrix | AbundanceMatrix | np.ndarray) -> np.ndarray:
    return value.data if isinstance(value, EndmemberMatrix | AbundanceMatrix) else np.asarray(value, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Alignment:
    """
    perm[i] is the truth index matched to estimated endmember i
    per_pair_sad[i] is the angle between them in radians
    """

    perm: np.ndarray
    per_pair_sad: np.ndarray

    def __post_init__(self):
        if sorted(self.perm.tolist()) != list(range(len(self.perm))):
            raise ValueError(f"Alignment is not a permutation: {self.perm.tolist()}")

    @property
    def mean_sad(self) -> float:
        return float(np.mean(self.per_pair_sad))

    def reorder_rows(self, abundances: AbundanceMatrix | np.ndarray) -> np.ndarray:
        """
        Puts row i of the estimate at position perm[i] so rows line up with the truth
        """
        estimate = _matrix(abundances)
        aligned = np.empty_like(estimate)
        aligned[self.perm] = estimate
        return aligned

    def reorder_columns(self, endmembers: EndmemberMatrix | np.ndarray) -> np.ndarray:
        estimate = _matrix(endmembers)
        aligned = np.empty_like(estimate)
        aligned[:, self.perm] = estimate
        return aligned


def sad(reference: np.ndarray, estimate: np.ndarray) -> float:
    """
    Spectral angle between two spectra in radians, in [0, pi]
    """
    reference = np.asarray(reference, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if reference.shape != estimate.shape:
        raise ValueError(f"Spectra differ in length: {reference.shape} vs {estimate.shape}")
    norms = float(np.linalg.norm(reference)) * float(np.linalg.norm(estimate))
    if norms == 0:
        raise ValueError("Spectral angle is undefined for a zero-norm spectrum")
    cosine = float(np.dot(reference, estimate)) / norms
    return math.acos(min(1.0, max(-1.0, cosine)))


def sad_matrix(estimate: EndmemberMatrix | np.ndarray, truth: EndmemberMatrix | np.ndarray) -> np.ndarray:
    """
    cost[i, j] = SAD between estimated endmember i and truth endmember j
    """
    est = _matrix(estimate)
    ref = _matrix(truth)
    return np.array([[sad(ref[:, j], est[:, i]) for j in range(ref.shape[1])] for i in range(est.shape[1])])


def align(estimate: EndmemberMatrix | np.ndarray, truth: EndmemberMatrix | np.ndarray) -> Alignment:
    """
    One-to-one matching of estimated and truth endmembers minimising the total SAD
    """
    est = _matrix(estimate)
    ref = _matrix(truth)
    if est.shape != ref.shape:
        raise ValueError(f"Cannot align endmembers of shape {est.shape} with truth of shape {ref.shape}")
    cost = sad_matrix(est, ref)
    est_index, truth_index = linear_sum_assignment(cost)
    perm = np.empty(est.shape[1], dtype=int)
    perm[est_index] = truth_index
    return Alignment(perm=perm, per_pair_sad=cost[np.arange(est.shape[1]), perm])


def mean_sad(
    estimate: EndmemberMatrix | np.ndarray, truth: EndmemberMatrix | np.ndarray, alignment: Alignment | None = None
) -> float:
    """
    Mean spectral angle over aligned pairs, radians
    """
    if alignment is None:
        alignment = align(estimate, truth)
    est = _matrix(estimate)
    ref = _matrix(truth)
    return float(np.mean([sad(ref[:, alignment.perm[i]], est[:, i]) for i in range(est.shape[1])]))


def _check_same_shape(estimate: np.ndarray, truth: np.ndarray):
    if estimate.shape != truth.shape:
        raise ValueError(f"Dimension mismatch: estimate {estimate.shape} vs truth {truth.shape}")


def rmse(estimate: AbundanceMatrix | np.ndarray, truth: AbundanceMatrix | np.ndarray) -> float:
    """
    sqrt(1/(NP) sum_i ||a_i - a_hat_i||^2). Rows must already be aligned
    """
    est = _matrix(estimate)
    ref = _matrix(truth)
    _check_same_shape(est, ref)
    return math.sqrt(float(np.mean((est - ref) ** 2)))


def psnr(estimate: AbundanceMatrix | np.ndarray, truth: AbundanceMatrix | np.ndarray) -> float:
    """
    PSNR computed per abundance map with MAX = max of the truth map, averaged over maps.
    Maps recovered exactly are left out of the mean. Returns +inf only when every map matches
    """
    est = _matrix(estimate)
    ref = _matrix(truth)
    _check_same_shape(est, ref)
    if ref.size == 0:
        raise ValueError("PSNR needs a non empty truth")
    per_map = []
    for estimated_map, truth_map in zip(est, ref, strict=True):
        mse = float(np.mean((estimated_map - truth_map) ** 2))
        if mse == 0:
            continue
        peak = float(truth_map.max())
        if peak <= 0:
            peak = 1.0
        per_map.append(10.0 * math.log10(peak**2 / mse))
    if not per_map:
        return math.inf
    return float(np.mean(per_map))


def reconstruction_error(
    cube: np.ndarray,
    endmembers: EndmemberMatrix | np.ndarray,
    abundances: AbundanceMatrix | np.ndarray,
    normalizer: Literal["np", "nl"] = "np",
) -> float:
    """
    sqrt(1/(N*P) sum_i ||r_i - r_hat_i||^2) with r_hat = EA.
    normalizer "nl" divides by N*L instead
    """
    observed = np.asarray(getattr(cube, "data", cube), dtype=np.float64)
    e = _matrix(endmembers)
    a = _matrix(abundances)
    if e.shape[0] != observed.shape[0] or a.shape[1] != observed.shape[1] or e.shape[1] != a.shape[0]:
        raise ValueError(f"Inconsistent dimensions: R {observed.shape}, E {e.shape}, A {a.shape}")
    squared = float(np.sum((observed - e @ a) ** 2))
    match normalizer:
        case "np":
            scale = a.shape[1] * a.shape[0]
        case "nl":
            scale = a.shape[1] * observed.shape[0]
        case _:
            raise ValueError(f"Unknown normalizer: {normalizer}. Must be 'np' or 'nl'")
    return math.sqrt(squared / scale)
