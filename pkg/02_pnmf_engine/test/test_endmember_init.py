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

Test cases for endmember_init (VCA and FCLS)
"""

import itertools
import math

import numpy as np
import pytest

from hsi_core.cube import EndmemberMatrix, SpectralCube
from hsi_core.metrics import align, rmse
from pnmf.endmember_init import ProjectionMode, estimate_noise_variance, estimate_snr, fcls, vca


def _augmented_objective(pixel: np.ndarray, library: np.ndarray, abundances: np.ndarray, delta: float) -> float:
    return float(np.sum((pixel - library @ abundances) ** 2) + delta**2 * (1.0 - abundances.sum()) ** 2)


def test_fcls_feasible_pixel():
    cube = SpectralCube(rows=1, cols=1, data=np.array([[0.3], [0.7]]))
    abundances = fcls(cube, EndmemberMatrix(data=np.eye(2)), delta=10.0)
    np.testing.assert_allclose(abundances.data[:, 0], [0.3, 0.7], atol=1e-6)


def test_fcls_pure_pixel_is_unit_vector():
    library = np.random.default_rng(0).random((12, 3)) + 0.1
    cube = SpectralCube(rows=1, cols=1, data=library[:, [1]])
    abundances = fcls(cube, library, delta=10.0)
    np.testing.assert_allclose(abundances.data[:, 0], [0.0, 1.0, 0.0], atol=1e-6)


def test_fcls_recovers_noiseless_abundances():
    generator = np.random.default_rng(1)
    library = generator.random((30, 4)) + 0.05
    truth = generator.dirichlet(np.ones(4), size=100).T
    cube = SpectralCube(rows=10, cols=10, data=library @ truth)
    estimate = fcls(cube, library, delta=10.0)
    assert estimate.data.min() >= 0.0
    assert rmse(estimate, truth) < 1e-6


def test_fcls_sum_to_one_tolerance_shrinks_with_delta(noisy_scene):
    deviations = []
    for delta in (10.0, 100.0):
        estimate = fcls(noisy_scene.cube, noisy_scene.endmembers, delta=delta)
        deviation = float(np.max(np.abs(estimate.data.sum(axis=0) - 1.0)))
        assert deviation <= 10.0 / delta, f"column sums deviate by {deviation} at delta {delta}"
        deviations.append(deviation)
    assert deviations[1] <= deviations[0]


@pytest.mark.parametrize("seed", range(5))
def test_fcls_beats_simplex_grid(seed: int):
    """
    The NNLS solution is never worse than any point of a 0.05 grid over the simplex
    """
    generator = np.random.default_rng(seed)
    library = generator.random((8, 3)) + 0.05
    pixel = library @ generator.dirichlet(np.ones(3)) + 0.05 * generator.normal(size=8)
    solution = fcls(SpectralCube(rows=1, cols=1, data=pixel[:, np.newaxis]), library, delta=10.0).data[:, 0]
    best = _augmented_objective(pixel, library, solution, 10.0)
    steps = np.round(np.arange(0.0, 1.0 + 1e-9, 0.05), 10)
    for first, second in itertools.product(steps, steps):
        if first + second > 1.0 + 1e-9:
            continue
        candidate = np.array([first, second, max(0.0, 1.0 - first - second)])
        assert best <= _augmented_objective(pixel, library, candidate, 10.0) + 1e-9


@pytest.mark.parametrize("delta", [0.0, -1.0, math.inf])
def test_fcls_rejects_invalid_delta(delta: float):
    with pytest.raises(ValueError):
        fcls(np.ones((2, 3)), np.eye(2), delta=delta)


def test_fcls_rejects_non_finite():
    with pytest.raises(ValueError, match="non-finite"):
        fcls(np.array([[np.nan], [1.0]]), np.eye(2), delta=10.0)


def test_vca_recovers_pure_pixels(noiseless_scene):
    result = vca(noiseless_scene.cube, p=3, seed=0)
    alignment = align(result.endmembers, noiseless_scene.endmembers)
    assert np.all(alignment.per_pair_sad < 1e-6), f"SAD per endmember {alignment.per_pair_sad}"
    assert np.all(noiseless_scene.abundances.data[:, result.indices].max(axis=0) == 1.0), "VCA picked a mixed pixel"
    assert result.projection_mode is ProjectionMode.PROJECTIVE


def test_vca_is_deterministic(noisy_scene):
    first = vca(noisy_scene.cube, p=3, seed=5)
    second = vca(noisy_scene.cube, p=3, seed=5)
    np.testing.assert_array_equal(first.indices, second.indices)
    np.testing.assert_array_equal(first.endmembers.data, second.endmembers.data)
    assert len(set(first.indices.tolist())) == 3
    assert first.endmembers.data.min() > 0


def test_vca_is_permutation_equivariant(noisy_scene):
    data = noisy_scene.cube.data
    order = np.random.default_rng(9).permutation(data.shape[1])
    shuffled = SpectralCube(rows=1, cols=data.shape[1], data=data[:, order])
    original = vca(noisy_scene.cube, p=3, seed=2)
    permuted = vca(shuffled, p=3, seed=2)
    np.testing.assert_array_equal(order[permuted.indices], original.indices)
    np.testing.assert_allclose(permuted.endmembers.data, original.endmembers.data)


def test_vca_single_endmember(noisy_scene):
    result = vca(noisy_scene.cube, p=1, seed=0)
    centered = noisy_scene.cube.data - noisy_scene.cube.data.mean(axis=1, keepdims=True)
    principal = np.linalg.svd(centered, full_matrices=False)[0][:, 0]
    assert result.indices.tolist() == [int(np.argmax(np.abs(principal @ centered)))]
    assert result.projection_mode is ProjectionMode.PRINCIPAL


def test_vca_rejects_too_many_endmembers():
    cube = SpectralCube(rows=2, cols=3, data=np.random.default_rng(0).random((4, 6)))
    with pytest.raises(ValueError, match="between 1 and"):
        vca(cube, p=5)


def test_vca_rejects_rank_deficient_cube():
    cube = SpectralCube(rows=2, cols=5, data=np.tile([[0.1], [0.5], [0.3], [0.9]], (1, 10)))
    with pytest.raises(ValueError, match="rank deficient"):
        vca(cube, p=3)


def test_estimate_snr_without_noise():
    data = np.random.default_rng(0).random((6, 2)) @ np.random.default_rng(1).dirichlet(np.ones(2), size=50).T
    mean = data.mean(axis=1, keepdims=True)
    basis = np.linalg.svd(data - mean, full_matrices=False)[0][:, :2]
    assert estimate_snr(data, mean, basis.T @ (data - mean)) > 100


def test_noise_variance_of_noiseless_cube(noiseless_scene):
    assert estimate_noise_variance(noiseless_scene.cube, 3) < 1e-20


def test_noise_variance_of_pure_noise():
    noise = 0.3 * np.random.default_rng(8).standard_normal((40, 500))
    assert estimate_noise_variance(noise, 0) == pytest.approx(0.09, rel=0.05)
    assert estimate_noise_variance(noise, 40) == 0.0
