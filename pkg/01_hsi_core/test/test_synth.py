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

Test cases for hsi_core.synth and hsi_core.rng
"""

import math

import numpy as np
import pytest

from hsi_core.cube import AbundanceMatrix, EndmemberMatrix, reshape_to_cube
from hsi_core.rng import NormalStream
from hsi_core.synth import (
    SynthConfig,
    add_noise,
    generate_abundances,
    measured_snr_db,
    mix,
    noise_seed,
    toy_library,
)


def test_normal_stream_is_reproducible():
    first = NormalStream(42).normal((3, 5))
    second = NormalStream(42).normal((3, 5))
    np.testing.assert_array_equal(first, second)
    assert not np.array_equal(first, NormalStream(43).normal((3, 5)))


def test_normal_stream_construction():
    """
    The first two normals come from the first two uniforms through Box-Muller
    """
    uniforms = NormalStream(5).uniform(2)
    normals = NormalStream(5).normal(2)
    radius = math.sqrt(-2.0 * math.log(uniforms[0]))
    assert normals[0] == pytest.approx(radius * math.cos(2.0 * math.pi * uniforms[1]), rel=1e-15)
    assert normals[1] == pytest.approx(radius * math.sin(2.0 * math.pi * uniforms[1]), rel=1e-15)
    assert np.all((uniforms > 0) & (uniforms < 1))


def test_normal_stream_moments():
    samples = NormalStream(11).normal(200_001)
    assert abs(samples.mean()) < 0.01
    assert abs(samples.std() - 1.0) < 0.01


def test_toy_library():
    library = toy_library(4)
    assert (library.bands, library.count) == (224, 4)
    assert library.data.min() >= 0.05
    with pytest.raises(ValueError):
        toy_library(5)


def test_abundances_deterministic_and_on_simplex():
    cfg = SynthConfig(rows=16, cols=12, p=3, seed=9)
    first = generate_abundances(cfg)
    second = generate_abundances(cfg)
    np.testing.assert_array_equal(first.data, second.data)
    assert first.data.shape == (3, 16 * 12)
    assert first.data.min() >= 0
    np.testing.assert_allclose(first.data.sum(axis=0), 1.0, atol=1e-12)


@pytest.mark.parametrize("fraction", [0.0, 0.05, 0.3, 1.0])
def test_pure_pixel_fraction(fraction: float):
    cfg = SynthConfig(rows=10, cols=10, p=4, pure_pixel_fraction=fraction, seed=1)
    abundances = generate_abundances(cfg).data
    pure = int(np.sum(abundances.max(axis=0) == 1.0))
    assert pure >= math.ceil(fraction * 100), f"expected at least {math.ceil(fraction * 100)} pure pixels, got {pure}"


def _roughness(abundances: AbundanceMatrix, rows: int, cols: int) -> float:
    maps = reshape_to_cube(abundances, rows, cols)
    return float(np.mean(np.abs(np.diff(maps, axis=1))) + np.mean(np.abs(np.diff(maps, axis=2))))


def test_smoothness_reduces_roughness():
    roughness = [
        _roughness(generate_abundances(SynthConfig(rows=32, cols=32, smoothness=s, pure_pixel_fraction=0.0, seed=2)), 32, 32)
        for s in (1.0, 3.0, 8.0)
    ]
    assert roughness[0] > roughness[1] > roughness[2], f"roughness should decrease with smoothness: {roughness}"


def test_single_pixel_scene():
    abundances = generate_abundances(SynthConfig(rows=1, cols=1, p=3, pure_pixel_fraction=0.0))
    np.testing.assert_allclose(abundances.data[:, 0], 1.0 / 3.0)


@pytest.mark.parametrize(
    "kwargs",
    [{"rows": 0}, {"p": 1}, {"smoothness": 0.0}, {"pure_pixel_fraction": 1.5}, {"contrast": -1.0}],
)
def test_synth_config_validation(kwargs: dict):
    with pytest.raises(ValueError):
        SynthConfig(**kwargs)


def test_mix_matches_product():
    library = toy_library(3)
    abundances = generate_abundances(SynthConfig(rows=4, cols=5, p=3))
    cube = mix(library, abundances, rows=4, cols=5)
    assert (cube.rows, cube.cols, cube.bands) == (4, 5, 224)
    np.testing.assert_allclose(cube.data, library.data @ abundances.data)
    assert mix(library, abundances).rows == 1


def test_mix_count_mismatch():
    with pytest.raises(ValueError, match="does not match"):
        mix(toy_library(2), generate_abundances(SynthConfig(rows=2, cols=2, p=3)))


@pytest.mark.parametrize("snr_db", [5.0, 10.0, 20.0, 30.0])
def test_noise_hits_target_snr(snr_db: float):
    clean = mix(toy_library(4), generate_abundances(SynthConfig(rows=32, cols=32)), rows=32, cols=32)
    noisy = add_noise(clean, snr_db, noise_seed(0, snr_db))
    measured = measured_snr_db(clean, noisy)
    assert abs(measured - snr_db) < 0.2, f"measured SNR {measured} dB is off target {snr_db} dB"


def test_infinite_snr_is_noiseless():
    clean = mix(EndmemberMatrix(data=[[1.0], [2.0]]), AbundanceMatrix(data=[[1.0, 1.0]]))
    assert add_noise(clean, math.inf, 0) is clean
    assert measured_snr_db(clean, clean) == math.inf
    with pytest.raises(ValueError):
        add_noise(clean, math.nan, 0)


def test_noise_seed_depends_only_on_snr():
    assert noise_seed(3, 10.0) == noise_seed(3, 10.0)
    assert noise_seed(3, 10.0) != noise_seed(3, 20.0)
    assert noise_seed(3, 10.0) != noise_seed(4, 10.0)
