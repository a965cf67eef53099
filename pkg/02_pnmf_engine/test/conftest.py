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

Shared fixtures: small synthetic scenes with known truth
"""

from dataclasses import dataclass

import numpy as np
import pytest

from hsi_core.cube import AbundanceMatrix, EndmemberMatrix, SpectralCube
from hsi_core.synth import SynthConfig, add_noise, generate_abundances, mix, noise_seed, toy_library


@dataclass(frozen=True)
class Scene:
    cube: SpectralCube
    endmembers: EndmemberMatrix
    abundances: AbundanceMatrix


def build_scene(rows: int, cols: int, p: int, seed: int, snr_db: float | None = None) -> Scene:
    """
    Gaussian-field scene whose first p pixels are pure, one per endmember
    """
    abundances = np.array(generate_abundances(SynthConfig(rows=rows, cols=cols, p=p, seed=seed)).data)
    abundances[:, :p] = np.eye(p)
    truth = AbundanceMatrix(data=abundances, simplex=True)
    library = toy_library(p)
    cube = mix(library, truth, rows, cols)
    if snr_db is not None:
        cube = add_noise(cube, snr_db, noise_seed(seed, snr_db))
    return Scene(cube=cube, endmembers=library, abundances=truth)


@pytest.fixture(scope="module")
def noiseless_scene() -> Scene:
    return build_scene(rows=16, cols=16, p=3, seed=4)


@pytest.fixture(scope="module")
def noisy_scene() -> Scene:
    return build_scene(rows=16, cols=16, p=3, seed=4, snr_db=20.0)


@pytest.fixture
def scene_factory():
    return build_scene
