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

Seeded random streams with a fixed uniform/normal construction so that golden files
can be regenerated by any implementation that reproduces the PCG64 u64 stream.
"""

import math
from collections.abc import Sequence
from typing import Final

import numpy as np

# 2**-53, the spacing of doubles in [0.5, 1)
_UNIT: Final[float] = 2.0**-53


class NormalStream:
    """
    Deterministic stream of uniforms and standard normals on top of PCG64.
    uniform  = ((u64 >> 11) + 0.5) * 2**-53, strictly inside (0, 1)
    normal   = Box-Muller on consecutive uniform pairs, cosine branch first
    """

    def __init__(self, seed: int | Sequence[int]):
        self.seed = seed
        self._bit_generator = np.random.PCG64(seed)

    def raw(self, count: int) -> np.ndarray:
        return self._bit_generator.random_raw(count)

    def uniform(self, count: int) -> np.ndarray:
        raw = self.raw(count)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _UNIT

    def normal(self, shape: int | tuple[int, ...]) -> np.ndarray:
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        count = math.prod(shape)
        pairs = (count + 1) // 2
        uniforms = self.uniform(2 * pairs)
        radius = np.sqrt(-2.0 * np.log(uniforms[0::2]))
        angle = 2.0 * np.pi * uniforms[1::2]
        normals = np.empty(2 * pairs, dtype=np.float64)
        normals[0::2] = radius * np.cos(angle)
        normals[1::2] = radius * np.sin(angle)
        return normals[:count].reshape(shape)
