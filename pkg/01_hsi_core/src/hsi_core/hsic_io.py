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

Readers and writers for the persisted artifacts

HSIC cube file (band-sequential, little endian):
    magic "HSIC" | version u32 = 1 | rows u32 | cols u32 | bands u32 | bands*rows*cols f64
Values are band-major then row-major, which is exactly the C order of the L x N matrix.

Endmember libraries are CSV files with one wavelength per line and one endmember per column.
"""

import csv
import logging
import struct
from pathlib import Path
from typing import Final

import numpy as np

from hsi_core.cube import AbundanceMatrix, EndmemberMatrix, SpectralCube

LOGGER = logging.getLogger(__name__)

HSIC_MAGIC: Final[bytes] = b"HSIC"
HSIC_VERSION: Final[int] = 1
# magic, version, rows, cols, bands
HSIC_HEADER: Final[struct.Struct] = struct.Struct("<4sIIII")
PAYLOAD_DTYPE: Final[np.dtype] = np.dtype("<f8")


def _encode(rows: int, cols: int, matrix: np.ndarray) -> bytes:
    header = HSIC_HEADER.pack(HSIC_MAGIC, HSIC_VERSION, rows, cols, matrix.shape[0])
    return header + np.ascontiguousarray(matrix, dtype=PAYLOAD_DTYPE).tobytes(order="C")


def _decode(raw: bytes, source: str) -> tuple[int, int, np.ndarray]:
    """
    Validates the header and payload of an HSIC byte string
    Returns rows, cols and the bands x (rows*cols) matrix
    """
    if len(raw) < HSIC_HEADER.size:
        raise ValueError(f"{source}: file is shorter than the HSIC header")
    magic, version, rows, cols, bands = HSIC_HEADER.unpack_from(raw)
    if magic != HSIC_MAGIC:
        raise ValueError(f"{source}: bad magic bytes {magic!r}, expected {HSIC_MAGIC!r}")
    if version != HSIC_VERSION:
        raise ValueError(f"{source}: unsupported HSIC version {version}")
    if rows < 1 or cols < 1 or bands < 1:
        raise ValueError(f"{source}: invalid dimensions rows:{rows} cols:{cols} bands:{bands}")
    expected = bands * rows * cols * PAYLOAD_DTYPE.itemsize
    payload = raw[HSIC_HEADER.size :]
    if len(payload) < expected:
        raise ValueError(f"{source}: truncated payload, expected {expected} bytes but found {len(payload)}")
    if len(payload) > expected:
        raise ValueError(f"{source}: {len(payload) - expected} trailing bytes after the payload")
    matrix = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).astype(np.float64).reshape(bands, rows * cols)
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{source}: payload contains non-finite values")
    return rows, cols, matrix


def store_cube(cube: SpectralCube, path: Path | str):
    """
    Writes the cube as an HSIC file
    """
    Path(path).write_bytes(_encode(cube.rows, cube.cols, cube.data))
    LOGGER.debug("Stored cube %sx%sx%s at %s", cube.rows, cube.cols, cube.bands, path)


def load_cube(path: Path | str) -> SpectralCube:
    """
    Reads an HSIC file as a SpectralCube. Negative values are permitted (noisy cubes)
    """
    rows, cols, matrix = _decode(Path(path).read_bytes(), str(path))
    return SpectralCube(rows=rows, cols=cols, data=matrix)


def store_abundances(abundances: AbundanceMatrix, rows: int, cols: int, path: Path | str):
    """
    Persists a P x N abundance matrix as an HSIC file with bands = P
    """
    if abundances.pixels != rows * cols:
        raise ValueError(f"Abundances have {abundances.pixels} pixels but rows*cols = {rows * cols}")
    Path(path).write_bytes(_encode(rows, cols, abundances.data))


def load_abundances(path: Path | str) -> tuple[AbundanceMatrix, int, int]:
    """
    Reads an abundance HSIC file. Returns the matrix with its spatial rows and cols
    """
    rows, cols, matrix = _decode(Path(path).read_bytes(), str(path))
    return AbundanceMatrix(data=matrix), rows, cols


def _parse_row(cells: list[str]) -> list[float] | None:
    try:
        return [float(cell) for cell in cells]
    except ValueError:
        return None


def load_endmember_csv(path: Path | str) -> EndmemberMatrix:
    """
    Reads an L x P endmember library. An optional single header line is skipped
    """
    with Path(path).open(newline="", encoding="utf-8") as csv_file:
        lines = [row for row in csv.reader(csv_file) if any(cell.strip() for cell in row)]
    if not lines:
        raise ValueError(f"{path}: endmember file is empty")

    values: list[list[float]] = []
    for line_no, row in enumerate(lines, start=1):
        parsed = _parse_row(row)
        if parsed is None:
            if line_no == 1:
                LOGGER.debug("Skipping header line of %s: %s", path, row)
                continue
            raise ValueError(f"{path}: non-numeric cell on line {line_no}: {row}")
        if values and len(parsed) != len(values[0]):
            raise ValueError(f"{path}: ragged row on line {line_no}, expected {len(values[0])} columns, found {len(parsed)}")
        values.append(parsed)

    if not values:
        raise ValueError(f"{path}: endmember file has a header but no values")
    matrix = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{path}: endmember file contains non-finite values")
    if np.any(matrix < 0):
        row, col = np.argwhere(matrix < 0)[0]
        raise ValueError(f"{path}: negative entry {matrix[row, col]} at band {row + 1}, endmember {col + 1}")
    return EndmemberMatrix(data=matrix)


def store_endmember_csv(endmembers: EndmemberMatrix, path: Path | str):
    """
    Writes the library with a header e1..eP. 17 significant digits keep load(store(E)) exact
    """
    header = ",".join(f"e{k + 1}" for k in range(endmembers.count))
    np.savetxt(path, endmembers.data, delimiter=",", fmt="%.17g", header=header, comments="")
