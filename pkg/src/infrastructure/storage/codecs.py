"""Fixed-layout binary codecs for indicators and grid functions.

Both formats share a 32-byte little-endian header ``<4sHHId12x``: magic, version,
dimension, resolution, period, then 12 reserved zero bytes. Indicators (``DPLB``)
store ``numpy.packbits`` of the row-major cells; grid functions (``DPLG``) store
row-major ``<f8`` values.
"""

import struct
from pathlib import Path

import numpy as np

from src.models import BoundaryCondition, Grid, GridFunction, IndicatorGrid
from .exceptions import CorruptFileError

HEADER = struct.Struct("<4sHHId12x")
VERSION = 1
INDICATOR_MAGIC = b"DPLB"
FUNCTION_MAGIC = b"DPLG"


def _header(magic: bytes, grid: Grid) -> bytes:
    return HEADER.pack(magic, VERSION, grid.dim, grid.n, grid.length)


def _parse_header(blob: bytes, magic: bytes) -> tuple[int, int, float]:
    if len(blob) < HEADER.size:
        raise CorruptFileError(f"file shorter than the {HEADER.size}-byte header")
    found, version, dim, resolution, period = HEADER.unpack_from(blob)
    if found != magic:
        raise CorruptFileError(f"magic {found!r}, expected {magic!r}")
    if version != VERSION:
        raise CorruptFileError(f"unsupported version {version}")
    if dim not in (1, 2, 3) or resolution < 1 or not period > 0:
        raise CorruptFileError(f"invalid grid dim={dim} n={resolution} period={period}")
    return dim, resolution, period


def encode_indicator(indicator: IndicatorGrid) -> bytes:
    return _header(INDICATOR_MAGIC, indicator.grid) + np.packbits(indicator.cells.ravel()).tobytes()


def decode_indicator(blob: bytes, periodic: bool = True) -> IndicatorGrid:
    dim, resolution, period = _parse_header(blob, INDICATOR_MAGIC)
    count = resolution**dim
    payload = np.frombuffer(blob, dtype=np.uint8, offset=HEADER.size)
    if payload.size != (count + 7) // 8:
        raise CorruptFileError(f"payload of {payload.size} bytes for {count} cells")
    cells = np.unpackbits(payload, count=count).astype(bool)
    return IndicatorGrid(cells=cells, grid=Grid(resolution, dim, period, periodic))


def encode_grid_function(u: GridFunction) -> bytes:
    return _header(FUNCTION_MAGIC, u.grid) + np.ascontiguousarray(u.values, dtype="<f8").tobytes()


def decode_grid_function(blob: bytes, bc: BoundaryCondition | None = None, periodic: bool = True) -> GridFunction:
    dim, resolution, period = _parse_header(blob, FUNCTION_MAGIC)
    count = resolution**dim
    payload = np.frombuffer(blob, dtype="<f8", offset=HEADER.size)
    if payload.size != count:
        raise CorruptFileError(f"payload of {payload.size} values for {count} cells")
    grid = Grid(resolution, dim, period, periodic)
    bc = bc or (BoundaryCondition.periodic() if periodic else BoundaryCondition.dirichlet())
    return GridFunction(values=payload.reshape(grid.shape), grid=grid, bc=bc)


def write_indicator(path: Path, indicator: IndicatorGrid) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_indicator(indicator))
    return path


def read_indicator(path: Path, periodic: bool = True) -> IndicatorGrid:
    return decode_indicator(Path(path).read_bytes(), periodic=periodic)


def write_grid_function(path: Path, u: GridFunction) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_grid_function(u))
    return path
