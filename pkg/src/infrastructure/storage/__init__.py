"""Binary codecs, tabular/JSON writers and plot output."""

from .codecs import (
    decode_grid_function,
    decode_indicator,
    encode_grid_function,
    encode_indicator,
    read_indicator,
    write_grid_function,
    write_indicator,
)
from .exceptions import CorruptFileError, StorageError
from .plots import write_loglog_svg
from .writers import config_hash, grid_function_frame, write_csv, write_json

__all__ = [
    "CorruptFileError",
    "StorageError",
    "config_hash",
    "decode_grid_function",
    "decode_indicator",
    "encode_grid_function",
    "encode_indicator",
    "grid_function_frame",
    "read_indicator",
    "write_csv",
    "write_grid_function",
    "write_indicator",
    "write_json",
    "write_loglog_svg",
]
