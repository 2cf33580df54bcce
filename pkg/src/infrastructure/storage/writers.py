"""JSON and CSV writers with config-hash provenance."""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import BaseModel

from src.models import GridFunction

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"


def _plain(payload: BaseModel | dict[str, Any]) -> dict[str, Any]:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    return dict(payload)


def config_hash(config: BaseModel | dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
    canonical = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_json(path: Path, payload: BaseModel | dict[str, Any], config_hash: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = _plain(payload)
    if config_hash is not None:
        data["config_hash"] = config_hash
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {path}")
    return path


def write_csv(path: Path, frame: pd.DataFrame, config_hash: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if config_hash is not None:
        frame = frame.assign(config_hash=config_hash)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {path} ({len(frame)} rows)")
    return path


def grid_function_frame(u: GridFunction) -> pd.DataFrame:
    """Cell centers and values, one row per cell in row-major order."""
    names = ["x", "y", "z"][: u.grid.dim]
    columns = {name: axis.ravel() for name, axis in zip(names, u.grid.centers())}
    columns["value"] = u.values.ravel()
    return pd.DataFrame(columns)
