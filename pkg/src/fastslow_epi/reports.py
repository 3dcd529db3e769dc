"""CSV and manifest serialization."""
from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path

from . import __version__
from ._accel import backend_name


def fmt(v) -> str:
    """Shortest round-trip text for numbers; empty for None."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    if hasattr(v, "value"):
        return str(v.value)
    try:
        return repr(float(v))
    except (TypeError, ValueError):
        return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def load_schema() -> dict:
    return json.loads(resources.files("fastslow_epi").joinpath("manifest.schema.json").read_text())


def build_manifest(command, config, wall_clock, outputs, summary) -> dict:
    return {
        "tool": "fastslow-epi",
        "version": __version__,
        "backend": backend_name(),
        "command": command,
        "config": config,
        "wall_clock_s": float(wall_clock),
        "outputs": [str(Path(o).name) for o in outputs],
        "summary": _jsonable(summary),
    }


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "value") and not isinstance(v, (int, float)):
        return v.value
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
