"""CSV report writing and metadata sidecars."""

from __future__ import annotations

import csv
import json
import math
import platform
from pathlib import Path


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if hasattr(v, "item"):  # numpy scalar
        return _cell(v.item())
    return str(v)


def write_csv(path, header, rows) -> None:
    """UTF-8 CSV with a header row and ``\\n`` line endings; NaN and None become empty."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def versions() -> dict:
    import numba
    import numpy
    import scipy

    from . import __version__

    return {"wfpred": __version__, "python": platform.python_version(),
            "numpy": numpy.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_metadata(path, config_hash: str | None, seed: int | None, **extra) -> Path:
    """Write ``<path>.meta.json`` next to a report; contains no timestamps."""
    doc = {"report": Path(path).name, "config_hash": config_hash, "seed": seed,
           "versions": versions()}
    doc.update(extra)
    out = sidecar_path(path)
    out.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return out
