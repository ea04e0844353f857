"""Run configuration files (TOML, or JSON by extension) and seed derivation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ContractError
from .learn.models import ModelSpec
from .synth import GeneratorConfig

PATH_ROLES = ("trace", "outdir")
RW_MODES = ("consumed", "full")
DEFAULT_CHECKPOINTS = (600, 21600, 600)


def read_document(path) -> dict:
    """Parse a TOML or ``.json`` file into a dict."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ContractError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            doc = json.loads(raw.decode("utf-8"))
        else:
            doc = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ContractError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ContractError(f"config {path} is not a key/value document")
    return doc


_TOML_ESCAPES = {'"': '\\"', "\\": "\\\\", "\b": "\\b", "\t": "\\t", "\n": "\\n",
                 "\f": "\\f", "\r": "\\r"}


def _toml_string(text: str) -> str:
    out = []
    for ch in text:
        if ch in _TOML_ESCAPES:
            out.append(_TOML_ESCAPES[ch])
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ContractError("non-finite values cannot be written to TOML")
        return repr(v)
    if isinstance(v, str):
        return _toml_string(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ContractError(f"cannot write {type(v).__name__} to a flat TOML document")


def write_flat_document(doc: dict, path) -> None:
    """Write scalar/list key-value pairs as TOML, or JSON for ``.json`` paths."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        text = "".join(f"{k} = {_toml_value(v)}\n" for k, v in doc.items())
    path.write_text(text, encoding="utf-8")


def derive_seed(seed: int, stage: str) -> int:
    """Stable 64-bit sub-seed for a named pipeline stage."""
    digest = hashlib.sha256(f"{int(seed)}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def parse_grid(text: str) -> list:
    """``"600:21600:600"`` -> inclusive range; ``"1,7,30"`` -> list; ``"1..60"`` -> 1..60."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            return list(range(parts[0], parts[1] + 1, parts[2]))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ContractError(f"malformed grid {text!r}") from exc


def _strict(section: str, doc, allowed) -> dict:
    if not isinstance(doc, dict):
        raise ContractError(f"[{section}] must be a table")
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ContractError(f"unknown keys in [{section}]: {sorted(unknown)}")
    return doc


@dataclass
class RunConfig:
    seed: int = 0
    paths: dict = field(default_factory=lambda: {"outdir": "out"})
    model_spec: ModelSpec = field(default_factory=lambda: ModelSpec("rf"))
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    sweep_days: list = field(default_factory=lambda: [1, 7, 14, 30])
    checkpoints: list = field(default_factory=lambda: list(range(600, 21601, 600)))
    rw_mode: str = "consumed"
    absorbing: bool = True
    fractions: tuple = (0.65, 0.15, 0.20)
    calibrate_targets: tuple | None = None
    tz_offset: int = 0
    charts: bool = True
    source: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.rw_mode not in RW_MODES:
            raise ContractError(f"rw_mode must be one of {RW_MODES}")
        unknown = set(self.paths) - set(PATH_ROLES)
        if unknown:
            raise ContractError(f"undeclared path roles: {sorted(unknown)}")
        if "outdir" not in self.paths:
            raise ContractError("paths.outdir is required")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ContractError("seed must be an unsigned 64-bit integer")

    def path(self, role: str) -> Path | None:
        value = self.paths.get(role)
        return None if value is None else Path(value)

    def digest(self) -> str:
        """sha256 of the canonical JSON form of the parsed document.

        The output directory is left out: where results go does not change them.
        """
        doc = dict(self.source)
        if isinstance(doc.get("paths"), dict):
            doc["paths"] = {k: v for k, v in doc["paths"].items() if k != "outdir"}
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_dict(cls, doc: dict, base_dir=None) -> "RunConfig":
        """Build from a parsed document.

        Top-level keys: ``seed``, ``rw_mode``, ``absorbing``, ``tz_offset``,
        ``charts`` and the tables ``[paths]``, ``[model]``, ``[generator]``,
        ``[grids]`` (``sweep_days``, ``checkpoints``), ``[split]``
        (``fractions``) and ``[calibrate]`` (``targets``). Relative paths
        resolve against ``base_dir``. The generator and model seeds default
        to sub-seeds of the run seed.
        """
        _strict("config", doc, ("seed", "rw_mode", "absorbing", "tz_offset", "charts", "paths",
                                "model", "generator", "grids", "split", "calibrate"))
        seed = int(doc.get("seed", 0))
        paths = dict(_strict("paths", doc.get("paths", {"outdir": "out"}), PATH_ROLES))
        if base_dir is not None:
            paths = {k: str(Path(base_dir) / v) for k, v in paths.items()}
        model_doc = dict(doc.get("model", {"kind": "rf"}))
        model_doc.setdefault("kind", "rf")
        model_doc.setdefault("seed", derive_seed(seed, "train"))
        if model_doc.get("max_depth") == 0:
            model_doc["max_depth"] = None
        gen_doc = dict(_strict("generator", doc.get("generator", {}), _generator_keys()))
        gen_doc.setdefault("seed", derive_seed(seed, "generate"))
        grids = _strict("grids", doc.get("grids", {}), ("sweep_days", "checkpoints"))
        split = _strict("split", doc.get("split", {}), ("fractions",))
        cal = _strict("calibrate", doc.get("calibrate", {}), ("targets",))

        def grid(v, default):
            if v is None:
                return list(default)
            return parse_grid(v) if isinstance(v, str) else [int(x) for x in v]

        targets = cal.get("targets")
        if isinstance(targets, str):
            targets = tuple(float(x) for x in targets.split(","))
        try:
            return cls(
                seed=seed,
                paths=paths,
                model_spec=ModelSpec.from_dict(model_doc),
                generator=GeneratorConfig.from_dict(gen_doc),
                sweep_days=grid(grids.get("sweep_days"), [1, 7, 14, 30]),
                checkpoints=grid(grids.get("checkpoints"),
                                 range(DEFAULT_CHECKPOINTS[0], DEFAULT_CHECKPOINTS[1] + 1,
                                       DEFAULT_CHECKPOINTS[2])),
                rw_mode=str(doc.get("rw_mode", "consumed")),
                absorbing=bool(doc.get("absorbing", True)),
                fractions=tuple(float(f) for f in split.get("fractions", (0.65, 0.15, 0.20))),
                calibrate_targets=None if targets is None else tuple(float(t) for t in targets),
                tz_offset=int(doc.get("tz_offset", 0)),
                charts=bool(doc.get("charts", True)),
                source=doc,
            )
        except TypeError as exc:
            raise ContractError(f"invalid config value: {exc}") from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_dict(read_document(path), base_dir=Path(path).parent)


def _generator_keys():
    from .synth import _CONFIG_ALIASES

    return {f.name for f in dataclasses.fields(GeneratorConfig)} | _CONFIG_ALIASES
