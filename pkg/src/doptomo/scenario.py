"""Scenario files: one JSON document describing a full experiment.

Top-level sections are ``scene`` (required), ``grid``, ``spectrogram``,
``nulls``, ``blur`` and ``output``. Unknown keys anywhere are rejected.
Angles in the file are in degrees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .scene import Scatterer, SceneConfig


class ScenarioError(ValueError):
    """Malformed or invalid scenario file."""


@dataclass(frozen=True)
class GridSpec:
    spacing: float | None = None  # default lambda/4
    half_width: float | None = None  # default 1.2 * max r0
    center: tuple[float, float] = (0.0, 0.0)
    peak_threshold_db: float = -20.0
    dynamic_range_db: float = 60.0
    cut_step: float | None = None  # default lambda/50


@dataclass(frozen=True)
class SpectrogramSpec:
    window_len: int = 128
    hop: int | None = None


@dataclass(frozen=True)
class NullCase:
    name: str
    targets: tuple[tuple[float, float], ...]  # Cartesian (x, y)


@dataclass(frozen=True)
class BlurSpec:
    length: int = 31
    sigma: float = 5.0
    gain: float = 1.0
    kernel_csv: str | None = None
    noise_sigma: float = 0.0
    ridge: float = 0.0


@dataclass(frozen=True)
class Scenario:
    name: str
    scene: SceneConfig
    range_model: str = "approx"
    noise_sigma: float = 0.0
    grid: GridSpec = field(default_factory=GridSpec)
    spectrogram: SpectrogramSpec = field(default_factory=SpectrogramSpec)
    nulls: tuple[NullCase, ...] = ()
    blur: BlurSpec | None = None
    output_dir: str | None = None
    source: Path | None = None


def _obj(v, path) -> dict:
    if not isinstance(v, dict):
        raise ScenarioError(f"{path}: expected an object")
    return v


def _keys(d: dict, path: str, required=(), optional=()):
    unknown = sorted(set(d) - set(required) - set(optional))
    if unknown:
        raise ScenarioError(f"{path}: unknown key(s) {', '.join(map(repr, unknown))}")
    missing = [k for k in required if k not in d]
    if missing:
        raise ScenarioError(f"{path}: missing required key(s) {', '.join(map(repr, missing))}")


def _num(d, key, path, default=None, *, positive=False, nonneg=False, required=False) -> Any:
    if key not in d:
        if required:
            raise ScenarioError(f"{path}.{key}: required")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ScenarioError(f"{path}.{key}: expected a finite number, got {v!r}")
    if positive and not v > 0:
        raise ScenarioError(f"{path}.{key}: must be > 0, got {v}")
    if nonneg and v < 0:
        raise ScenarioError(f"{path}.{key}: must be >= 0, got {v}")
    return float(v)


def _int(d, key, path, default=None, *, minimum=1, required=False):
    if key not in d:
        if required:
            raise ScenarioError(f"{path}.{key}: required")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(f"{path}.{key}: expected an integer, got {v!r}")
    if v < minimum:
        raise ScenarioError(f"{path}.{key}: must be >= {minimum}, got {v}")
    return v


def _parse_scene(d, path="scene"):
    d = _obj(d, path)
    _keys(d, path, required=("carrier_hz", "omega_r", "R_a", "sample_count", "scatterers"),
          optional=("revolutions", "range_model", "noise_sigma"))
    sc = d["scatterers"]
    if not isinstance(sc, list):
        raise ScenarioError(f"{path}.scatterers: expected a list")
    scatterers = []
    for i, s in enumerate(sc):
        p = f"{path}.scatterers[{i}]"
        s = _obj(s, p)
        _keys(s, p, required=("r0", "theta0_deg", "amplitude"), optional=("z0",))
        scatterers.append(Scatterer.from_degrees(
            _num(s, "r0", p, nonneg=True, required=True),
            _num(s, "theta0_deg", p, required=True),
            _num(s, "z0", p, 0.0),
            _num(s, "amplitude", p, nonneg=True, required=True),
        ))
    model = d.get("range_model", "approx")
    if model not in ("approx", "exact"):
        raise ScenarioError(f"{path}.range_model: must be 'approx' or 'exact', got {model!r}")
    cfg = SceneConfig(
        carrier_hz=_num(d, "carrier_hz", path, positive=True, required=True),
        omega_r=_num(d, "omega_r", path, positive=True, required=True),
        R_a=_num(d, "R_a", path, positive=True, required=True),
        scatterers=tuple(scatterers),
        sample_count=_int(d, "sample_count", path, minimum=2, required=True),
        revolutions=_num(d, "revolutions", path, 1.0, positive=True),
    )
    return cfg, model, _num(d, "noise_sigma", path, 0.0, nonneg=True)


def _parse_grid(d, path="grid"):
    d = _obj(d, path)
    _keys(d, path, optional=("spacing", "half_width", "center", "peak_threshold_db",
                             "dynamic_range_db", "cut_step"))
    center = d.get("center", [0.0, 0.0])
    if (not isinstance(center, list) or len(center) != 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in center)):
        raise ScenarioError(f"{path}.center: expected [x, y]")
    return GridSpec(
        spacing=_num(d, "spacing", path, None, positive=True),
        half_width=_num(d, "half_width", path, None, positive=True),
        center=(float(center[0]), float(center[1])),
        peak_threshold_db=_num(d, "peak_threshold_db", path, -20.0),
        dynamic_range_db=_num(d, "dynamic_range_db", path, 60.0, positive=True),
        cut_step=_num(d, "cut_step", path, None, positive=True),
    )


def _parse_spectrogram(d, path="spectrogram"):
    d = _obj(d, path)
    _keys(d, path, optional=("window_len", "hop"))
    return SpectrogramSpec(_int(d, "window_len", path, 128, minimum=2), _int(d, "hop", path, None))


def _parse_nulls(v, path="nulls"):
    if not isinstance(v, list):
        raise ScenarioError(f"{path}: expected a list of null cases")
    cases = []
    for i, c in enumerate(v):
        p = f"{path}[{i}]"
        c = _obj(c, p)
        _keys(c, p, required=("targets",), optional=("name",))
        name = c.get("name", f"case{i}")
        if not isinstance(name, str) or not name or "/" in name:
            raise ScenarioError(f"{p}.name: expected a non-empty file-safe string")
        if not isinstance(c["targets"], list) or not c["targets"]:
            raise ScenarioError(f"{p}.targets: expected a non-empty list")
        targets = []
        for j, t in enumerate(c["targets"]):
            tp = f"{p}.targets[{j}]"
            t = _obj(t, tp)
            if "x" in t or "y" in t:
                _keys(t, tp, required=("x", "y"))
                targets.append((_num(t, "x", tp, required=True), _num(t, "y", tp, required=True)))
            else:
                _keys(t, tp, required=("r", "nu_deg"))
                r = _num(t, "r", tp, nonneg=True, required=True)
                nu = math.radians(_num(t, "nu_deg", tp, required=True))
                targets.append((r * math.cos(nu), r * math.sin(nu)))
        cases.append(NullCase(name, tuple(targets)))
    names = [c.name for c in cases]
    if len(set(names)) != len(names):
        raise ScenarioError(f"{path}: duplicate case names")
    return tuple(cases)


def _parse_blur(d, path="blur"):
    d = _obj(d, path)
    _keys(d, path, optional=("kernel", "noise_sigma", "ridge"))
    k = _obj(d.get("kernel", {}), f"{path}.kernel")
    kp = f"{path}.kernel"
    if "csv" in k:
        _keys(k, kp, required=("csv",))
        if not isinstance(k["csv"], str):
            raise ScenarioError(f"{kp}.csv: expected a path string")
        kw = dict(kernel_csv=k["csv"])
    else:
        _keys(k, kp, optional=("length", "sigma", "gain"))
        kw = dict(length=_int(k, "length", kp, 31), sigma=_num(k, "sigma", kp, 5.0, positive=True),
                  gain=_num(k, "gain", kp, 1.0))
        if kw["gain"] == 0:
            raise ScenarioError(f"{kp}.gain: must be non-zero")
    return BlurSpec(**kw, noise_sigma=_num(d, "noise_sigma", path, 0.0, nonneg=True),
                    ridge=_num(d, "ridge", path, 0.0, nonneg=True))


def parse_scenario(doc: Any, name: str = "scenario", source: Path | None = None) -> Scenario:
    doc = _obj(doc, "<root>")
    _keys(doc, "<root>", required=("scene",),
          optional=("name", "description", "grid", "spectrogram", "nulls", "blur", "output"))
    try:
        scene, model, noise = _parse_scene(doc["scene"])
    except ScenarioError:
        raise
    except ValueError as exc:  # domain validation from SceneConfig / Scatterer
        raise ScenarioError(f"scene: {exc}") from exc
    out = None
    if "output" in doc:
        o = _obj(doc["output"], "output")
        _keys(o, "output", optional=("dir",))
        out = o.get("dir")
        if out is not None and not isinstance(out, str):
            raise ScenarioError("output.dir: expected a string")
    nm = doc.get("name", name)
    if not isinstance(nm, str):
        raise ScenarioError("name: expected a string")
    if "description" in doc and not isinstance(doc["description"], str):
        raise ScenarioError("description: expected a string")
    return Scenario(
        name=nm,
        scene=scene,
        range_model=model,
        noise_sigma=noise,
        grid=_parse_grid(doc["grid"]) if "grid" in doc else GridSpec(),
        spectrogram=_parse_spectrogram(doc["spectrogram"]) if "spectrogram" in doc else SpectrogramSpec(),
        nulls=_parse_nulls(doc["nulls"]) if "nulls" in doc else (),
        blur=_parse_blur(doc["blur"]) if "blur" in doc else None,
        output_dir=out,
        source=source,
    )


BUNDLED = ("scenario1", "scenario2", "scenario3")


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("doptomo") / "scenarios" / f"{name}.json"))


def load_scenario(path_or_name: str | Path) -> Scenario:
    """Load a scenario from a JSON file, or a bundled one by name (``scenario1`` ...)."""
    p = Path(path_or_name)
    if not p.exists() and str(path_or_name) in BUNDLED:
        p = bundled_path(str(path_or_name))
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path_or_name}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_scenario(doc, name=p.stem, source=p)
