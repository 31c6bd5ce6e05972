"""Declarative model files.

A model file is TOML with a required ``[model]`` table and optional
``[grid]``, ``[solver]``, ``[density]`` and ``[simulation]`` tables::

    [model]
    name = "logistic"
    drift = [1.0, 1.0, -0.1]          # ascending coefficients of f
    diffusion_sq = [0.0, 0.0, 2.0]    # ascending coefficients of g^2

    [model.levy]                      # optional; kind = none by default
    kind = "variance_gamma"           # or "compensated_gamma"
    a = 5.0
    b = 5.0
    sigma = 1.0                       # variance_gamma only

    [grid]
    h = 1.0
    q = 30
    substeps = 256

Unknown keys are rejected by name.
"""

from __future__ import annotations

import dataclasses
import math
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import sdp
from .collocation import FrequencyGrid
from .model import PolynomialSde, levy_from_dict
from .montecarlo import SimConfig


class ModelFileError(ValueError):
    """A model file could not be parsed; the message names the offending key."""


_LEVY_KEYS = {
    "none": set(),
    "compensated_gamma": {"a", "b"},
    "variance_gamma": {"a", "b", "sigma"},
}
_GRID_KEYS = {"h", "q", "substeps"}
_DENSITY_KEYS = {"x_min", "x_max", "points"}
_SOLVER_KEYS = {f.name for f in dataclasses.fields(sdp.Settings)}
_SIM_KEYS = {f.name for f in dataclasses.fields(SimConfig)}


@dataclasses.dataclass(frozen=True)
class DensityRange:
    x_min: float | None = None
    x_max: float | None = None
    points: int = 801


@dataclasses.dataclass(frozen=True)
class ModelFile:
    name: str
    model: PolynomialSde
    grid: FrequencyGrid | None = None
    solver: sdp.Settings = dataclasses.field(default_factory=sdp.Settings)
    density: DensityRange = dataclasses.field(default_factory=DensityRange)
    simulation: dict = dataclasses.field(default_factory=dict)
    source: str = ""

    def sim_config(self, **overrides) -> SimConfig:
        kw = {**self.simulation, **{k: v for k, v in overrides.items() if v is not None}}
        try:
            return SimConfig(**kw)
        except (TypeError, ValueError) as exc:
            raise ModelFileError(f"simulation: {exc}") from None


def builtin_models() -> list[str]:
    root = resources.files("cfbounds") / "models"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve(path_or_name: str | Path) -> Path | resources.abc.Traversable:
    """A model file path, falling back to the shipped model of that name."""
    p = Path(path_or_name)
    if p.exists():
        return p
    stem = p.name[:-5] if p.name.endswith(".toml") else p.name
    candidate = resources.files("cfbounds") / "models" / f"{stem}.toml"
    if candidate.is_file():
        return candidate
    raise ModelFileError(f"model file {str(path_or_name)!r} not found "
                         f"(shipped models: {', '.join(builtin_models())})")


def load(path_or_name: str | Path) -> ModelFile:
    src = resolve(path_or_name)
    text = src.read_text(encoding="utf-8")
    return loads(text, source=str(path_or_name))


def loads(text: str, source: str = "<string>") -> ModelFile:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ModelFileError(f"{source}: invalid TOML: {exc}") from None
    _reject_unknown(doc, {"model", "grid", "solver", "density", "simulation"}, "")
    if "model" not in doc:
        raise ModelFileError(f"{source}: missing required table 'model'")
    m = _table(doc, "model")
    _reject_unknown(m, {"name", "drift", "diffusion_sq", "levy"}, "model.")
    name = m.get("name", Path(source).stem)
    if not isinstance(name, str):
        raise ModelFileError("key 'model.name' must be a string")
    drift = _coeffs(m, "drift")
    diff = _coeffs(m, "diffusion_sq")
    levy_d = _table(m, "levy", prefix="model.") if "levy" in m else {}
    kind = levy_d.get("kind", "none")
    if kind not in _LEVY_KEYS:
        raise ModelFileError(f"key 'model.levy.kind' has unknown value {kind!r}")
    _reject_unknown(levy_d, _LEVY_KEYS[kind] | {"kind"}, "model.levy.")
    for key in _LEVY_KEYS[kind]:
        if key not in levy_d:
            raise ModelFileError(f"missing key 'model.levy.{key}' for kind {kind!r}")
        _number(levy_d, key, "model.levy.")
    try:
        levy = levy_from_dict(levy_d)
        model = PolynomialSde(drift, diff, levy)
    except ValueError as exc:
        raise ModelFileError(f"key 'model': {exc}") from None

    grid = None
    if "grid" in doc:
        g = _table(doc, "grid")
        _reject_unknown(g, _GRID_KEYS, "grid.")
        for key in ("h", "q"):
            if key not in g:
                raise ModelFileError(f"missing key 'grid.{key}'")
        try:
            grid = FrequencyGrid(float(_number(g, "h", "grid.")), _integer(g, "q", "grid."),
                                 _integer(g, "substeps", "grid.") if "substeps" in g else 1)
        except ValueError as exc:
            raise ModelFileError(f"key 'grid': {exc}") from None

    solver = sdp.Settings()
    if "solver" in doc:
        s = _table(doc, "solver")
        _reject_unknown(s, _SOLVER_KEYS, "solver.")
        for key in s:
            _number(s, key, "solver.")
        solver = dataclasses.replace(solver, **s)

    density = DensityRange()
    if "density" in doc:
        d = _table(doc, "density")
        _reject_unknown(d, _DENSITY_KEYS, "density.")
        for key in d:
            _number(d, key, "density.")
        density = DensityRange(d.get("x_min"), d.get("x_max"),
                               _integer(d, "points", "density.") if "points" in d else 801)

    sim = {}
    if "simulation" in doc:
        sim = dict(_table(doc, "simulation"))
        _reject_unknown(sim, _SIM_KEYS, "simulation.")
        for key, v in sim.items():
            if key != "positive":
                _number(sim, key, "simulation.")
        try:
            SimConfig(**sim)
        except ValueError as exc:
            raise ModelFileError(f"key 'simulation': {exc}") from None

    return ModelFile(name, model, grid, solver, density, sim, source)


def _table(d: dict, key: str, prefix: str = "") -> dict:
    v = d[key]
    if not isinstance(v, dict):
        raise ModelFileError(f"key '{prefix}{key}' must be a table")
    return v


def _reject_unknown(d: dict, allowed: set, prefix: str) -> None:
    for key in d:
        if key not in allowed:
            raise ModelFileError(f"unknown key '{prefix}{key}'")


def _coeffs(m: dict, key: str) -> tuple[float, ...]:
    v = m.get(key, [])
    if not isinstance(v, list) or not all(
        isinstance(c, (int, float)) and not isinstance(c, bool) for c in v
    ):
        raise ModelFileError(f"key 'model.{key}' must be an array of numbers")
    if not all(math.isfinite(c) for c in v):
        raise ModelFileError(f"key 'model.{key}' has non-finite entries")
    return tuple(float(c) for c in v)


def _number(d: dict, key: str, prefix: str):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ModelFileError(f"key '{prefix}{key}' must be a finite number, got {v!r}")
    return v


def _integer(d: dict, key: str, prefix: str) -> int:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ModelFileError(f"key '{prefix}{key}' must be an integer, got {v!r}")
    return v
