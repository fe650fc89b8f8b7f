"""JSON run configurations.

Numbers may be JSON numbers, decimal strings or ``"p/q"`` strings; strings
are parsed exactly and converted to binary floating point once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .core import InterpolationProblem
from .errors import MalformedInput, ResourceLimit
from .scaling import ScalingFunction

SCHEMA_VERSION = 1
MAX_K = 14
MAX_GRID_LEVEL_POINTS = 60_000_000
BUNDLED = ("example5_1", "collinear", "constant_s")


@dataclass
class RunConfig:
    problem: InterpolationProblem
    name: str = "problem"
    tol_spectral: float = 1e-10
    bracket_width: float = 1e-4
    tol_grid: float = 1e-12
    k_max: int = 8
    grid_level: int | None = None
    sample_level: int = 8
    slope_window: tuple | None = None
    margin: int = 6
    out_dir: str = "fifdim-out"
    format: str = "both"
    raw: dict = field(default_factory=dict, repr=False)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        check_levels(cfg)
        return cfg


def check_levels(cfg: RunConfig) -> None:
    n = cfg.problem.n
    if not 1 <= cfg.k_max <= MAX_K or n ** (cfg.k_max + 1) > 10 ** 8:
        raise ResourceLimit(f"k_max = {cfg.k_max} outside resource caps for N = {n}")
    for lv in (cfg.grid_level, cfg.sample_level):
        if lv is not None and (lv < 1 or n ** lv + 1 > MAX_GRID_LEVEL_POINTS):
            raise ResourceLimit(f"grid level {lv} outside resource caps for N = {n}")
    if cfg.format not in ("json", "csv", "both"):
        raise MalformedInput(f"unknown output format {cfg.format!r}")
    if cfg.slope_window is not None:
        lo, hi = cfg.slope_window
        if lo < 1 or hi < lo:
            raise MalformedInput(f"bad slope window {cfg.slope_window}")


def _get(d: dict, key: str, kind=None, default=None):
    if key not in d:
        return default
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise MalformedInput(f"field {key!r} has wrong type {type(v).__name__}")
    return v


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise MalformedInput("config must be a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise MalformedInput(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    prob = _get(data, "problem", dict)
    if prob is None:
        raise MalformedInput("missing 'problem' section")
    sc = _get(prob, "scaling", dict)
    if sc is None:
        raise MalformedInput("missing 'problem.scaling' section")
    try:
        knots, values = prob["knots"], prob["values"]
        breaks, coeffs = sc["breaks"], sc["coeffs"]
    except KeyError as exc:
        raise MalformedInput(f"missing field {exc.args[0]!r}") from exc
    if not all(isinstance(x, list) for x in (knots, values, breaks, coeffs)):
        raise MalformedInput("knots, values, breaks and coeffs must be arrays")
    scaling = ScalingFunction.from_pieces(breaks, coeffs, sc.get("lipschitz"))
    problem = InterpolationProblem.create(knots, values, scaling)

    tol = _get(data, "tolerances", dict, {})
    lev = _get(data, "levels", dict, {})
    out = _get(data, "output", dict, {})
    window = lev.get("slope_window")
    cfg = RunConfig(
        problem=problem,
        name=str(data.get("name", "problem")),
        tol_spectral=float(tol.get("spectral", 1e-10)),
        bracket_width=float(tol.get("bracket_width", 1e-4)),
        tol_grid=float(tol.get("grid", 1e-12)),
        k_max=int(lev.get("k_max", 8)),
        grid_level=None if lev.get("grid_level") is None else int(lev["grid_level"]),
        sample_level=int(lev.get("sample_level", 8)),
        slope_window=None if window is None else (int(window[0]), int(window[1])),
        margin=int(lev.get("margin", 6)),
        out_dir=str(out.get("dir", "fifdim-out")),
        format=str(out.get("format", "both")),
        raw=data,
    )
    for name in ("tol_spectral", "bracket_width", "tol_grid"):
        if not getattr(cfg, name) > 0:
            raise MalformedInput(f"tolerance {name} must be positive")
    check_levels(cfg)
    return cfg


def bundled_path(name: str):
    return resources.files("fifdim") / "data" / f"{name}.json"


def load_config(path: str | Path) -> RunConfig:
    """Load a config file; a bare bundled name such as ``example5_1`` also works."""
    p = Path(path)
    if p.exists():
        text = p.read_text()
    else:
        stem = p.name[:-5] if p.name.endswith(".json") else p.name
        if stem not in BUNDLED:
            raise MalformedInput(f"config file {str(path)!r} not found")
        text = bundled_path(stem).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON: {exc}") from exc
    return parse_config(data)
