"""JSON run configuration: loading and validation.

Unknown keys are rejected at every level. ``params`` is required; the other
sections fall back to the reference scenario defaults (x0 = (50, 4, 0.01) over
20 months on 2000 steps, zero fixed controls, both controls optimised).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .dynamics import ControlPair, ModelParams, SirState
from .numerics import TimeGrid
from .optctl import STRATEGY_CHANNELS, CostWeights, OcOptions

BUNDLED = ("table2.json", "figure1.json")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    weights: CostWeights = CostWeights(0.01, 0.08, 0.8, 0.1)
    initial: SirState = SirState(50.0, 4.0, 0.01)
    grid: TimeGrid = TimeGrid(0.0, 20.0, 2000)
    controls: ControlPair = ControlPair(0.0, 0.0)
    strategy: str = "both"
    oc_options: OcOptions = OcOptions()
    output: str = "out/run"
    r0_grid: Optional[tuple[float, ...]] = None


def _number(section: str, key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, got {value!r}")
    return float(value)


def _build(cls, section: str, raw: Any, *, all_required: bool = True, ints=()):
    if not isinstance(raw, dict):
        raise ConfigError(f"{section}: expected an object, got {type(raw).__name__}")
    names = [f.name for f in fields(cls)]
    unknown = sorted(set(raw) - set(names))
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(unknown)}")
    if all_required:
        missing = [k for k in names if k not in raw]
        if missing:
            raise ConfigError(f"{section}: missing required key(s) {', '.join(missing)}")
    kwargs = {}
    for key, value in raw.items():
        if key in ints:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{section}.{key}: expected an integer, got {value!r}")
            kwargs[key] = value
        else:
            kwargs[key] = _number(section, key, value)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        field = next((k for k in names if str(exc).startswith(k + " ")), None)
        where = f"{section}.{field}" if field else section
        raise ConfigError(f"{where}: {exc}") from None


def _r0_grid(raw: Any) -> tuple[float, ...]:
    if isinstance(raw, dict):
        unknown = sorted(set(raw) - {"start", "stop", "num"})
        if unknown:
            raise ConfigError(f"r0_grid: unknown key(s) {', '.join(unknown)}")
        try:
            start = _number("r0_grid", "start", raw["start"])
            stop = _number("r0_grid", "stop", raw["stop"])
            num = raw["num"]
        except KeyError as exc:
            raise ConfigError(f"r0_grid: missing required key {exc.args[0]}") from None
        if isinstance(num, bool) or not isinstance(num, int) or num < 1:
            raise ConfigError(f"r0_grid.num: expected a positive integer, got {num!r}")
        values = tuple(float(v) for v in np.linspace(start, stop, num))
    elif isinstance(raw, list):
        values = tuple(_number("r0_grid", str(i), v) for i, v in enumerate(raw))
    else:
        raise ConfigError("r0_grid: expected a list or an object with start/stop/num")
    if not values or any(not v > 0 for v in values):
        raise ConfigError("r0_grid: values must be positive")
    return values


def parse_config(raw: Any) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    allowed = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {', '.join(unknown)}")
    if "params" not in raw:
        raise ConfigError("missing required key params")

    kw: dict[str, Any] = {"params": _build(ModelParams, "params", raw["params"])}
    if "weights" in raw:
        kw["weights"] = _build(CostWeights, "weights", raw["weights"])
    if "initial" in raw:
        kw["initial"] = _build(SirState, "initial", raw["initial"])
    if "grid" in raw:
        kw["grid"] = _build(TimeGrid, "grid", raw["grid"], ints=("n",))
    if "controls" in raw:
        kw["controls"] = _build(ControlPair, "controls", raw["controls"])
    if "oc_options" in raw:
        kw["oc_options"] = _build(OcOptions, "oc_options", raw["oc_options"],
                                  all_required=False, ints=("max_iter",))
    if "strategy" in raw:
        if raw["strategy"] not in STRATEGY_CHANNELS:
            raise ConfigError(f"strategy: expected one of {sorted(STRATEGY_CHANNELS)}, "
                              f"got {raw['strategy']!r}")
        kw["strategy"] = raw["strategy"]
    if "output" in raw:
        if not isinstance(raw["output"], str) or not raw["output"]:
            raise ConfigError("output: expected a non-empty path prefix")
        kw["output"] = raw["output"]
    if "r0_grid" in raw:
        kw["r0_grid"] = _r0_grid(raw["r0_grid"])
    return RunConfig(**kw)


def bundled_config_path(name: str) -> Path:
    if name not in BUNDLED:
        raise ConfigError(f"no bundled config named {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(str(resources.files("sirsat") / "data" / name))


def load_config(path) -> RunConfig:
    """Read and validate a JSON config.

    A bare bundled name (``table2.json``, ``figure1.json``) that does not
    exist as a local file resolves to the copy shipped with the package.
    """
    path = Path(path)
    if not path.exists() and str(path) in BUNDLED:
        path = bundled_config_path(str(path))
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw)
