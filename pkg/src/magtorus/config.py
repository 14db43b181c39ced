"""Versioned JSON run configuration."""
from __future__ import annotations

import json
import math
import re
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .graph import GridSpec

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Strict):
    n: int = Field(64, ge=8)
    h_time: float = Field(1.0 / 32.0, gt=0)
    windings: int = Field(1, ge=1)
    speed_cap: Optional[float] = Field(None, ge=0)

    def spec(self, alpha_estimate: float) -> GridSpec:
        cap = self.speed_cap
        if cap is None:
            cap = 2.0 * math.sqrt(2.0 * max(alpha_estimate, 0.0)) + 1.0
        return GridSpec(self.n, cap, self.h_time, self.windings)


class ExampleLagrangian(_Strict):
    f_kind: Literal["two_well", "single_well", "cantor_stage"]
    params: dict[str, Union[float, list[float]]] = Field(default_factory=dict)
    cantor_stage: int = Field(0, ge=0, le=6)


class OneFormLagrangian(_Strict):
    oneform: dict


class SweepConfig(_Strict):
    seed: int = 0
    num_perturbations: int = Field(4, ge=0)
    amplitude: float = Field(0.05, ge=0)
    fourier_degree: int = Field(2, ge=1)
    classes: list[tuple[float, float]] = Field(default_factory=lambda: [(0.0, 0.0)])
    workers: int = Field(1, ge=1)


class Tolerances(_Strict):
    tol_zero_rel: float = Field(1e-9, gt=0)
    bisection_tol: float = Field(1e-9, gt=0)
    # defaults derived from the grid when left unset
    eps_lift: Optional[float] = Field(None, gt=0)
    eps_aubry: Optional[float] = Field(None, gt=0)
    eps_class: Optional[float] = Field(None, gt=0)
    weight_floor: float = Field(1e-12, gt=0)
    static_T: float = Field(10.0, gt=0)
    static_h: float = Field(1e-3, gt=0)
    audit_curves: int = Field(32, ge=0)


class IntegrateConfig(_Strict):
    x0: Optional[float] = None
    y0: float = 0.0
    v1: float = 0.0
    v2: Optional[float] = None
    T: float = Field(10.0, gt=0)
    h: float = Field(1e-3, gt=0)
    backward: bool = False


class AlphaConfig(_Strict):
    classes_grid: tuple[int, int] = (5, 5)
    radius: float = Field(0.5, ge=0)
    method: Literal["auto", "karp", "howard"] = "auto"
    bisection: bool = False


class RunConfig(_Strict):
    version: int = CONFIG_VERSION
    grid: GridConfig = Field(default_factory=GridConfig)
    potential_grid: Optional[GridConfig] = Field(
        default_factory=lambda: GridConfig(n=32, h_time=1.0 / 32.0))
    lagrangian: Union[ExampleLagrangian, OneFormLagrangian]
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    integrate: IntegrateConfig = Field(default_factory=IntegrateConfig)
    alpha: AlphaConfig = Field(default_factory=AlphaConfig)
    refine: bool = True
    seed: int = 0

    @field_validator("version")
    @classmethod
    def _known_version(cls, v):
        if v != CONFIG_VERSION:
            raise ValueError(f"unsupported config version {v}; expected {CONFIG_VERSION}")
        return v


def _line_of(text: str, loc) -> int | None:
    pos, found = 0, None
    for part in loc:
        if not isinstance(part, str):
            continue
        m = re.search(r'"%s"\s*:' % re.escape(part), text[pos:])
        if m is None:
            break
        pos += m.start()
        found = text.count("\n", 0, pos) + 1
    return found


def _set_path(data: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {dotted!r} descends into a non-object")
    node[keys[-1]] = value


def parse_override(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like key.path=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse and validate; errors carry the offending line where possible."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("line 1: config must be a JSON object")
    for key, value in (overrides or {}).items():
        _set_path(data, key, value)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            where = ".".join(str(p) for p in err["loc"])
            line = _line_of(text, err["loc"])
            prefix = f"line {line}: " if line else ""
            lines.append(f"{prefix}{where}: {err['msg']}")
        raise ConfigError("\n".join(lines)) from None


def load_config_file(path, overrides: dict | None = None) -> RunConfig:
    with open(path) as fh:
        return load_config(fh.read(), overrides)
