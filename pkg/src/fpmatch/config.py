"""Flat ``key = value`` configuration holding every tunable default."""

from __future__ import annotations

import configparser
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ConfigError

ENV_VAR = "FPMATCH_CONFIG"


@dataclass
class Config:
    # preprocessing
    block_size: int = 16
    var_threshold: float = 100.0
    target_mean: float = 128.0
    target_var: float = 2000.0
    # minutiae
    trace_len: int = 10
    edge_dist: int = 8
    break_dist: int = 6
    break_angle: int = 30
    spur_len: int = 9
    bridge_len: int = 9
    bridge_angle: int = 70
    hole_len: int = 16
    # cropping
    crop_rows: int = 4
    crop_cols: int = 5
    crop_size: int = 150
    # evaluation
    sweep: str = "0.0:0.2:0.001"
    masterprint_fraction: float = 0.04
    max_rank: int = 20

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.block_size < 4:
            raise ConfigError("block_size must be >= 4")
        if self.target_var <= 0:
            raise ConfigError("target_var must be > 0")
        if self.trace_len < 3:
            raise ConfigError("trace_len must be >= 3")
        for name in ("edge_dist", "break_dist", "spur_len", "bridge_len", "hole_len"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("break_angle", "bridge_angle"):
            if not 0 <= getattr(self, name) <= 180:
                raise ConfigError(f"{name} must lie in [0, 180]")
        if min(self.crop_rows, self.crop_cols, self.crop_size) < 1:
            raise ConfigError("crop_rows, crop_cols and crop_size must be >= 1")
        if not 0 < self.masterprint_fraction <= 1:
            raise ConfigError("masterprint_fraction must lie in (0, 1]")
        if self.max_rank < 1:
            raise ConfigError("max_rank must be >= 1")
        parse_sweep(self.sweep)

    def false_minutiae(self):
        from .minutiae import FalseMinutiaeConfig

        return FalseMinutiaeConfig(self.edge_dist, self.break_dist, self.break_angle, self.spur_len,
                                   self.bridge_len, self.bridge_angle, self.hole_len)

    def crop_spec(self):
        from .gallery import CropSpec

        return CropSpec(self.crop_rows, self.crop_cols, self.crop_size, self.crop_size)

    def as_dict(self) -> dict:
        return asdict(self)


def parse_sweep(text: str) -> list[float]:
    """``lo:hi:step`` -> ascending thresholds, inclusive of ``hi`` (to 1e-9)."""
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"sweep must look like lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise ConfigError(f"bad sweep range {text!r}")
    count = int((hi - lo) / step + 1e-9) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def load_config(path=None, **overrides) -> Config:
    """Read ``path`` (or ``$FPMATCH_CONFIG``); unknown keys are rejected."""
    values = {}
    path = path or os.environ.get(ENV_VAR)
    if path:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            text = Path(path).read_text(encoding="utf-8")
            parser.read_string("[fpmatch]\n" + text)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values.update(parser["fpmatch"])
    values.update({k: v for k, v in overrides.items() if v is not None})
    types = {f.name: f.type for f in fields(Config)}
    unknown = sorted(set(values) - set(types))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {}
    for key, raw in values.items():
        kind = {"int": int, "float": float, "str": str}[types[key]]
        if isinstance(raw, str):
            raw = raw.strip().strip('"').strip("'")
        try:
            kwargs[key] = kind(raw)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {raw!r} as {types[key]}") from None
    return Config(**kwargs)
