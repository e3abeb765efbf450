"""Run configuration shared by the CLI commands.

Configs load from a plain ``key = value`` text file (``:`` also accepted,
``#`` comments). Unknown keys are rejected. List-valued keys take
comma-separated numbers. A relative ``bank`` path is resolved against the
config file's directory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import DataError
from .geometry import CANONICAL_HEIGHT, CANONICAL_WIDTH, RoiRatios
from .model_select import (
    DEFAULT_CS,
    DEFAULT_EPSILONS,
    DEFAULT_FOLDS,
    DEFAULT_GAMMAS,
    DEFAULT_LAMBDAS,
    HyperGrid,
)


@dataclass
class RunConfig:
    canonical_width: int = CANONICAL_WIDTH
    canonical_height: int = CANONICAL_HEIGHT
    grid_rows: int = 4
    grid_cols: int = 3
    roi: RoiRatios = field(default_factory=RoiRatios)
    bank_path: str | None = None
    use_lbp: bool = True
    use_bsif: bool = True
    algorithm: str = "krr"
    gammas: tuple[float, ...] = DEFAULT_GAMMAS
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    cs: tuple[float, ...] = DEFAULT_CS
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    folds: int = DEFAULT_FOLDS
    seed: int = 0

    def __post_init__(self):
        if self.canonical_width < 3 or self.canonical_height < 3:
            raise ValueError("canonical size too small")
        if self.algorithm not in ("krr", "svr"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not (self.use_lbp or self.use_bsif):
            raise ValueError("at least one descriptor must be enabled")

    def hypergrid(self) -> HyperGrid:
        return HyperGrid(
            gammas=self.gammas,
            lambdas=self.lambdas,
            cs=self.cs,
            epsilons=self.epsilons,
            folds=self.folds,
            seed=self.seed,
        )


def _parse_float_list(value: str, key: str) -> tuple[float, ...]:
    try:
        values = tuple(float(t) for t in value.split(","))
    except ValueError:
        raise DataError(f"config key {key!r}: bad number list {value!r}") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise DataError(f"config key {key!r}: values must be finite and nonempty")
    return values


def _parse_bool(value: str, key: str) -> bool:
    low = value.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise DataError(f"config key {key!r}: bad boolean {value!r}")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    cfg = RunConfig()
    roi = {"k1": cfg.roi.k1, "k2": cfg.roi.k2, "k3": cfg.roi.k3}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, _, value = line.partition(sep)
                break
        else:
            raise DataError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key = key.strip()
        value = value.strip()
        try:
            if key in ("canonical_width", "canonical_height", "grid_rows", "grid_cols", "folds", "seed"):
                cfg = replace(cfg, **{key: int(value)})
            elif key in ("k1", "k2", "k3"):
                roi[key] = float(value)
            elif key == "bank":
                bank = Path(value)
                if not bank.is_absolute():
                    bank = path.parent / bank
                cfg = replace(cfg, bank_path=str(bank))
            elif key == "descriptors":
                names = {t.strip() for t in value.split(",") if t.strip()}
                unknown = names - {"lbp", "bsif"}
                if unknown or not names:
                    raise DataError(f"{path}:{lineno}: descriptors must be lbp and/or bsif")
                cfg = replace(cfg, use_lbp="lbp" in names, use_bsif="bsif" in names)
            elif key == "algorithm":
                cfg = replace(cfg, algorithm=value)
            elif key in ("gammas", "lambdas", "cs", "epsilons"):
                cfg = replace(cfg, **{key: _parse_float_list(value, key)})
            elif key in ("use_lbp", "use_bsif"):
                cfg = replace(cfg, **{key: _parse_bool(value, key)})
            else:
                raise DataError(f"{path}:{lineno}: unknown config key {key!r}")
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    try:
        cfg = replace(cfg, roi=RoiRatios(roi["k1"], roi["k2"], roi["k3"]))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return cfg
