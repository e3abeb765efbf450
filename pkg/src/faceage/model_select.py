"""Hyperparameter search by seeded k-fold cross-validation.

Fold assignment shuffles sample indices with the splitmix64 Fisher-Yates
shuffle and cuts the shuffled order into k contiguous chunks (the first
n mod k chunks get one extra sample), so fold membership is identical on
every platform for a given seed. Cell score is the mean validation MAE over
folds; ties prefer the smoother model (larger lambda or smaller C, then
smaller gamma, then larger epsilon).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .kernels import KernelSpec
from .krr import krr_fit, krr_predict
from .rng import shuffled
from .svr import svr_fit, svr_predict

DEFAULT_GAMMAS = tuple(2.0**e for e in range(-15, -4, 2))  # 2^-15 .. 2^-5
DEFAULT_LAMBDAS = tuple(2.0**e for e in range(-12, 1))  # 2^-12 .. 2^0
DEFAULT_CS = tuple(2.0**e for e in range(-1, 8))  # 2^-1 .. 2^7
DEFAULT_EPSILONS = (0.5, 1.0, 2.0)  # years
DEFAULT_FOLDS = 5


@dataclass(frozen=True)
class HyperGrid:
    gammas: tuple[float, ...] = DEFAULT_GAMMAS
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    cs: tuple[float, ...] = DEFAULT_CS
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    folds: int = DEFAULT_FOLDS
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")


@dataclass
class CvResult:
    best: dict[str, float]
    best_mae: float
    scores: list[tuple[dict[str, float], float]]


def kfold_indices(n: int, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= folds <= samples, got k={k}, n={n}")
    order = shuffled(range(n), seed)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for f in range(k):
        size = base + (1 if f < extra else 0)
        val = np.array(sorted(order[start : start + size]), dtype=np.int64)
        train = np.array(sorted(order[:start] + order[start + size :]), dtype=np.int64)
        folds.append((train, val))
        start += size
    return folds


def _cells(grid: HyperGrid, algo: str) -> list[dict[str, float]]:
    if algo == "krr":
        if not grid.gammas or not grid.lambdas:
            raise ValueError("empty grid: krr needs gammas and lambdas")
        return [{"gamma": g, "lambda": lam} for g, lam in product(grid.gammas, grid.lambdas)]
    if algo == "svr":
        if not grid.gammas or not grid.cs or not grid.epsilons:
            raise ValueError("empty grid: svr needs gammas, cs and epsilons")
        return [
            {"gamma": g, "C": c, "epsilon": e}
            for g, c, e in product(grid.gammas, grid.cs, grid.epsilons)
        ]
    raise ValueError(f"unknown algorithm {algo!r}")


def fit_cell(x: np.ndarray, y: np.ndarray, cell: dict[str, float], algo: str):
    kernel = KernelSpec(gamma=cell["gamma"])
    if algo == "krr":
        return krr_fit(x, y, kernel, cell["lambda"])
    return svr_fit(x, y, kernel, cell["C"], cell["epsilon"])


def predict_cell(model, queries: np.ndarray, algo: str) -> np.ndarray:
    if algo == "krr":
        return krr_predict(model, queries)
    return svr_predict(model, queries)


def _tie_break_key(cell: dict[str, float], mean_mae: float, algo: str):
    if algo == "krr":
        return (mean_mae, -cell["lambda"], cell["gamma"])
    return (mean_mae, cell["C"], cell["gamma"], -cell["epsilon"])


def cross_validate(x: np.ndarray, y: np.ndarray, grid: HyperGrid, algo: str) -> CvResult:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n = x.shape[0]
    if grid.folds > n:
        raise ValueError(f"more folds ({grid.folds}) than samples ({n})")
    cells = _cells(grid, algo)
    folds = kfold_indices(n, grid.folds, grid.seed)
    scores: list[tuple[dict[str, float], float]] = []
    best_cell = None
    best_key = None
    for cell in cells:
        fold_maes = []
        for train_idx, val_idx in folds:
            model = fit_cell(x[train_idx], y[train_idx], cell, algo)
            pred = predict_cell(model, x[val_idx], algo)
            fold_maes.append(float(np.mean(np.abs(pred - y[val_idx]))))
        mean_mae = float(np.mean(fold_maes))
        scores.append((cell, mean_mae))
        key = _tie_break_key(cell, mean_mae, algo)
        if best_key is None or key < best_key:
            best_key = key
            best_cell = cell
    return CvResult(dict(best_cell), best_key[0], scores)
