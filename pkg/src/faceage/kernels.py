"""RBF kernel and Gram matrix helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KernelSpec:
    gamma: float
    kind: str = "rbf"

    def __post_init__(self):
        if self.kind != "rbf":
            raise ValueError(f"unsupported kernel kind {self.kind!r}")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError("gamma must be positive and finite")


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.exp(-gamma * np.dot(d, d)))


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = (a * a).sum(axis=1)
    nb = (b * b).sum(axis=1)
    d2 = na[:, None] + nb[None, :] - 2.0 * (a @ b.T)
    return np.maximum(d2, 0.0)


def gram(x: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    """Training Gram matrix, exactly symmetric with unit diagonal."""
    x = np.asarray(x, dtype=np.float64)
    k = np.exp(-kernel.gamma * _sq_dists(x, x))
    k = 0.5 * (k + k.T)
    np.fill_diagonal(k, 1.0)
    return k


def cross_gram(queries: np.ndarray, train: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    train = np.atleast_2d(np.asarray(train, dtype=np.float64))
    if queries.shape[1] != train.shape[1]:
        raise ValueError(
            f"dimension mismatch: queries have {queries.shape[1]} features, model has {train.shape[1]}"
        )
    return np.exp(-kernel.gamma * _sq_dists(queries, train))
