"""Kernel ridge regression, closed-form dual solve.

Targets are centered by their training mean before solving, so predictions
far from every training point fall back to the mean age instead of zero.
The system (K + lambda I) alpha = y_centered is solved by Cholesky
factorization; if that fails, escalating jitter (1e-10 up to 1e-4, tenfold
steps) is added to the diagonal before giving up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import NumericalError
from .kernels import KernelSpec, cross_gram, gram

JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)
RESIDUAL_BOUND = 1e-8


@dataclass
class KrrModel:
    kernel: KernelSpec
    lam: float
    train_x: np.ndarray  # (n, d)
    alpha: np.ndarray  # (n,)
    y_mean: float


def krr_fit(x: np.ndarray, y: np.ndarray, kernel: KernelSpec, lam: float) -> KrrModel:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] < 1 or x.shape[0] != y.shape[0]:
        raise ValueError("need matching, nonempty features and targets")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    k = gram(x, kernel)
    y_mean = float(y.mean())
    yc = y - y_mean
    n = x.shape[0]
    a = k + lam * np.eye(n)
    alpha = None
    for jitter in JITTERS:
        try:
            factor = cho_factor(a + jitter * np.eye(n) if jitter else a, lower=True)
        except LinAlgError:
            continue
        alpha = cho_solve(factor, yc)
        break
    if alpha is None:
        raise NumericalError(
            f"Gram matrix not positive definite even with jitter {JITTERS[-1]:g}"
        )
    residual = np.linalg.norm(a @ alpha - yc)
    if residual > RESIDUAL_BOUND * np.linalg.norm(yc) + 1e-12:
        raise NumericalError(f"ridge solve residual too large ({residual:.3g})")
    return KrrModel(kernel, lam, x, alpha, y_mean)


def krr_predict(model: KrrModel, queries: np.ndarray) -> np.ndarray:
    kq = cross_gram(queries, model.train_x, model.kernel)
    return model.y_mean + kq @ model.alpha
