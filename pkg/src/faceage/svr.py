"""Epsilon-insensitive support vector regression trained by sequential
minimal optimization.

The dual is solved in the stacked variable t = (a, a_star) with signs
u = (+1...,-1...):

    minimize    1/2 t' Qb t + p' t
    subject to  u' t = 0,   0 <= t_i <= C

where Qb[i, j] = u_i u_j K(x_i, x_j) and p = (eps - y, eps + y). The
regression coefficients are beta = a - a_star and the decision function is
f(x) = sum_i beta_i K(x_i, x) + b.

Working pairs are the first-order maximal violating pair: i maximizing
-u_i G_i over the up set, j minimizing it over the down set, where
G = Qb t + p is the gradient. The two-variable subproblem is solved
analytically and clipped to the box; the run stops when the violation gap
m - M falls to ``tol``. The bias comes from averaging over free variables,
or from the midpoint of the feasible interval when none are free.

Kernel rows are produced on demand and kept in a least-recently-used cache
sized by a memory budget, so the full Gram matrix is never required.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .kernels import KernelSpec, cross_gram

DEFAULT_TOL = 1e-3
DEFAULT_MAX_PAIR_UPDATES = 10_000_000
DEFAULT_CACHE_BUDGET = 256 << 20  # bytes of cached kernel rows
_TAU = 1e-12


@dataclass
class SvrModel:
    kernel: KernelSpec
    c: float
    epsilon: float
    sv_x: np.ndarray  # (n_sv, d)
    beta: np.ndarray  # (n_sv,) signed dual coefficients a_i - a_i*
    b: float
    # fit diagnostics, not persisted
    n_updates: int = 0
    kkt_gap: float = 0.0
    objective_trace: list[float] = field(default_factory=list)


class _KernelRowCache:
    def __init__(self, x: np.ndarray, kernel: KernelSpec, budget_bytes: int):
        self._x = x
        self._kernel = kernel
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()
        n = x.shape[0]
        self._max_rows = max(2, int(budget_bytes // max(8 * n, 1)))

    def row(self, i: int) -> np.ndarray:
        cached = self._rows.get(i)
        if cached is not None:
            self._rows.move_to_end(i)
            return cached
        row = cross_gram(self._x[i], self._x, self._kernel)[0]
        self._rows[i] = row
        if len(self._rows) > self._max_rows:
            self._rows.popitem(last=False)
        return row


def svr_fit(
    x: np.ndarray,
    y: np.ndarray,
    kernel: KernelSpec,
    c: float,
    epsilon: float,
    tol: float = DEFAULT_TOL,
    max_pair_updates: int = DEFAULT_MAX_PAIR_UPDATES,
    cache_budget_bytes: int = DEFAULT_CACHE_BUDGET,
    record_objective: bool = False,
) -> SvrModel:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n = x.shape[0]
    if n < 2 or n != y.shape[0]:
        raise ValueError("need at least 2 samples with matching targets")
    if c <= 0:
        raise ValueError("C must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if tol <= 0:
        raise ValueError("tol must be positive")

    cache = _KernelRowCache(x, kernel, cache_budget_bytes)
    u = np.concatenate((np.ones(n), -np.ones(n)))
    p = np.concatenate((epsilon - y, epsilon + y))
    t = np.zeros(2 * n)
    grad = p.copy()
    qdiag = np.ones(2 * n)  # rbf(x, x) = 1

    def qrow(i: int) -> np.ndarray:
        kr = cache.row(i % n)
        sign = 1.0 if i < n else -1.0
        return np.concatenate((sign * kr, -sign * kr))

    trace: list[float] = []
    if record_objective:
        trace.append(-0.5 * float(t @ (grad + p)))

    updates = 0
    gap = np.inf
    while True:
        minus_ug = -u * grad
        up_mask = ((t < c) & (u > 0)) | ((t > 0) & (u < 0))
        low_mask = ((t < c) & (u < 0)) | ((t > 0) & (u > 0))
        up_scores = np.where(up_mask, minus_ug, -np.inf)
        low_scores = np.where(low_mask, minus_ug, np.inf)
        i = int(np.argmax(up_scores))
        j = int(np.argmin(low_scores))
        gap = up_scores[i] - low_scores[j]
        if gap <= tol:
            break
        if updates >= max_pair_updates:
            raise NumericalError(
                f"SMO exceeded {max_pair_updates} pair updates (violation gap {gap:.3g})"
            )

        qi = qrow(i)
        qj = qrow(j)
        old_ti, old_tj = t[i], t[j]
        if u[i] != u[j]:
            quad = qdiag[i] + qdiag[j] + 2.0 * qi[j]
            if quad <= 0:
                quad = _TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = old_ti - old_tj
            t[i] += delta
            t[j] += delta
            if diff > 0:
                if t[j] < 0:
                    t[j] = 0.0
                    t[i] = diff
            else:
                if t[i] < 0:
                    t[i] = 0.0
                    t[j] = -diff
            if diff > 0:
                if t[i] > c:
                    t[i] = c
                    t[j] = c - diff
            else:
                if t[j] > c:
                    t[j] = c
                    t[i] = c + diff
        else:
            quad = qdiag[i] + qdiag[j] - 2.0 * qi[j]
            if quad <= 0:
                quad = _TAU
            delta = (grad[i] - grad[j]) / quad
            total = old_ti + old_tj
            t[i] -= delta
            t[j] += delta
            if total > c:
                if t[i] > c:
                    t[i] = c
                    t[j] = total - c
            else:
                if t[j] < 0:
                    t[j] = 0.0
                    t[i] = total
            if total > c:
                if t[j] > c:
                    t[j] = c
                    t[i] = total - c
            else:
                if t[i] < 0:
                    t[i] = 0.0
                    t[j] = total

        grad += qi * (t[i] - old_ti) + qj * (t[j] - old_tj)
        updates += 1
        if record_objective:
            trace.append(-0.5 * float(t @ (grad + p)))

    b = -_rho(t, grad, u, c)
    beta = t[:n] - t[n:]
    nz = beta != 0.0
    model = SvrModel(
        kernel,
        c,
        epsilon,
        x[nz].copy(),
        beta[nz].copy(),
        float(b),
        n_updates=updates,
        kkt_gap=float(max(gap, 0.0)),
    )
    model.objective_trace = trace
    return model


def _rho(t: np.ndarray, grad: np.ndarray, u: np.ndarray, c: float) -> float:
    ug = u * grad
    free = (t > 0) & (t < c)
    if free.any():
        return float(ug[free].mean())
    at_upper = t >= c
    at_lower = t <= 0
    ub_mask = (at_upper & (u < 0)) | (at_lower & (u > 0))
    lb_mask = (at_upper & (u > 0)) | (at_lower & (u < 0))
    ub = ug[ub_mask].min() if ub_mask.any() else np.inf
    lb = ug[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2.0)


def svr_predict(model: SvrModel, queries: np.ndarray) -> np.ndarray:
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if model.sv_x.shape[0] == 0:
        return np.full(queries.shape[0], model.b)
    kq = cross_gram(queries, model.sv_x, model.kernel)
    return kq @ model.beta + model.b
