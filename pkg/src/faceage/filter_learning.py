"""Filter-bank learning: patch sampling, whitening and fixed-point ICA.

The bank is learned so that filter responses on natural image patches are
maximally statistically independent:

1. sample zero-mean patches,
2. PCA on the patch covariance, keeping the top n components,
3. whiten,
4. symmetric fixed-point ICA with the tanh contrast function and a seeded
   orthogonal start.

The returned filters are the composed (ICA x whitening) rows reshaped to
l x l, so applying them directly to raw patches yields decorrelated,
independence-maximized responses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptors import FilterBank
from .errors import NumericalError

MIN_PATCH_FACTOR = 20  # require m >= 20 * l**2 training patches
EIGENVALUE_FLOOR = 1e-10  # significance threshold relative to the largest
DEFAULT_PATCH_COUNT = 50_000
ICA_TOLERANCE = 1e-6
ICA_MAX_ITER = 1000
DECORRELATION_LIMIT = 0.05


@dataclass
class PatchSet:
    """m flattened l*l patches, each individually mean-subtracted."""

    data: np.ndarray  # (m, l*l) float64
    l: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1:
            raise ValueError("patch data must be a nonempty (m, l*l) array")
        if data.shape[1] != self.l * self.l:
            raise ValueError(f"patch length {data.shape[1]} does not match l={self.l}")
        if np.abs(data.mean(axis=1)).max() > 1e-9:
            raise ValueError("patches must be zero-mean")
        self.data = data

    @property
    def m(self) -> int:
        return self.data.shape[0]


def sample_patches(images: list[np.ndarray], l: int, m: int, seed: int) -> PatchSet:
    """Draw m patches at uniform random positions across the images
    (image chosen uniformly, then top-left corner uniformly), subtracting
    each patch's mean. Reproducible for a fixed seed."""
    if m < 1:
        raise ValueError("need at least one patch")
    if not images:
        raise ValueError("need at least one source image")
    for img in images:
        if img.shape[0] < l or img.shape[1] < l:
            raise ValueError(f"image {img.shape[1]}x{img.shape[0]} smaller than patch size {l}")
    rng = np.random.default_rng(seed)
    data = np.empty((m, l * l), dtype=np.float64)
    for t in range(m):
        img = images[int(rng.integers(len(images)))]
        y = int(rng.integers(img.shape[0] - l + 1))
        x = int(rng.integers(img.shape[1] - l + 1))
        patch = img[y : y + l, x : x + l].astype(np.float64).ravel()
        data[t] = patch - patch.mean()
    return PatchSet(data, l)


def _symmetric_orthogonalize(w: np.ndarray) -> np.ndarray:
    s, e = np.linalg.eigh(w @ w.T)
    if s[0] <= 0:
        raise NumericalError("unmixing matrix lost rank during orthogonalization")
    return (e / np.sqrt(s)) @ e.T @ w


def learn_filterbank(
    patches: PatchSet,
    n: int,
    seed: int,
    tol: float = ICA_TOLERANCE,
    max_iter: int = ICA_MAX_ITER,
    provenance: str | None = None,
) -> FilterBank:
    """Learn n filters of size l x l from the patch set.

    Raises NumericalError on rank deficiency (fewer than n significant
    eigenvalues), on non-convergence within max_iter sweeps, or when the
    learned responses fail the decorrelation check (off-diagonal sample
    correlations above 0.05).
    """
    l = patches.l
    d = l * l
    if n > d:
        raise ValueError(f"cannot learn {n} filters from {d}-dimensional patches")
    if patches.m < MIN_PATCH_FACTOR * d:
        raise ValueError(
            f"need at least {MIN_PATCH_FACTOR * d} patches for l={l}, got {patches.m}"
        )

    x = patches.data - patches.data.mean(axis=0)
    cov = (x.T @ x) / (patches.m - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals = eigvals[::-1]
    eigvecs = eigvecs[:, ::-1]
    if eigvals[0] <= 0 or (eigvals[:n] < EIGENVALUE_FLOOR * eigvals[0]).any():
        raise NumericalError(
            f"rank deficiency: fewer than {n} significant eigenvalues in the patch covariance"
        )
    whitener = (eigvecs[:, :n] / np.sqrt(eigvals[:n])).T  # (n, d)
    z = whitener @ x.T  # (n, m), identity covariance

    rng = np.random.default_rng(seed)
    w = _symmetric_orthogonalize(rng.standard_normal((n, n)))
    for _ in range(max_iter):
        wz = w @ z
        g = np.tanh(wz)
        g_prime_mean = (1.0 - g * g).mean(axis=1)
        w_new = (g @ z.T) / patches.m - g_prime_mean[:, None] * w
        w_new = _symmetric_orthogonalize(w_new)
        # Rows are sign-indeterminate; pin each to its predecessor so the
        # mean absolute change is a meaningful convergence measure.
        signs = np.sign(np.sum(w_new * w, axis=1))
        signs[signs == 0] = 1.0
        w_new *= signs[:, None]
        delta = np.abs(w_new - w).mean()
        w = w_new
        if delta < tol:
            break
    else:
        raise NumericalError(f"ICA did not converge within {max_iter} iterations (tol {tol})")

    filters = w @ whitener  # (n, d)
    responses = patches.data @ filters.T
    scaled = responses / responses.std(axis=0, ddof=1)
    sample_cov = (scaled.T @ scaled) / (patches.m - 1)
    off = sample_cov - np.diag(np.diag(sample_cov))
    worst = np.abs(off).max()
    if worst > DECORRELATION_LIMIT:
        raise NumericalError(
            f"learned responses are not decorrelated (max off-diagonal {worst:.3g})"
        )

    if provenance is None:
        provenance = f"learned l={l} n={n} m={patches.m} seed={seed}"
    return FilterBank(filters.reshape(n, l, l), provenance)
