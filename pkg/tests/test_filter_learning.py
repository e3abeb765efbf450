import numpy as np
import pytest

from faceage.errors import NumericalError
from faceage.filter_learning import PatchSet, learn_filterbank, sample_patches


def _mixed_source_patches(m=8000, l=3, n_sources=4, seed=7):
    """Patches that are linear mixtures of known independent sources; the
    mixing rows are zero-mean so every patch is spatially zero-mean."""
    rng = np.random.default_rng(seed)
    sources = rng.laplace(size=(m, n_sources))
    mixing = rng.normal(size=(n_sources, l * l))
    mixing -= mixing.mean(axis=1, keepdims=True)
    assert np.linalg.matrix_rank(mixing) == n_sources
    return PatchSet(sources @ mixing, l), sources


def test_sample_patches_constant_image_is_zero():
    img = np.full((10, 10), 99, dtype=np.uint8)
    patches = sample_patches([img], 3, 1, seed=0)
    assert (patches.data == 0).all()


def test_sample_patches_deterministic_and_zero_mean():
    rng = np.random.default_rng(1)
    imgs = [rng.integers(0, 256, (20, 30)).astype(np.uint8) for _ in range(3)]
    a = sample_patches(imgs, 5, 1000, seed=42)
    b = sample_patches(imgs, 5, 1000, seed=42)
    assert (a.data == b.data).all()
    assert np.abs(a.data.mean(axis=1)).max() < 1e-9


def test_sample_patches_rejects_small_images():
    with pytest.raises(ValueError, match="smaller than patch"):
        sample_patches([np.zeros((4, 4), dtype=np.uint8)], 5, 10, seed=0)
    with pytest.raises(ValueError, match="at least one patch"):
        sample_patches([np.zeros((9, 9), dtype=np.uint8)], 5, 0, seed=0)


def test_ica_recovers_known_sources():
    patches, sources = _mixed_source_patches()
    bank = learn_filterbank(patches, 4, seed=11)
    responses = patches.data @ bank.coeffs.reshape(4, -1).T
    corr = np.abs(np.corrcoef(responses.T, sources.T)[:4, 4:])
    # each source matched by some filter, and the matching is a permutation
    assert (corr.max(axis=0) >= 0.95).all()
    assert len(set(corr.argmax(axis=0))) == 4


def test_learn_deterministic():
    patches, _ = _mixed_source_patches(seed=3)
    a = learn_filterbank(patches, 4, seed=5)
    b = learn_filterbank(patches, 4, seed=5)
    assert (a.coeffs == b.coeffs).all()
    assert a.provenance == b.provenance


def test_max_rank_whitening_decorrelates():
    # zero-mean patches live on the sum-zero hyperplane, so the covariance
    # rank tops out at l*l - 1; at that count whitening forces near-identity
    # response covariance
    rng = np.random.default_rng(8)
    imgs = [rng.integers(0, 256, (40, 40)).astype(np.uint8) for _ in range(4)]
    patches = sample_patches(imgs, 3, 2000, seed=2)
    n = 8
    bank = learn_filterbank(patches, n, seed=2)
    responses = patches.data @ bank.coeffs.reshape(n, -1).T
    scaled = responses / responses.std(axis=0, ddof=1)
    cov = (scaled.T @ scaled) / (patches.m - 1)
    off = np.abs(cov - np.diag(np.diag(cov)))
    assert off.max() <= 0.05


def test_full_dimension_request_reports_rank_deficiency():
    rng = np.random.default_rng(8)
    imgs = [rng.integers(0, 256, (40, 40)).astype(np.uint8) for _ in range(4)]
    patches = sample_patches(imgs, 3, 2000, seed=2)
    with pytest.raises(NumericalError, match="rank deficiency"):
        learn_filterbank(patches, 9, seed=2)


def test_rank_deficiency_detected():
    patches, _ = _mixed_source_patches(n_sources=2, seed=4)
    with pytest.raises(NumericalError, match="rank deficiency"):
        learn_filterbank(patches, 4, seed=0)


def test_non_convergence_reported():
    patches, _ = _mixed_source_patches(seed=6)
    with pytest.raises(NumericalError, match="converge"):
        learn_filterbank(patches, 4, seed=0, max_iter=1)


def test_patch_count_precondition():
    patches, _ = _mixed_source_patches(m=100, seed=9)  # below 20 * 9
    with pytest.raises(ValueError, match="at least 180"):
        learn_filterbank(patches, 4, seed=0)
