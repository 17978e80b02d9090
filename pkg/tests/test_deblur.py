import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from doptomo import (
    BlurKernel,
    CartesianGrid,
    RankDeficientError,
    SceneConfig,
    backproject_cartesian,
    blur,
    build_convolution_matrix,
    deblur_ls,
    gaussian_kernel,
    synthesize_trace,
)

from conftest import random_trace, scene2

PI = math.pi


def naive_convolve(s, z):
    out = np.zeros(len(s) + len(z) - 1, complex)
    for i in range(len(out)):
        for p in range(len(s)):
            if 0 <= i - p < len(z):
                out[i] += z[i - p] * s[p]
    return out


def test_kernel_validation():
    with pytest.raises(ValueError):
        BlurKernel([])
    with pytest.raises(ValueError):
        BlurKernel([0, 0])
    with pytest.raises(ValueError):
        gaussian_kernel(0, 1.0)
    k = gaussian_kernel(31, 5.0, 2.0)
    assert len(k) == 31 and k.taps[15] == 2.0
    assert np.allclose(k.taps, k.taps[::-1])


def test_convolution_matrix_structure():
    z = BlurKernel([1, 2j, 3])
    Z = build_convolution_matrix(z, 4)
    assert Z.shape == (6, 4)
    assert np.array_equal(Z[:, 0], [1, 2j, 3, 0, 0, 0])
    assert np.array_equal(Z[:, 3], [0, 0, 0, 1, 2j, 3])
    # Toeplitz: constant along diagonals
    for off in range(-3, 6):
        d = np.diagonal(Z, -off)
        assert np.all(d == d[0])


@pytest.mark.parametrize("L", [1, 8, 31])
def test_matrix_path_equals_direct_convolution(L, rng):
    tr = random_trace(rng, 64)
    k = BlurKernel(rng.standard_normal(L) + 1j * rng.standard_normal(L))
    direct = blur(tr, k).samples
    via_matrix = build_convolution_matrix(k, 64) @ tr.samples
    oracle = naive_convolve(tr.samples, k.taps)
    assert np.linalg.norm(via_matrix - direct) <= 1e-12 * np.linalg.norm(direct)
    assert np.linalg.norm(oracle - direct) <= 1e-12 * np.linalg.norm(direct)


def test_identity_kernel_roundtrip(rng):
    tr = random_trace(rng, 32)
    b = blur(tr, BlurKernel([1.0]))
    assert np.array_equal(b.samples, tr.samples)
    assert np.allclose(deblur_ls(b, BlurKernel([1.0])).samples, tr.samples, atol=1e-15)


def test_blurred_geometry(rng):
    tr = random_trace(rng, 40)
    b = blur(tr, gaussian_kernel(9, 2.0))
    assert b.samples.size == 48
    assert np.allclose(np.diff(b.theta), tr.delta_theta)
    al = b.aligned()
    assert np.array_equal(al.samples, b.samples[4:44])
    assert np.allclose(al.theta, tr.theta)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 8, 31]), st.sampled_from([64, 256]))
def test_noiseless_roundtrip(seed, L, P):
    r = np.random.default_rng(seed)
    tr = random_trace(r, P)
    k = gaussian_kernel(L, 5.0)
    est = deblur_ls(blur(tr, k), k)
    assert np.linalg.norm(est.samples - tr.samples) <= 1e-8 * np.linalg.norm(tr.samples)
    assert np.array_equal(est.theta, tr.theta)


def test_residual_orthogonal_to_columns(rng):
    tr = random_trace(rng, 64)
    k = gaussian_kernel(8, 2.0)
    b = blur(tr, k, noise_sigma=0.3, rng=rng)
    est = deblur_ls(b, k)
    Z = build_convolution_matrix(k, 64)
    res = Z @ est.samples - b.samples
    assert np.linalg.norm(Z.conj().T @ res) <= 1e-10 * np.linalg.norm(Z) * np.linalg.norm(b.samples)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.complex_numbers(min_magnitude=0.1, max_magnitude=100,
                                                      allow_nan=False, allow_infinity=False))
def test_scaling_equivariance(seed, alpha):
    r = np.random.default_rng(seed)
    tr = random_trace(r, 64)
    k = gaussian_kernel(8, 3.0)
    b = blur(tr, k)
    base = deblur_ls(b, k).samples
    scaled_obs = deblur_ls(type(b)(alpha * b.samples, b.source_len, b.kernel_len, b.theta0,
                                   b.delta_theta, b.config), k).samples
    assert np.linalg.norm(scaled_obs - alpha * base) <= 1e-9 * abs(alpha) * np.linalg.norm(base)
    # scaling the kernel divides the estimate
    k2 = BlurKernel(alpha * k.taps)
    assert np.linalg.norm(deblur_ls(b, k2).samples - base / alpha) <= 1e-9 * np.linalg.norm(base) / abs(alpha)


def test_error_grows_with_noise():
    tr = random_trace(np.random.default_rng(0), 128)
    k = gaussian_kernel(8, 2.0)
    errs = []
    for sigma in (1e-4, 1e-3, 1e-2):
        e = []
        for trial in range(20):
            b = blur(tr, k, noise_sigma=sigma, rng=np.random.default_rng(trial))
            e.append(np.linalg.norm(deblur_ls(b, k).samples - tr.samples))
        errs.append(np.mean(e))
    assert errs[0] < errs[1] < errs[2]


def test_ridge_and_rank_deficiency(rng):
    tr = random_trace(rng, 16)
    k = BlurKernel([1.0])
    b = blur(tr, k)
    shrunk = deblur_ls(b, k, ridge=1.0).samples
    assert np.allclose(shrunk, tr.samples / 2, atol=1e-14)
    with pytest.raises(ValueError):
        deblur_ls(b, k, ridge=-1)
    with pytest.raises(ValueError):
        deblur_ls(b, BlurKernel([1.0, 0.5]))


def test_rank_deficient_system_raises(rng, monkeypatch):
    import doptomo.deblur as db

    tr = random_trace(rng, 8)
    k = BlurKernel([1.0, 1.0])
    b = blur(tr, k)
    # no finite kernel gives a singular full-convolution matrix, so stub one in
    monkeypatch.setattr(db, "build_convolution_matrix",
                        lambda kern, P: np.zeros((len(kern) + P - 1, P), complex))
    with pytest.raises(RankDeficientError):
        deblur_ls(b, k)


def test_deblurred_image_matches_clean():
    cfg = scene2(512)
    tr = synthesize_trace(cfg)
    k = gaussian_kernel(31, 5.0)
    est = deblur_ls(blur(tr, k), k)
    grid = CartesianGrid.square(2.0, 0.05)
    clean = backproject_cartesian(tr, grid).values
    rec = backproject_cartesian(est, grid).values
    assert 20 * np.log10(np.abs(rec - clean).max() / np.abs(clean).max()) <= -60
