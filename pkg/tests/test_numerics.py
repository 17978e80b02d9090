import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from doptomo.numerics import RankDeficientError, dft, idft, lstsq, psd_solve


def direct_dft(x):
    N = len(x)
    k = np.arange(N)
    return np.array([np.sum(x * np.exp(-2j * np.pi * f * k / N)) for f in range(N)])


def test_lstsq_identity_returns_rhs(rng):
    b = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    assert np.allclose(lstsq(np.eye(7), b), b, rtol=0, atol=1e-15)


def test_lstsq_consistent_overdetermined(rng):
    A = rng.standard_normal((40, 6)) + 1j * rng.standard_normal((40, 6))
    x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    b = A @ x
    xh = lstsq(A, b)
    assert np.linalg.norm(A @ xh - b) <= 1e-12 * np.linalg.norm(b)
    assert np.allclose(xh, x, atol=1e-12)


def test_lstsq_matches_extended_precision_normal_equations(rng):
    A = rng.standard_normal((50, 10)) + 1j * rng.standard_normal((50, 10))
    b = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    x = lstsq(A, b)
    assert np.linalg.norm(A.conj().T @ (A @ x - b)) <= 1e-10 * np.linalg.norm(b)

    mpmath.mp.dps = 40
    Am = mpmath.matrix([[mpmath.mpc(v.real, v.imag) for v in row] for row in A])
    bm = mpmath.matrix([mpmath.mpc(v.real, v.imag) for v in b])
    AH = Am.transpose_conj()
    xm = mpmath.lu_solve(AH * Am, AH * bm)
    oracle = np.array([complex(v) for v in xm])
    assert np.allclose(x, oracle, rtol=0, atol=1e-12)


def test_lstsq_rank_deficient_raises(rng):
    A = rng.standard_normal((20, 4))
    A[:, 3] = A[:, 0] - 2 * A[:, 1]
    with pytest.raises(RankDeficientError):
        lstsq(A, rng.standard_normal(20))


def test_lstsq_rejects_wide():
    with pytest.raises(ValueError):
        lstsq(np.ones((2, 3)), np.ones(2))


def test_psd_solve_matches_dense(rng):
    M = rng.standard_normal((30, 6))
    G = M.T @ M
    b = rng.standard_normal(6)
    assert np.allclose(psd_solve(G, b), np.linalg.solve(G, b), rtol=1e-10)


def test_psd_solve_reports_dependent_column(rng):
    M = rng.standard_normal((30, 4))
    M[:, 2] = 3 * M[:, 0]
    with pytest.raises(RankDeficientError) as info:
        psd_solve(M.T @ M, np.ones(4))
    assert info.value.index in (0, 2)


def test_dft_impulse_and_constant():
    x = np.zeros(16, complex)
    x[0] = 1
    assert np.allclose(dft(x), np.ones(16))
    X = dft(np.ones(16))
    expect = np.zeros(16)
    expect[0] = 16
    assert np.allclose(X, expect, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 200), st.integers(0, 2**32 - 1))
def test_dft_against_direct_sum_roundtrip_and_parseval(n, seed):
    r = np.random.default_rng(seed)
    x = r.standard_normal(n) + 1j * r.standard_normal(n)
    X = dft(x)
    assert np.allclose(X, direct_dft(x), rtol=1e-10, atol=1e-10 * np.sqrt(n))
    assert np.linalg.norm(idft(X) - x) <= 1e-10 * np.linalg.norm(x)
    assert np.linalg.norm(x) ** 2 == pytest.approx(np.linalg.norm(X) ** 2 / n, rel=1e-10)
