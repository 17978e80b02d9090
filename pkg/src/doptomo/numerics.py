"""Small dense linear-algebra and Fourier helpers shared across the package.

Matrices and vectors are plain numpy arrays. The least-squares solve goes
through a column-pivoted Householder QR (LAPACK via scipy) so that rank
deficiency can be detected instead of silently regularised.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as spla


class RankDeficientError(np.linalg.LinAlgError):
    """Raised when a system that must have full rank does not.

    ``index`` is the position (in the caller's column ordering) of the first
    column found to be linearly dependent on the others.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


def lstsq(A, b, rtol: float | None = None) -> np.ndarray:
    """Least-squares solution of ``A x = b`` for a tall, full-rank ``A``.

    Parameters
    ----------
    A : (m, n) array_like, m >= n
    b : (m,) or (m, k) array_like
    rtol : float, optional
        Relative threshold on ``|R_jj| / |R_00|`` below which a column is
        considered dependent. Defaults to ``max(m, n) * eps``.

    Raises
    ------
    ValueError
        If ``m < n`` or the shapes disagree.
    RankDeficientError
        If the pivoted QR factor reveals ``rank(A) < n``.
    """
    A = np.asarray(A)
    b = np.asarray(b)
    if A.ndim != 2:
        raise ValueError("A must be two-dimensional")
    m, n = A.shape
    if m < n:
        raise ValueError(f"lstsq needs m >= n, got {m}x{n}")
    if b.shape[0] != m:
        raise ValueError(f"b has {b.shape[0]} rows, A has {m}")
    if n == 0:
        return np.zeros((0,) + b.shape[1:], dtype=np.result_type(A, b))
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite entries in least-squares system")

    Q, R, perm = spla.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if rtol is None:
        rtol = max(m, n) * np.finfo(float).eps
    if diag[0] == 0.0:
        raise RankDeficientError("matrix is identically zero", index=int(perm[0]))
    small = np.nonzero(diag <= rtol * diag[0])[0]
    if small.size:
        j = int(small[0])
        raise RankDeficientError(
            f"rank {j} < {n} columns (|R_jj|/|R_00| = {diag[j] / diag[0]:.3e})",
            index=int(perm[j]),
        )
    y = Q.conj().T @ b
    z = spla.solve_triangular(R, y, lower=False)
    x = np.empty_like(z)
    x[perm] = z
    return x


def psd_solve(G, b, rtol: float = 1e-12) -> np.ndarray:
    """Solve ``G x = b`` for a symmetric positive semi-definite ``G``.

    Uses a diagonally pivoted Cholesky factorisation. A pivot smaller than
    ``rtol * max(diag(G))`` means ``G`` is singular to working precision and
    raises :class:`RankDeficientError` with the offending column index.
    """
    G = np.array(G, dtype=float)
    b = np.asarray(b, dtype=float)
    n = G.shape[0]
    if G.shape != (n, n):
        raise ValueError("G must be square")
    if b.shape[0] != n:
        raise ValueError("dimension mismatch between G and b")
    if not np.allclose(G, G.T, rtol=1e-12, atol=0.0):
        raise ValueError("G is not symmetric")

    scale = float(np.max(np.diag(G))) if n else 0.0
    if n and scale <= 0.0:
        raise RankDeficientError("G has no positive diagonal entry", index=0)

    perm = np.arange(n)
    L = np.zeros_like(G)
    S = G.copy()
    for j in range(n):
        p = j + int(np.argmax(np.diag(S)[j:]))
        if S[p, p] <= rtol * scale:
            raise RankDeficientError(
                f"pivot {S[p, p]:.3e} below {rtol:g} x max diagonal",
                index=int(perm[p]),
            )
        if p != j:
            S[[j, p], :] = S[[p, j], :]
            S[:, [j, p]] = S[:, [p, j]]
            L[[j, p], :j] = L[[p, j], :j]
            perm[[j, p]] = perm[[p, j]]
        L[j, j] = np.sqrt(S[j, j])
        L[j + 1:, j] = S[j + 1:, j] / L[j, j]
        S[j + 1:, j + 1:] -= np.outer(L[j + 1:, j], L[j + 1:, j])

    y = spla.solve_triangular(L, b[perm], lower=True)
    z = spla.solve_triangular(L.T, y, lower=False)
    x = np.empty_like(z)
    x[perm] = z
    return x


def dft(x) -> np.ndarray:
    """Unnormalised forward DFT, ``X[f] = sum_k x[k] exp(-2j pi f k / N)``."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("dft expects a non-empty 1-D vector")
    return np.fft.fft(x)


def idft(X) -> np.ndarray:
    """Inverse of :func:`dft` (carries the 1/N factor)."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 1 or X.size == 0:
        raise ValueError("idft expects a non-empty 1-D vector")
    return np.fft.ifft(X)
