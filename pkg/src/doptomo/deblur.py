"""Known-kernel blur of a trace and its least-squares inverse."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import RankDeficientError, lstsq
from .scene import SceneConfig, SignalTrace, complex_noise


@dataclass(frozen=True, eq=False)
class BlurKernel:
    taps: np.ndarray

    def __post_init__(self):
        taps = np.atleast_1d(np.asarray(self.taps, dtype=complex))
        if taps.ndim != 1 or taps.size == 0:
            raise ValueError("kernel needs at least one tap")
        if not np.all(np.isfinite(taps)):
            raise ValueError("kernel taps must be finite")
        if not np.any(taps != 0):
            raise ValueError("kernel is all zeros")
        object.__setattr__(self, "taps", taps)

    def __len__(self):
        return self.taps.size


@dataclass(frozen=True, eq=False)
class BlurredTrace:
    """``L + P - 1`` blurred samples; sample ``i`` sits at ``theta0 + i * delta_theta``."""

    samples: np.ndarray
    source_len: int
    kernel_len: int
    theta0: float
    delta_theta: float
    config: SceneConfig

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.shape != (self.source_len + self.kernel_len - 1,):
            raise ValueError(
                f"blurred length {samples.shape} != L + P - 1 = "
                f"{self.source_len + self.kernel_len - 1}"
            )
        object.__setattr__(self, "samples", samples)

    @property
    def theta(self) -> np.ndarray:
        return self.theta0 + self.delta_theta * np.arange(self.samples.size)

    def aligned(self) -> SignalTrace:
        """The ``P`` samples centred on the kernel's midpoint, on the source grid.

        For a kernel symmetric about ``(L - 1) / 2`` this is the blurred
        signal with the group delay removed, which is what gets imaged.
        """
        off = (self.kernel_len - 1) // 2
        theta = self.theta0 + self.delta_theta * np.arange(self.source_len)
        return SignalTrace(theta, self.samples[off:off + self.source_len], self.config)


def gaussian_kernel(L: int, sigma: float, gain: float = 1.0) -> BlurKernel:
    """Real, symmetric Gaussian taps peaking at ``gain`` on the centre index."""
    if L < 1:
        raise ValueError("L must be >= 1")
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    i = np.arange(L)
    return BlurKernel(gain * np.exp(-((i - (L - 1) / 2) ** 2) / (2 * sigma**2)))


def build_convolution_matrix(kernel: BlurKernel, P: int) -> np.ndarray:
    """Full-convolution Toeplitz matrix, shape ``(L + P - 1, P)``."""
    if P < 1:
        raise ValueError("P must be >= 1")
    L = len(kernel)
    Z = np.zeros((L + P - 1, P), dtype=complex)
    for p in range(P):
        Z[p:p + L, p] = kernel.taps
    return Z


def blur(
    trace: SignalTrace,
    kernel: BlurKernel,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> BlurredTrace:
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    out = np.convolve(trace.samples, kernel.taps, mode="full")
    if noise_sigma > 0:
        if rng is None:
            rng = np.random.default_rng()
        out = out + complex_noise(rng, noise_sigma, out.size)
    return BlurredTrace(out, len(trace), len(kernel), float(trace.theta[0]),
                        trace.delta_theta, trace.config)


def deblur_ls(blurred: BlurredTrace, kernel: BlurKernel, ridge: float = 0.0) -> SignalTrace:
    """Minimise ``||Z s - s_bar||^2 + ridge ||s||^2`` by pivoted QR.

    All ``L + P - 1`` rows (transients included) enter the solve. With
    ``ridge == 0`` a rank-deficient ``Z`` raises :class:`RankDeficientError`.
    """
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    if len(kernel) != blurred.kernel_len:
        raise ValueError("kernel length does not match the blurred trace")
    P = blurred.source_len
    Z = build_convolution_matrix(kernel, P)
    rhs = blurred.samples
    if ridge > 0:
        Z = np.vstack([Z, np.sqrt(ridge) * np.eye(P)])
        rhs = np.concatenate([rhs, np.zeros(P, dtype=complex)])
    try:
        s_hat = lstsq(Z, rhs)
    except RankDeficientError as exc:
        raise RankDeficientError(f"convolution matrix is rank deficient: {exc}", exc.index) from exc
    theta = blurred.theta0 + blurred.delta_theta * np.arange(P)
    return SignalTrace(theta, s_hat, blurred.config)
