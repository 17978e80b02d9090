"""Rotating point-scatterer scenes and their received baseband signal.

Geometry: a scatterer sits at radius ``r0`` and initial angle ``theta0``
(measured from the +x axis, so ``x0 = r0 cos theta0``, ``y0 = r0 sin theta0``)
about a rotation axis a distance ``R_a`` from the antenna. The rotation
angle is ``Theta = omega_r * t`` and the received signal of one scatterer is
``a * exp(-4j pi R(t) / lambda)``; scenes are the coherent sum over
scatterers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .numerics import dft

SPEED_OF_LIGHT = 299_792_458.0
SPECTROGRAM_FLOOR_DB = -120.0

RangeModel = Literal["exact", "approx"]


@dataclass(frozen=True)
class Scatterer:
    """One rotating point reflector. ``theta0`` in radians, wrapped to [0, 2pi)."""

    r0: float
    theta0: float
    z0: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        for name in ("r0", "theta0", "z0", "amplitude"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Scatterer.{name} must be finite")
        if self.r0 < 0:
            raise ValueError(f"r0 must be >= 0, got {self.r0}")
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        object.__setattr__(self, "theta0", float(self.theta0) % (2 * math.pi))

    @classmethod
    def from_degrees(cls, r0, theta0_deg, z0=0.0, amplitude=1.0) -> "Scatterer":
        return cls(r0, math.radians(theta0_deg), z0, amplitude)

    @property
    def x0(self) -> float:
        return self.r0 * math.cos(self.theta0)

    @property
    def y0(self) -> float:
        return self.r0 * math.sin(self.theta0)


@dataclass(frozen=True)
class SceneConfig:
    carrier_hz: float
    omega_r: float
    R_a: float
    scatterers: tuple[Scatterer, ...] = ()
    sample_count: int = 1024
    revolutions: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        if not (self.carrier_hz > 0 and math.isfinite(self.carrier_hz)):
            raise ValueError("carrier_hz must be positive and finite")
        if not (self.omega_r > 0 and math.isfinite(self.omega_r)):
            raise ValueError("omega_r must be positive and finite")
        if not (self.R_a > 0 and math.isfinite(self.R_a)):
            raise ValueError("R_a must be positive and finite")
        if int(self.sample_count) != self.sample_count or self.sample_count < 1:
            raise ValueError("sample_count must be a positive integer")
        object.__setattr__(self, "sample_count", int(self.sample_count))
        if not (self.revolutions > 0 and math.isfinite(self.revolutions)):
            raise ValueError("revolutions must be positive")
        extent = max((max(s.r0, abs(s.z0)) for s in self.scatterers), default=0.0)
        if self.R_a < 10 * extent:
            warnings.warn(
                f"R_a={self.R_a} m is less than 10x the scene extent ({extent} m); "
                "the far-field range approximation will be poor",
                stacklevel=3,
            )

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def delta_theta(self) -> float:
        return 2 * math.pi * self.revolutions / self.sample_count

    @property
    def sample_rate(self) -> float:
        """Samples per second along the slow-time axis."""
        return self.omega_r / self.delta_theta

    def theta(self) -> np.ndarray:
        return np.arange(self.sample_count) * self.delta_theta

    def times(self) -> np.ndarray:
        return self.theta() / self.omega_r


@dataclass(frozen=True, eq=False)
class SignalTrace:
    """Uniformly sampled complex signal indexed by rotation angle."""

    theta: np.ndarray
    samples: np.ndarray
    config: SceneConfig = field(repr=False)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        samples = np.asarray(self.samples, dtype=complex)
        if theta.ndim != 1 or samples.shape != theta.shape:
            raise ValueError("theta and samples must be 1-D with equal length")
        if theta.size == 0:
            raise ValueError("empty trace")
        if theta.size > 1:
            step = np.diff(theta)
            if np.any(step <= 0) or not np.allclose(step, step[0], rtol=1e-9, atol=0):
                raise ValueError("theta must be strictly increasing and uniform")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def wavelength(self) -> float:
        return self.config.wavelength

    @property
    def delta_theta(self) -> float:
        if self.theta.size > 1:
            return float(self.theta[1] - self.theta[0])
        return self.config.delta_theta

    @property
    def sample_rate(self) -> float:
        return self.config.omega_r / self.delta_theta

    def with_samples(self, samples) -> "SignalTrace":
        return SignalTrace(self.theta, samples, self.config)


def exact_range(s: Scatterer, cfg: SceneConfig, t):
    """Antenna-to-scatterer distance without the far-field approximation."""
    t = np.asarray(t, dtype=float)
    R2 = s.r0**2 + cfg.R_a**2 + 2 * cfg.R_a * s.r0 * np.sin(s.theta0 + cfg.omega_r * t) + s.z0**2
    return np.sqrt(R2)


def approx_range(s: Scatterer, cfg: SceneConfig, t):
    """First-order far-field range, ``R_a + x0 sin(wt) + y0 cos(wt)``."""
    wt = cfg.omega_r * np.asarray(t, dtype=float)
    return cfg.R_a + s.x0 * np.sin(wt) + s.y0 * np.cos(wt)


def doppler_shift(s: Scatterer, cfg: SceneConfig, t):
    """Instantaneous Doppler frequency in Hz under the far-field model."""
    wt = cfg.omega_r * np.asarray(t, dtype=float)
    k = 2 * cfg.omega_r / cfg.wavelength
    return k * s.x0 * np.cos(wt) - k * s.y0 * np.sin(wt)


def synthesize_trace(
    cfg: SceneConfig,
    range_model: RangeModel = "approx",
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> SignalTrace:
    """Coherent sum of every scatterer's phase history.

    ``noise_sigma`` is the per-sample standard deviation of additive complex
    circular Gaussian noise (``E|n|^2 = noise_sigma**2``).
    """
    if range_model not in ("exact", "approx"):
        raise ValueError(f"unknown range model {range_model!r}")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    rfun = exact_range if range_model == "exact" else approx_range
    theta = cfg.theta()
    t = theta / cfg.omega_r
    k = 4 * np.pi / cfg.wavelength
    samples = np.zeros(theta.size, dtype=complex)
    for s in cfg.scatterers:
        samples += s.amplitude * np.exp(-1j * k * rfun(s, cfg, t))
    if noise_sigma > 0:
        if rng is None:
            rng = np.random.default_rng()
        samples += complex_noise(rng, noise_sigma, theta.size)
    return SignalTrace(theta, samples, cfg)


def complex_noise(rng: np.random.Generator, sigma: float, n: int) -> np.ndarray:
    scale = sigma / math.sqrt(2.0)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


@dataclass(frozen=True, eq=False)
class Spectrogram:
    times: np.ndarray
    freqs: np.ndarray
    power_db: np.ndarray  # (len(times), len(freqs))

    def ridge(self) -> np.ndarray:
        """Frequency of the strongest bin in each frame."""
        return self.freqs[np.argmax(self.power_db, axis=1)]

    @property
    def bin_width(self) -> float:
        return float(self.freqs[1] - self.freqs[0]) if self.freqs.size > 1 else 0.0


def spectrogram(
    trace: SignalTrace,
    window_len: int = 128,
    hop: int | None = None,
    floor_db: float = SPECTROGRAM_FLOOR_DB,
) -> Spectrogram:
    """Short-time power spectrum (Hann window) in dB, frequency axis centred on 0 Hz.

    ``hop`` defaults to half the window (50% overlap). Frame times are the
    window centres in seconds.
    """
    P = len(trace)
    if not 2 <= window_len <= P:
        raise ValueError(f"window_len must lie in [2, {P}], got {window_len}")
    if hop is None:
        hop = max(1, window_len // 2)
    if hop < 1:
        raise ValueError("hop must be >= 1")

    # periodic Hann
    win = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(window_len) / window_len)
    starts = range(0, P - window_len + 1, hop)
    fs = trace.sample_rate
    frames = []
    for k in starts:
        X = np.fft.fftshift(dft(trace.samples[k:k + window_len] * win))
        frames.append(np.abs(X) ** 2)
    power = np.array(frames)
    with np.errstate(divide="ignore"):
        power_db = 10 * np.log10(power)
    power_db = np.maximum(power_db, floor_db)

    freqs = np.fft.fftshift(np.fft.fftfreq(window_len, d=1.0 / fs))
    t0 = trace.theta[0] / trace.config.omega_r
    times = t0 + (np.array(list(starts)) + (window_len - 1) / 2) / fs
    return Spectrogram(times, freqs, power_db)
