"""Phase-offset point nulls.

A real phase modulation ``phi(Theta)`` applied to the received trace as
``exp(+j phi)`` changes the image at a point ``q`` by, to first order,
``j <w_q, phi>`` where ``w_q(Theta) = s(Theta) h(Theta; q)`` and ``h`` is the
imaging kernel. Forcing the linearised image to zero at K points gives 2K
real linear conditions on ``phi``; the minimum-norm solution lies in the span
of ``Re w_q`` and ``Im w_q``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import RankDeficientError, psd_solve
from .reconstruction import (
    PROFILE_FLOOR_DB,
    CartesianGrid,
    backproject_cartesian,
    backproject_points,
    imaging_kernel,
    to_polar,
)
from .scene import SignalTrace


class DegenerateNullError(RankDeficientError):
    """The requested null set yields a singular normal-equation matrix."""


@dataclass(frozen=True, eq=False)
class NullSpec:
    """K null locations in polar form (``r`` metres, ``nu`` radians)."""

    r: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.r, dtype=float))
        nu = np.mod(np.atleast_1d(np.asarray(self.nu, dtype=float)), 2 * np.pi)
        if r.ndim != 1 or r.shape != nu.shape:
            raise ValueError("r and nu must be 1-D and of equal length")
        if r.size == 0:
            raise ValueError("at least one null is required")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise ValueError("null radii must be finite and >= 0")
        xy = np.round(np.column_stack([r * np.cos(nu), r * np.sin(nu)]), 12)
        if len(np.unique(xy, axis=0)) != r.size:
            raise ValueError("null targets must be distinct")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "nu", nu)

    @classmethod
    def from_xy(cls, points) -> "NullSpec":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r, nu = to_polar(pts[:, 0], pts[:, 1])
        return cls(r, nu)

    def __len__(self):
        return self.r.size

    @property
    def x(self) -> np.ndarray:
        return self.r * np.cos(self.nu)

    @property
    def y(self) -> np.ndarray:
        return self.r * np.sin(self.nu)

    def describe(self, q: int) -> str:
        return f"null {q} at (x={self.x[q]:.4g} m, y={self.y[q]:.4g} m)"


@dataclass(frozen=True, eq=False)
class PhaseOffset:
    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 1 or not np.all(np.isfinite(phi)):
            raise ValueError("phase offset must be a finite 1-D array")
        object.__setattr__(self, "phi", phi)

    def __len__(self):
        return self.phi.size

    @property
    def peak_to_peak(self) -> float:
        return float(np.ptp(self.phi))


@dataclass(frozen=True, eq=False)
class SteeringMatrix:
    w: np.ndarray  # (P, K)
    nulls: NullSpec

    @property
    def c(self) -> np.ndarray:
        return self.w.real

    @property
    def d(self) -> np.ndarray:
        return self.w.imag


def build_steering(trace: SignalTrace, nulls: NullSpec) -> SteeringMatrix:
    """Columns ``s(Theta_k) * h(Theta_k; r_q, nu_q)``, one per null.

    The measured samples stand in for ``a(Theta) exp(j psi(Theta))`` so no
    scene knowledge is needed.
    """
    if len(nulls) == 0:
        raise ValueError("no nulls requested")
    H = imaging_kernel(trace.theta, nulls.r, nulls.nu, trace.wavelength)
    return SteeringMatrix((H * trace.samples[None, :]).T, nulls)


def solve_phase_offset(sm: SteeringMatrix, delta_theta: float) -> PhaseOffset:
    """Minimum-norm real ``phi`` meeting every linearised null condition.

    With ``M = [c d]`` (P x 2K) and the inner product ``<g, h> =
    dTheta * sum_k g_k h_k``, returns ``M G^-1 b`` for ``G = dTheta M^T M``
    and ``b = dTheta * sum_k [-d_k, c_k]``. The weight cancels, so the result
    does not depend on ``delta_theta``.
    """
    if not delta_theta > 0:
        raise ValueError("delta_theta must be positive")
    K = sm.w.shape[1]
    M = np.hstack([sm.c, sm.d])
    G = delta_theta * (M.T @ M)
    b = delta_theta * np.concatenate([-sm.d.sum(axis=0), sm.c.sum(axis=0)])
    try:
        coef = psd_solve(G, b, rtol=1e-12)
    except RankDeficientError as exc:
        q = (exc.index or 0) % K
        raise DegenerateNullError(
            f"singular null system: {sm.nulls.describe(q)} is coincident with or "
            f"dependent on the other constraints ({exc})",
            index=q,
        ) from exc
    return PhaseOffset(M @ coef)


def apply_phase_offset(trace: SignalTrace, phi: PhaseOffset) -> SignalTrace:
    if len(phi) != len(trace):
        raise ValueError(f"phase offset has {len(phi)} samples, trace has {len(trace)}")
    return trace.with_samples(trace.samples * np.exp(1j * phi.phi))


def null_phase_offset(trace: SignalTrace, nulls: NullSpec) -> PhaseOffset:
    return solve_phase_offset(build_steering(trace, nulls), trace.delta_theta)


def linearized_residual(sm: SteeringMatrix, phi: PhaseOffset, delta_theta: float) -> np.ndarray:
    """Per-null ``(<w_q, 1> + j <w_q, phi>) / (dTheta * sum_k |w_qk|)``.

    Zero (to solver precision) when ``phi`` satisfies the first-order null
    conditions; normalised by the magnitude scale of the summed terms.
    """
    w = sm.w
    lin = delta_theta * (w.sum(axis=0) + 1j * (w * phi.phi[:, None]).sum(axis=0))
    scale = delta_theta * np.abs(w).sum(axis=0)
    return lin / np.where(scale > 0, scale, 1.0)


@dataclass
class NullReport:
    target: tuple[float, float]
    pre_db: float
    post_db: float
    peak_shift_cells: int
    peak_drop_db: float

    @property
    def suppression_db(self) -> float:
        return self.pre_db - self.post_db

    def to_dict(self) -> dict:
        return {
            "target": list(self.target),
            "pre_db": self.pre_db,
            "post_db": self.post_db,
            "peak_shift_cells": self.peak_shift_cells,
            "peak_drop_db": self.peak_drop_db,
        }


def verify_null(
    trace: SignalTrace,
    phi: PhaseOffset,
    nulls: NullSpec,
    grid: CartesianGrid,
    floor_db: float = PROFILE_FLOOR_DB,
) -> list[NullReport]:
    """Image magnitude at each null before and after applying ``phi``.

    Both ``pre_db`` and ``post_db`` are relative to the *un-adapted* image
    peak on ``grid``, so their difference is the absolute suppression.
    ``peak_shift_cells`` is the Chebyshev distance, in grid cells, between
    the two images' argmax pixels.
    """
    adapted = apply_phase_offset(trace, phi)
    before = backproject_cartesian(trace, grid)
    after = backproject_cartesian(adapted, grid)
    ref = float(np.abs(before.values).max())
    i0, j0 = before.argmax()
    i1, j1 = after.argmax()
    shift = int(max(abs(i1 - i0), abs(j1 - j0)))
    peak_before = abs(before.values[i0, j0])
    peak_after = abs(after.values[i1, j1])

    g_pre = np.abs(backproject_points(trace, nulls.r, nulls.nu))
    g_post = np.abs(backproject_points(adapted, nulls.r, nulls.nu))

    def db(v):
        if ref <= 0 or v <= 0:
            return floor_db
        return max(float(20 * np.log10(v / ref)), floor_db)

    drop = 0.0
    if peak_before > 0:
        drop = float(20 * np.log10(peak_before / max(peak_after, 1e-300)))
    return [
        NullReport((float(nulls.x[q]), float(nulls.y[q])), db(g_pre[q]), db(g_post[q]), shift, drop)
        for q in range(len(nulls))
    ]
