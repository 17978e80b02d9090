"""Backprojection imaging of rotation-angle traces.

Each rotation angle maps to one point on the k-space circle of radius
``2/lambda``; an image value is the coherent, phase-compensated sum of the
trace over one (or more) revolutions, weighted by ``(2/lambda) * dTheta``.

The compensation kernel is

    h(Theta; r, nu) = exp(+j (4 pi r / lambda) sin(Theta + nu))
                    = exp(+j (4 pi / lambda) (x sin Theta + y cos Theta))

which is the conjugate of the phase history of a unit scatterer at
``(x, y) = (r cos nu, r sin nu)``, so scatterers image at their true
positions. ``kernel_sign=-1`` flips the exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .scene import SceneConfig, SignalTrace

PROFILE_FLOOR_DB = -100.0
_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True)
class KPoint:
    u: np.ndarray | float
    v: np.ndarray | float


def theta_to_kspace(theta, wavelength: float) -> KPoint:
    """Spatial-frequency coordinates (cycles/m) swept at rotation angle ``theta``."""
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    theta = np.asarray(theta, dtype=float)
    rho = 2.0 / wavelength
    u = rho * np.sin(theta)
    v = -rho * np.cos(theta)
    if theta.ndim == 0:
        return KPoint(float(u), float(v))
    return KPoint(u, v)


def to_polar(x, y):
    """``(r, nu)`` with ``nu`` wrapped to [0, 2pi) and ``nu = 0`` at the origin."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    nu = np.mod(np.arctan2(y, x), 2 * np.pi)
    nu = np.where(r == 0, 0.0, nu)
    # mod can return exactly 2pi for tiny negative angles
    nu = np.where(nu >= 2 * np.pi, 0.0, nu)
    return r, nu


def _check_axis(a, name, nonneg=False, wrap=False):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.ndim != 1 or a.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D array")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    if a.size > 1 and np.any(np.diff(a) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    if nonneg and a[0] < 0:
        raise ValueError(f"{name} must be >= 0")
    if wrap and (a[0] < 0 or a[-1] >= 2 * np.pi):
        raise ValueError(f"{name} must lie in [0, 2pi)")
    return a


@dataclass(frozen=True, eq=False)
class PolarGrid:
    radii: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "radii", _check_axis(self.radii, "radii", nonneg=True))
        object.__setattr__(self, "angles", _check_axis(self.angles, "angles", wrap=True))

    @classmethod
    def default(cls, cfg: SceneConfig, n_radii: int = 256, n_angles: int = 512) -> "PolarGrid":
        r_max = 1.2 * _scene_extent(cfg)
        return cls(np.linspace(0.0, r_max, n_radii), 2 * np.pi * np.arange(n_angles) / n_angles)

    @property
    def shape(self):
        return (self.radii.size, self.angles.size)


@dataclass(frozen=True, eq=False)
class CartesianGrid:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xs", _check_axis(self.xs, "xs"))
        object.__setattr__(self, "ys", _check_axis(self.ys, "ys"))

    @classmethod
    def square(cls, half_width: float, spacing: float, center=(0.0, 0.0)) -> "CartesianGrid":
        if not (half_width > 0 and spacing > 0):
            raise ValueError("half_width and spacing must be positive")
        n = int(math.floor(half_width / spacing + 1e-9))
        offs = spacing * np.arange(-n, n + 1)
        return cls(center[0] + offs, center[1] + offs)

    @classmethod
    def default(cls, cfg: SceneConfig, spacing: float | None = None) -> "CartesianGrid":
        if spacing is None:
            spacing = cfg.wavelength / 4
        return cls.square(1.2 * _scene_extent(cfg), spacing)

    @property
    def shape(self):
        return (self.ys.size, self.xs.size)

    @property
    def spacing(self) -> float:
        dx = self.xs[1] - self.xs[0] if self.xs.size > 1 else np.inf
        dy = self.ys[1] - self.ys[0] if self.ys.size > 1 else np.inf
        return float(min(dx, dy))


def _scene_extent(cfg: SceneConfig) -> float:
    ext = max((s.r0 for s in cfg.scatterers), default=0.0)
    return ext if ext > 0 else 1.0


@dataclass(frozen=True, eq=False)
class ComplexImage:
    """Complex reflectivity on a grid.

    Polar images are indexed ``values[radius, angle]``; Cartesian images
    ``values[y, x]``.
    """

    values: np.ndarray
    grid: PolarGrid | CartesianGrid
    wavelength: float
    delta_theta: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values {self.values.shape} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("image has non-finite entries")

    @property
    def kind(self) -> str:
        return "polar" if isinstance(self.grid, PolarGrid) else "cartesian"

    def magnitude_db(self, reference: float | None = None, floor_db: float = PROFILE_FLOOR_DB):
        """``20 log10(|g| / reference)`` (reference defaults to the image peak)."""
        return magnitude_db(self.values, reference, floor_db)

    def argmax(self) -> tuple[int, int]:
        return np.unravel_index(int(np.argmax(np.abs(self.values))), self.values.shape)

    def peak_position(self) -> tuple[float, float]:
        """Cartesian coordinates of the largest-magnitude pixel."""
        i, j = self.argmax()
        if self.kind == "cartesian":
            return float(self.grid.xs[j]), float(self.grid.ys[i])
        r, nu = self.grid.radii[i], self.grid.angles[j]
        return float(r * np.cos(nu)), float(r * np.sin(nu))


def magnitude_db(values, reference: float | None = None, floor_db: float = PROFILE_FLOOR_DB):
    mag = np.abs(np.asarray(values))
    if reference is None:
        reference = float(mag.max()) if mag.size else 0.0
    if reference <= 0:
        return np.full(mag.shape, floor_db)
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(mag / reference)
    return np.maximum(db, floor_db)


def imaging_kernel(theta, r, nu, wavelength: float, kernel_sign: int = 1) -> np.ndarray:
    """Kernel matrix of shape ``(n_points, P)`` for image points ``(r, nu)``."""
    theta = np.asarray(theta, dtype=float)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    k = kernel_sign * 4 * np.pi / wavelength
    return np.exp(1j * k * r[:, None] * np.sin(theta[None, :] + nu[:, None]))


def backproject_points(trace: SignalTrace, r, nu, kernel_sign: int = 1) -> np.ndarray:
    """Image values at arbitrary polar points (same shape as ``r``)."""
    r = np.asarray(r, dtype=float)
    nu = np.broadcast_to(np.asarray(nu, dtype=float), r.shape)
    flat_r, flat_nu = r.ravel(), nu.ravel()
    out = np.empty(flat_r.size, dtype=complex)
    P = len(trace)
    step = max(1, _CHUNK_ELEMS // P)
    weight = (2.0 / trace.wavelength) * trace.delta_theta
    for lo in range(0, flat_r.size, step):
        K = imaging_kernel(trace.theta, flat_r[lo:lo + step], flat_nu[lo:lo + step],
                           trace.wavelength, kernel_sign)
        out[lo:lo + step] = K @ trace.samples
    return (weight * out).reshape(r.shape)


def backproject_xy(trace: SignalTrace, x, y, kernel_sign: int = 1) -> np.ndarray:
    r, nu = to_polar(x, y)
    return backproject_points(trace, r, nu, kernel_sign)


def backproject_polar(trace: SignalTrace, grid: PolarGrid, kernel_sign: int = 1) -> ComplexImage:
    R, NU = np.meshgrid(grid.radii, grid.angles, indexing="ij")
    values = backproject_points(trace, R, NU, kernel_sign)
    return ComplexImage(values, grid, trace.wavelength, trace.delta_theta)


def backproject_cartesian(trace: SignalTrace, xs, ys=None, kernel_sign: int = 1) -> ComplexImage:
    """Backproject onto the product grid ``xs x ys`` (or a :class:`CartesianGrid`).

    The kernel factorises as ``exp(j k x sin Theta) * exp(j k y cos Theta)``,
    so the whole image is one matrix product. Agrees with
    :func:`backproject_points` at ``to_polar(x, y)`` to round-off.
    """
    grid = xs if isinstance(xs, CartesianGrid) else CartesianGrid(xs, ys)
    k = kernel_sign * 4 * np.pi / trace.wavelength
    Ax = np.exp(1j * k * np.outer(grid.xs, np.sin(trace.theta)))
    By = np.exp(1j * k * np.outer(grid.ys, np.cos(trace.theta)))
    weight = (2.0 / trace.wavelength) * trace.delta_theta
    values = weight * ((By * trace.samples[None, :]) @ Ax.T)
    return ComplexImage(values, grid, trace.wavelength, trace.delta_theta)


def radial_cut(image: ComplexImage, nu: float, floor_db: float = PROFILE_FLOOR_DB):
    """Peak-normalised dB profile versus radius at the grid angle nearest ``nu``.

    Returns ``(radii, profile_db, selected_angle)``.
    """
    if image.kind != "polar":
        raise ValueError("radial_cut needs a polar image")
    if image.values.size == 0:
        raise ValueError("empty image")
    angles = image.grid.angles
    d = np.abs(np.angle(np.exp(1j * (angles - nu))))
    j = int(np.argmin(d))
    col = np.abs(image.values[:, j])
    return image.grid.radii.copy(), magnitude_db(col, None, floor_db), float(angles[j])


def line_cut(trace: SignalTrace, origin, toward, offsets, kernel_sign: int = 1):
    """Complex image values along the straight line from ``origin`` through ``toward``.

    ``offsets`` are signed distances (m) from ``origin``; positive values
    head toward ``toward``. Returns ``(points, values)`` with ``points`` of
    shape ``(n, 2)``.
    """
    o = np.asarray(origin, dtype=float)
    d = np.asarray(toward, dtype=float) - o
    n = np.linalg.norm(d)
    if n == 0:
        raise ValueError("origin and toward coincide")
    offsets = np.asarray(offsets, dtype=float)
    pts = o[None, :] + offsets[:, None] * (d / n)[None, :]
    return pts, backproject_xy(trace, pts[:, 0], pts[:, 1], kernel_sign)


@dataclass(frozen=True)
class Peak:
    x: float
    y: float
    mag_db: float
    amplitude: float


def point_response(trace: SignalTrace, x: float, y: float) -> np.ndarray:
    """Unit-amplitude phase history of a scatterer at ``(x, y)`` (far-field model)."""
    k = 4 * np.pi / trace.wavelength
    return np.exp(-1j * k * (x * np.sin(trace.theta) + y * np.cos(trace.theta)))


def find_peaks(
    trace: SignalTrace,
    grid: CartesianGrid,
    threshold_db: float = -20.0,
    max_peaks: int = 32,
) -> list[Peak]:
    """Scatterer peaks above ``threshold_db`` (relative to the image maximum).

    The ring sidelobes of a full-revolution point response stay well above
    -20 dB, so plain local maxima would report them as targets. Instead this
    is a CLEAN loop: take the residual image maximum, search a finely
    sampled patch around it (grids at lambda/4 undersample the main lobe, so
    the coarse maximum may sit on a ring), refine off-grid, subtract that
    scatterer's phase history from the trace and re-image, until the
    residual drops below the threshold.

    Reported ``x, y`` are the refined positions; ``mag_db`` is the image
    magnitude there relative to the strongest peak.
    """
    image = backproject_cartesian(trace, grid)
    mag = np.abs(image.values)
    grid_max = float(mag.max())
    if grid_max == 0.0:
        return []
    floor = grid_max * 10 ** (threshold_db / 20)
    lam = trace.wavelength
    P = len(trace)
    residual = trace.samples.copy()
    res_mag = mag
    found = []
    patch = lam / 16 * np.arange(-8, 9)

    for _ in range(max_peaks):
        i, j = np.unravel_index(int(np.argmax(res_mag)), res_mag.shape)
        if res_mag[i, j] < floor:
            break
        res_trace = trace.with_samples(residual)
        px, py = np.meshgrid(grid.xs[j] + patch, grid.ys[i] + patch)
        local = np.abs(backproject_xy(res_trace, px, py))
        a, b = np.unravel_index(int(np.argmax(local)), local.shape)
        x0, y0 = float(px[a, b]), float(py[a, b])

        def neg_power(p, _res=residual):
            return -abs(np.vdot(point_response(trace, p[0], p[1]), _res)) ** 2 / P**2

        opt = minimize(neg_power, [x0, y0], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14,
                                "initial_simplex": [[x0, y0], [x0 + lam / 32, y0], [x0, y0 + lam / 32]]})
        xr, yr = (float(v) for v in opt.x)
        if math.hypot(xr - x0, yr - y0) > lam / 8:
            xr, yr = x0, y0
        m = point_response(trace, xr, yr)
        c = np.vdot(m, residual) / P
        residual = residual - c * m
        found.append((xr, yr, float(abs(c))))
        res_mag = np.abs(backproject_cartesian(trace.with_samples(residual), grid).values)

    if not found:
        return []
    xy = np.array([(f[0], f[1]) for f in found])
    at_peaks = np.abs(backproject_xy(trace, xy[:, 0], xy[:, 1]))
    ref = max(grid_max, float(at_peaks.max()))
    return [Peak(x, y, float(20 * np.log10(max(g, 1e-300) / ref)), amp)
            for (x, y, amp), g in zip(found, at_peaks)]
