"""Artifact readers and writers: CSV tables, binary PGM images, JSON sidecars.

Floats are written with 17 significant digits so CSVs round-trip exactly
and are byte-identical across runs.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .deblur import BlurKernel
from .reconstruction import ComplexImage, PolarGrid
from .scene import SceneConfig, SignalTrace, Spectrogram


def _f(v) -> str:
    return format(float(v), ".17g")


def write_table(path, header: str, columns) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c).ravel() for c in columns]
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in zip(*cols):
            fh.write(",".join(_f(v) if not isinstance(v, (int, np.integer)) else str(v) for v in row))
            fh.write("\n")
    return path


def _read_columns(path, expected_header: list[str]) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected_header:
            raise ValueError(f"{path}: expected header {','.join(expected_header)}, got {header}")
        rows = [r for r in reader if r]
    try:
        data = np.array(rows, dtype=float).reshape(len(rows), len(expected_header))
    except ValueError as exc:
        raise ValueError(f"{path}: malformed numeric row ({exc})") from exc
    return {name: data[:, i] for i, name in enumerate(expected_header)}


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return path


def write_trace_csv(path, trace: SignalTrace, theta=None, samples=None) -> Path:
    theta = trace.theta if theta is None else theta
    samples = trace.samples if samples is None else samples
    return write_table(path, "theta,re,im", [theta, samples.real, samples.imag])


def read_trace_csv(path, config: SceneConfig) -> SignalTrace:
    cols = _read_columns(path, ["theta", "re", "im"])
    return SignalTrace(cols["theta"], cols["re"] + 1j * cols["im"], config)


def write_phase_csv(path, theta, phi) -> Path:
    return write_table(path, "theta,phi_radians", [theta, phi])


def write_kernel_csv(path, kernel: BlurKernel) -> Path:
    idx = np.arange(len(kernel))
    return write_table(path, "index,re,im", [idx, kernel.taps.real, kernel.taps.imag])


def read_kernel_csv(path) -> BlurKernel:
    cols = _read_columns(path, ["index", "re", "im"])
    order = np.argsort(cols["index"])
    if not np.array_equal(cols["index"][order], np.arange(order.size)):
        raise ValueError(f"{path}: kernel indices must be 0..L-1")
    return BlurKernel((cols["re"] + 1j * cols["im"])[order])


def write_image_csv(path, image: ComplexImage, floor_db: float = -100.0) -> Path:
    """One row per pixel: ``x_or_r,y_or_nu,re,im,mag_db`` (row-major over values)."""
    if isinstance(image.grid, PolarGrid):
        A, B = np.meshgrid(image.grid.radii, image.grid.angles, indexing="ij")
    else:
        A, B = np.meshgrid(image.grid.xs, image.grid.ys, indexing="xy")
    v = image.values
    return write_table(path, "x_or_r,y_or_nu,re,im,mag_db",
                       [A, B, v.real, v.imag, image.magnitude_db(floor_db=floor_db)])


def write_pgm(path, db: np.ndarray, dynamic_range_db: float) -> Path:
    """8-bit binary PGM; ``db`` rows are in ascending axis order and get flipped
    so the top row is the largest coordinate. ``[-dynamic_range_db, 0]`` maps to ``[0, 255]``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scaled = np.clip((np.asarray(db) + dynamic_range_db) / dynamic_range_db, 0.0, 1.0)
    pix = np.round(255 * scaled[::-1, :]).astype(np.uint8)
    h, w = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError("only 8-bit PGM supported")
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def write_image_pgm(path, image: ComplexImage, dynamic_range_db: float = 60.0) -> Path:
    """Write ``path`` (PGM) and ``path.with_suffix('.json')`` describing the axes."""
    path = Path(path)
    db = image.magnitude_db(floor_db=-max(dynamic_range_db, 100.0))
    write_pgm(path, db, dynamic_range_db)
    if isinstance(image.grid, PolarGrid):
        axes = {"kind": "polar", "rows": "r", "cols": "nu",
                "r": [float(v) for v in image.grid.radii],
                "nu": [float(v) for v in image.grid.angles]}
    else:
        axes = {"kind": "cartesian", "rows": "y", "cols": "x",
                "x": [float(v) for v in image.grid.xs],
                "y": [float(v) for v in image.grid.ys]}
    peak = float(np.abs(image.values).max())
    write_json(path.with_suffix(".json"), {
        **axes,
        "top_row": "max " + axes["rows"],
        "normalization": {
            "reference": "image peak magnitude",
            "peak_magnitude": peak,
            "dynamic_range_db": dynamic_range_db,
            "black_db": -dynamic_range_db,
            "white_db": 0.0,
        },
        "wavelength_m": image.wavelength,
        "delta_theta_rad": image.delta_theta,
    })
    return path


def write_spectrogram_csv(path, spec: Spectrogram) -> Path:
    T, F = np.meshgrid(spec.times, spec.freqs, indexing="ij")
    return write_table(path, "time_s,freq_hz,power_db", [T, F, spec.power_db])


def write_spectrogram_pgm(path, spec: Spectrogram, dynamic_range_db: float = 80.0) -> Path:
    """Rows are frequency (top = highest), columns are time; normalised to the max bin."""
    path = Path(path)
    top = float(spec.power_db.max())
    write_pgm(path, (spec.power_db - top).T, dynamic_range_db)
    write_json(path.with_suffix(".json"), {
        "kind": "spectrogram", "rows": "freq_hz", "cols": "time_s",
        "freq_hz": [float(v) for v in spec.freqs],
        "time_s": [float(v) for v in spec.times],
        "top_row": "max freq_hz",
        "normalization": {"reference_db": top, "dynamic_range_db": dynamic_range_db},
    })
    return path
