"""Command-line driver: ``doptomo {simulate,image,null,deblur,all} --scenario FILE``.

Exit codes: 0 success, 1 runtime/solver failure, 2 bad input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .deblur import blur, build_convolution_matrix, deblur_ls, gaussian_kernel
from .nulling import NullSpec, null_phase_offset, apply_phase_offset, verify_null
from .reconstruction import (
    CartesianGrid,
    PolarGrid,
    backproject_cartesian,
    backproject_polar,
    find_peaks,
    line_cut,
    magnitude_db,
    to_polar,
)
from .scenario import Scenario, ScenarioError, load_scenario
from .scene import (
    SignalTrace,
    approx_range,
    doppler_shift,
    exact_range,
    spectrogram,
    synthesize_trace,
)

log = logging.getLogger("doptomo")


class Run:
    """Per-invocation state: the scenario, one seeded generator, the output dir."""

    def __init__(self, scenario: Scenario, seed: int = 0, out: str | Path | None = None):
        self.scenario = scenario
        self.rng = np.random.default_rng(seed)
        self.seed = seed
        if out is None:
            out = scenario.output_dir or f"out/{scenario.name}"
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self._trace: SignalTrace | None = None

    @property
    def trace(self) -> SignalTrace:
        if self._trace is None:
            sc = self.scenario
            self._trace = synthesize_trace(sc.scene, sc.range_model, sc.noise_sigma, self.rng)
        return self._trace

    def use_trace(self, trace: SignalTrace):
        self._trace = trace

    def grid(self) -> CartesianGrid:
        g = self.scenario.grid
        cfg = self.scenario.scene
        spacing = g.spacing or cfg.wavelength / 4
        hw = g.half_width or 1.2 * max((s.r0 for s in cfg.scatterers), default=1.0 / 1.2)
        return CartesianGrid.square(hw, spacing, g.center)

    def cut_step(self) -> float:
        return self.scenario.grid.cut_step or self.scenario.scene.wavelength / 50

    def write_image(self, stem: str, image) -> None:
        io.write_image_csv(self.out / f"{stem}.csv", image)
        io.write_image_pgm(self.out / f"{stem}.pgm", image, self.scenario.grid.dynamic_range_db)


def cmd_simulate(run: Run) -> dict:
    sc = run.scenario
    cfg = sc.scene
    trace = run.trace
    io.write_trace_csv(run.out / "trace.csv", trace)

    P = len(trace)
    win = min(sc.spectrogram.window_len, P)
    spec = spectrogram(trace, win, sc.spectrogram.hop)
    io.write_spectrogram_csv(run.out / "spectrogram.csv", spec)
    io.write_spectrogram_pgm(run.out / "spectrogram.pgm", spec)

    # range and Doppler history per scatterer
    t = cfg.times()
    cols, names = [t], ["time_s"]
    for i, s in enumerate(cfg.scatterers):
        rng_fn = exact_range if sc.range_model == "exact" else approx_range
        cols += [rng_fn(s, cfg, t), doppler_shift(s, cfg, t)]
        names += [f"range_m_{i}", f"doppler_hz_{i}"]
    io.write_table(run.out / "tracks.csv", ",".join(names), cols)

    summary = {
        "samples": P,
        "sample_rate_hz": cfg.sample_rate,
        "wavelength_m": cfg.wavelength,
        "spectrogram_bin_hz": spec.bin_width,
        "max_doppler_hz": [2 * s.r0 * cfg.omega_r / cfg.wavelength for s in cfg.scatterers],
        "ridge_extent_hz": [ridge_extent(cfg, i, win, sc.spectrogram.hop)
                            for i in range(len(cfg.scatterers))],
    }
    io.write_json(run.out / "simulate.json", summary)
    return summary


def ridge_extent(cfg, index: int, window_len: int, hop: int | None = None) -> float:
    """Largest |Doppler| on the spectrogram ridge of scatterer ``index`` simulated alone."""
    alone = replace(cfg, scatterers=(cfg.scatterers[index],))
    return float(np.max(np.abs(spectrogram(synthesize_trace(alone), window_len, hop).ridge())))


def _peaks_json(peaks):
    return [{"x": p.x, "y": p.y, "mag_db": p.mag_db, "amplitude": p.amplitude} for p in peaks]


def cmd_image(run: Run) -> dict:
    grid = run.grid()
    image = backproject_cartesian(run.trace, grid)
    run.write_image("image", image)
    peaks = find_peaks(run.trace, grid, run.scenario.grid.peak_threshold_db)
    io.write_json(run.out / "peaks.json", {
        "threshold_db": run.scenario.grid.peak_threshold_db,
        "grid_spacing_m": grid.spacing,
        "peaks": _peaks_json(peaks),
    })
    return {"peaks": _peaks_json(peaks)}


def _line_profiles(run: Run, trace, adapted, peak_xy, toward_xy):
    d = float(np.hypot(toward_xy[0] - peak_xy[0], toward_xy[1] - peak_xy[1]))
    step = run.cut_step()
    n = int(np.ceil(1.5 * d / step))
    offsets = step * np.arange(-n, n + 1)
    pts, g0 = line_cut(trace, peak_xy, toward_xy, offsets)
    _, g1 = line_cut(adapted, peak_xy, toward_xy, offsets)
    return offsets, pts, g0, g1, d


def _radial_grid(run: Run, grid: CartesianGrid, through_xy) -> PolarGrid:
    """Single-angle polar grid along the ray from the origin through ``through_xy``."""
    _, nu = to_polar(*through_xy)
    r_max = float(np.hypot(np.abs(grid.xs).max(), np.abs(grid.ys).max()))
    return PolarGrid(np.arange(0.0, r_max, run.cut_step()), [float(nu)])


def cmd_null(run: Run) -> dict:
    sc = run.scenario
    if not sc.nulls:
        raise ScenarioError("scenario has no 'nulls' section")
    trace = run.trace
    grid = run.grid()
    base = backproject_cartesian(trace, grid)
    run.write_image("image", base)
    peaks = find_peaks(trace, grid, sc.grid.peak_threshold_db, max_peaks=1)
    if not peaks:
        raise ValueError("image is empty; nothing to null against")
    peak_xy = (peaks[0].x, peaks[0].y)
    ref = float(np.abs(base.values).max())

    cases = []
    for case in sc.nulls:
        nulls = NullSpec.from_xy(case.targets)
        phi = null_phase_offset(trace, nulls)
        adapted = apply_phase_offset(trace, phi)
        io.write_phase_csv(run.out / f"phi_{case.name}.csv", trace.theta, phi.phi)
        run.write_image(f"image_adapted_{case.name}", backproject_cartesian(adapted, grid))
        reports = verify_null(trace, phi, nulls, grid)

        # cut along the line from the peak through the first null
        offsets, pts, g0, g1, dist = _line_profiles(run, trace, adapted, peak_xy, case.targets[0])
        io.write_table(run.out / f"cut_{case.name}.csv", "offset_m,x,y,orig_db,adapted_db",
                       [offsets, pts[:, 0], pts[:, 1],
                        magnitude_db(g0, ref), magnitude_db(g1, ref)])
        diff = np.abs(g1) - np.abs(g0)
        bump_at = float(offsets[int(np.argmax(diff))])

        # polar radial cut through the peak direction
        pg = _radial_grid(run, grid, peak_xy)
        g_r0 = backproject_polar(trace, pg).values[:, 0]
        g_r1 = backproject_polar(adapted, pg).values[:, 0]
        io.write_table(run.out / f"radial_{case.name}.csv", "r_m,orig_db,adapted_db",
                       [pg.radii, magnitude_db(g_r0, ref), magnitude_db(g_r1, ref)])

        cases.append({
            "name": case.name,
            "phi_peak_to_peak_rad": phi.peak_to_peak,
            "nulls": [rep.to_dict() for rep in reports],
            "cut": {"peak": list(peak_xy), "null_offset_m": dist,
                    "mirror_offset_m": -dist, "max_increase_offset_m": bump_at},
        })
    report = {"peak": {"x": peak_xy[0], "y": peak_xy[1]}, "cases": cases}
    io.write_json(run.out / "null_report.json", report)
    return report


def cmd_deblur(run: Run) -> dict:
    sc = run.scenario
    if sc.blur is None:
        raise ScenarioError("scenario has no 'blur' section")
    b = sc.blur
    if b.kernel_csv is not None:
        kpath = Path(b.kernel_csv)
        if not kpath.is_absolute() and sc.source is not None:
            kpath = sc.source.parent / kpath
        try:
            kernel = io.read_kernel_csv(kpath)
        except (OSError, ValueError) as exc:
            raise ScenarioError(f"blur.kernel.csv: {exc}") from exc
    else:
        kernel = gaussian_kernel(b.length, b.sigma, b.gain)
    trace = run.trace
    grid = run.grid()

    blurred = blur(trace, kernel, b.noise_sigma, run.rng)
    s_hat = deblur_ls(blurred, kernel, b.ridge)

    io.write_kernel_csv(run.out / "kernel.csv", kernel)
    io.write_trace_csv(run.out / "blurred_trace.csv", trace, blurred.theta, blurred.samples)
    io.write_json(run.out / "blurred_trace.json", {
        "blurred": True, "source_len": blurred.source_len, "kernel_len": blurred.kernel_len,
        "aligned_offset": (blurred.kernel_len - 1) // 2,
    })
    io.write_trace_csv(run.out / "deblurred_trace.csv", s_hat)

    images = {
        "clean": backproject_cartesian(trace, grid),
        "blurred": backproject_cartesian(blurred.aligned(), grid),
        "deblurred": backproject_cartesian(s_hat, grid),
    }
    for name, img in images.items():
        run.write_image(f"image_{name}", img)

    ref_img = images["clean"]
    ref = float(np.abs(ref_img.values).max())
    pg = _radial_grid(run, grid, ref_img.peak_position())
    cut_cols = [pg.radii]
    for tr in (trace, blurred.aligned(), s_hat):
        cut_cols.append(magnitude_db(backproject_polar(tr, pg).values[:, 0], ref))
    io.write_table(run.out / "cut.csv", "r_m,clean_db,blurred_db,deblurred_db", cut_cols)

    Z = build_convolution_matrix(kernel, len(trace))
    resid = float(np.linalg.norm(Z @ s_hat.samples - blurred.samples))
    rel = float(np.linalg.norm(s_hat.samples - trace.samples) / max(np.linalg.norm(trace.samples), 1e-300))
    thr = sc.grid.peak_threshold_db
    report = {
        "kernel_len": len(kernel),
        "noise_sigma": b.noise_sigma,
        "ridge": b.ridge,
        "relative_error": rel,
        "residual_norm": resid,
        "peaks_clean": _peaks_json(find_peaks(trace, grid, thr)),
        "peaks_deblurred": _peaks_json(find_peaks(s_hat, grid, thr)),
        "grid_spacing_m": grid.spacing,
    }
    io.write_json(run.out / "deblur_report.json", report)
    return report


COMMANDS = {
    "simulate": [cmd_simulate],
    "image": [cmd_image],
    "null": [cmd_null],
    "deblur": [cmd_deblur],
    "all": [cmd_simulate, cmd_image, cmd_null, cmd_deblur],
}


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True,
                        help="scenario JSON path, or a bundled name (scenario1, scenario2, scenario3)")
    common.add_argument("--seed", type=_seed, default=0, help="noise seed (default 0)")
    common.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="doptomo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="trace, spectrogram, range/Doppler tracks")
    p_img = sub.add_parser("image", parents=[common], help="backprojected image and peak list")
    p_img.add_argument("--trace", default=None, help="image this trace CSV instead of simulating")
    sub.add_parser("null", parents=[common], help="phase-offset nulls and adapted images")
    sub.add_parser("deblur", parents=[common], help="blur, least-squares deblur, before/after images")
    sub.add_parser("all", parents=[common], help="every pipeline the scenario supports")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        scenario = load_scenario(args.scenario)
        run = Run(scenario, args.seed, args.out)
        if getattr(args, "trace", None):
            run.use_trace(io.read_trace_csv(args.trace, scenario.scene))
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"doptomo: input error: {exc}", file=sys.stderr)
        return 2

    steps = COMMANDS[args.command]
    if args.command == "all":
        steps = [cmd_simulate, cmd_image]
        steps += [cmd_null] if scenario.nulls else []
        steps += [cmd_deblur] if scenario.blur else []
    try:
        for step in steps:
            log.info("running %s", step.__name__)
            step(run)
    except ScenarioError as exc:
        print(f"doptomo: input error: {exc}", file=sys.stderr)
        return 2
    except (np.linalg.LinAlgError, ValueError, ArithmeticError) as exc:
        print(f"doptomo: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    log.info("artifacts written to %s", run.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
