"""Run every pipeline on each bundled scenario and print a short summary.

    python scripts/reproduce_all.py [--out out] [--seed 0]
"""

import argparse
import json
import time
from pathlib import Path

from doptomo.cli import main
from doptomo.scenario import BUNDLED


def summarize(out: Path) -> None:
    if (p := out / "simulate.json").exists():
        s = json.loads(p.read_text())
        print(f"  ridge extents (Hz): {[round(v, 1) for v in s['ridge_extent_hz']]}"
              f"  analytic: {[round(v, 2) for v in s['max_doppler_hz']]}")
    if (p := out / "peaks.json").exists():
        for pk in json.loads(p.read_text())["peaks"]:
            print(f"  peak ({pk['x']:+.3f}, {pk['y']:+.3f}) m  amplitude {pk['amplitude']:.2f}")
    if (p := out / "null_report.json").exists():
        for case in json.loads(p.read_text())["cases"]:
            n = case["nulls"][0]
            print(f"  null {case['name']}: {n['pre_db']:.1f} -> {n['post_db']:.1f} dB, "
                  f"phi p-p {case['phi_peak_to_peak_rad']:.3f} rad, "
                  f"bump at {case['cut']['max_increase_offset_m']:.2f} m "
                  f"(mirror {case['cut']['mirror_offset_m']:.2f} m)")
    if (p := out / "deblur_report.json").exists():
        r = json.loads(p.read_text())
        print(f"  deblur relative error {r['relative_error']:.2e}")


def run() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out")
    ap.add_argument("--seed", default="0")
    args = ap.parse_args()
    status = 0
    for name in BUNDLED:
        out = Path(args.out) / name
        t0 = time.perf_counter()
        rc = main(["all", "--scenario", name, "--seed", args.seed, "--out", str(out)])
        print(f"{name}: exit {rc} in {time.perf_counter() - t0:.1f} s -> {out}")
        summarize(out)
        status = status or rc
    return status


if __name__ == "__main__":
    raise SystemExit(run())
