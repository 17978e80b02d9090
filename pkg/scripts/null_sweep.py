"""Sweep a single null along y = 0.29 m on the 600 MHz scene.

Prints null suppression and phase-offset peak-to-peak excursion against the
null's distance from the scatterer, and optionally writes them to CSV.

    python scripts/null_sweep.py [--csv sweep.csv]
"""

import argparse

import numpy as np

from doptomo import CartesianGrid, NullSpec, null_phase_offset, synthesize_trace, verify_null
from doptomo.io import write_table
from doptomo.numerics import RankDeficientError
from doptomo.scenario import load_scenario


def run() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv", default=None)
    ap.add_argument("--y", type=float, default=0.29)
    ap.add_argument("--points", type=int, default=25)
    args = ap.parse_args()

    sc = load_scenario("scenario2")
    trace = synthesize_trace(sc.scene)
    grid = CartesianGrid.square(sc.grid.half_width, sc.grid.spacing)
    s = sc.scene.scatterers[0]
    rows = []
    for x in np.linspace(-2.2, 2.2, args.points):
        nulls = NullSpec.from_xy([(x, args.y)])
        try:
            phi = null_phase_offset(trace, nulls)
        except RankDeficientError:
            continue
        (rep,) = verify_null(trace, phi, nulls, grid)
        dist = float(np.hypot(x - s.x0, args.y - s.y0))
        rows.append((x, dist, rep.pre_db, rep.post_db, phi.peak_to_peak, rep.peak_drop_db))
        print(f"x={x:+.3f} d={dist:.3f} m  pre {rep.pre_db:7.2f} dB  post {rep.post_db:7.2f} dB  "
              f"phi p-p {phi.peak_to_peak:.3f} rad  peak drop {rep.peak_drop_db:.3f} dB")
    if args.csv:
        write_table(args.csv, "x_m,distance_m,pre_db,post_db,phi_ptp_rad,peak_drop_db", list(zip(*rows)))


if __name__ == "__main__":
    run()
