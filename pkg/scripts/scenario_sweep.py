"""Detector behaviour for drivers with a fixed undeclared charge.

For x_u in {0, 0.2, 0.5} x E_max and both seasons, writes the posterior curve
over the x_d grid and the histogram of simulated x_d, and prints how often the
posterior exceeds 0.9 and stays at or below 0.4.

    python3 scripts/scenario_sweep.py [--config configs/study_default.cfg]
"""

import argparse
import io
from pathlib import Path

from chargecheck.config import load_study_config
from chargecheck.kvfile import atomic_write_text
from chargecheck.predictor import format_histogram_csv
from chargecheck.simulate import StudyConfig, run_sweep
from chargecheck.triplog import Season

FRACTIONS = (0.0, 0.2, 0.5)


def curve_csv(curve) -> str:
    buf = io.StringIO()
    buf.write("x_d_left_kwh,posterior_h1,f_h0,f_h1\n")
    for j, p, f0, f1 in zip(curve.bins, curve.posterior, curve.f_h0, curve.f_h1):
        buf.write(f"{j * curve.bin_width:.10g},{p:.12g},{f0:.12g},{f1:.12g}\n")
    return buf.getvalue()


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--config", type=Path)
    ap.add_argument("--draws", type=int, default=10_000)
    ap.add_argument("--out", type=Path, default=Path("results/sweep"))
    args = ap.parse_args()
    study = load_study_config(args.config) if args.config else StudyConfig()

    print("season  x_u_kwh  P(post>0.9)  P(post<=0.4)  median_x_d")
    for season in Season:
        for frac in FRACTIONS:
            x_u = frac * study.params.e_max
            r = run_sweep(study, season, x_u, args.draws)
            tag = f"{season.value}_xu{int(round(100 * frac)):02d}"
            if frac == 0.0:
                atomic_write_text(args.out / f"curve_{season.value}.csv", curve_csv(r.curve))
            atomic_write_text(args.out / f"xd_hist_{tag}.csv", format_histogram_csv(r.xd_dist))
            low = float((r.posteriors <= 0.4).mean())
            print(f"{season.value:7s} {x_u:7.1f}  {r.fraction_above(0.9):11.4f}  {low:12.4f}"
                  f"  {float(sorted(r.xd_samples)[len(r.xd_samples) // 2]):10.2f}")


if __name__ == "__main__":
    main()
