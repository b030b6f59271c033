"""Monte Carlo study of the detector for one or more study configs.

    python3 scripts/run_study.py configs/study_default.cfg configs/study_offset_slab.cfg

Prints the per-season summaries and writes confusion matrices and posterior
histograms under ``--out/<config stem>/``.
"""

import argparse
import time
from dataclasses import replace
from pathlib import Path

from chargecheck.config import load_study_config
from chargecheck.kvfile import atomic_write_text
from chargecheck.priors import Hypothesis
from chargecheck.simulate import run_mc_study


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("configs", nargs="+", type=Path)
    ap.add_argument("--out", type=Path, default=Path("results/study"))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--exclude-infeasible", action="store_true",
                    help="drop trials whose x_d no SoC pair in [0, E_max] can realise")
    args = ap.parse_args()

    for path in args.configs:
        study = load_study_config(path)
        if args.seed is not None:
            study = replace(study, seed=args.seed)
        if args.exclude_infeasible:
            study = replace(study, exclude_infeasible=True)
        t = time.perf_counter()
        reports = run_mc_study(study)
        elapsed = time.perf_counter() - t
        out = args.out / path.stem
        print(f"== {path} ({elapsed:.1f} s)")
        for season, rep in reports.items():
            print(rep.summary())
            atomic_write_text(out / f"confusion_{season.value}.csv", rep.confusion.to_csv())
            for h in Hypothesis:
                atomic_write_text(out / f"posterior_hist_{season.value}_{h.value.lower()}.csv",
                                  rep.posterior_histogram_csv(h))


if __name__ == "__main__":
    main()
