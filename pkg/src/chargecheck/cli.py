"""Command line entry point.

    chargecheck predict  GPS.csv   [--config C] [--season S] [--out DIR]
    chargecheck detect   GPS.csv   --x1 KWH [--x0 KWH] --driver-id ID [...]
    chargecheck study    STUDY.cfg [--out DIR]
    chargecheck simulate TRIPGEN.cfg [--season S] [--out DIR]

``detect`` exits with 0 for H0, 2 for H1 and 3 for an erasure. Any error exits
with 1; no output file is written unless the command succeeds.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import AppConfig, load_app_config, load_study_config, load_tripgen_config
from .detector import Decision, SocPair, posterior_h1, update_prior, weighted_bonus
from .errors import DomainError
from .kvfile import atomic_write_text, format_kv, read_kv, write_kv
from .predictor import dist_stats, format_histogram_csv, predict_xc
from .priors import Hypothesis
from .simulate import generate_trip_log, run_mc_study
from .triplog import Season, TripLog, format_gps_csv, format_timestamp, read_gps_csv

EXIT_CODES = {Decision.H0: 0, Decision.H1: 2, Decision.E: 3}
EXIT_ERROR = 1


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as an H1 decision
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--season", choices=["summer", "winter", "auto"], default="auto")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, help="Monte Carlo sample count")
    p.add_argument("--bin-width", type=float, help="histogram bin width in kWh")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chargecheck", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("predict", help="predictive distribution of the energy drawn")
    p.add_argument("gps", type=Path)
    _common(p)

    p = sub.add_parser("detect", help="test a plug-in event for undeclared charging")
    p.add_argument("gps", type=Path)
    p.add_argument("--x0", type=float, help="SoC after the previous certified charge (kWh); "
                                            "defaults to the stored driver state")
    p.add_argument("--x1", type=float, required=True, help="SoC at this plug-in (kWh)")
    p.add_argument("--driver-id", required=True)
    p.add_argument("--p1", type=float, help="prior probability of undeclared charging")
    p.add_argument("--lambda", dest="forgetting", type=float, help="forgetting factor")
    p.add_argument("--g-max", type=float, help="maximal compliance bonus")
    p.add_argument("--soc-after", type=float,
                   help="SoC after this certified charge (kWh, default: full)")
    p.add_argument("--state-dir", type=Path, help="driver state directory")
    _common(p)

    p = sub.add_parser("study", help="Monte Carlo study of the detector")
    p.add_argument("study_config", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("simulate", help="synthetic GPS trip log")
    p.add_argument("tripgen_config", type=Path)
    p.add_argument("--season", choices=["summer", "winter"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, help="output directory (default: stdout)")
    return parser


def _app_config(args) -> AppConfig:
    cfg = load_app_config(args.config)
    changes = {}
    for arg, name in (("seed", "seed"), ("samples", "samples"), ("bin_width", "bin_width"),
                      ("workers", "workers")):
        if getattr(args, arg, None) is not None:
            changes[name] = getattr(args, arg)
    if changes.get("samples", 1) < 1 or changes.get("bin_width", 1) <= 0:
        raise DomainError("--samples must be >= 1 and --bin-width positive")
    return replace(cfg, **changes)


def _load_log(args, cfg: AppConfig) -> TripLog:
    season = None if args.season == "auto" else Season(args.season)
    return read_gps_csv(args.gps, cfg.month_map, season)


def _predict(log: TripLog, cfg: AppConfig):
    rng = np.random.default_rng(cfg.seed)
    return predict_xc(log, cfg.params, log.season, cfg.mass_model, cfg.aux_model,
                      cfg.samples, cfg.bin_width, rng, workers=cfg.workers)


def cmd_predict(args) -> int:
    cfg = _app_config(args)
    log = _load_log(args, cfg)
    xc = _predict(log, cfg)
    s = dist_stats(xc)
    atomic_write_text(args.out / "xc_histogram.csv", format_histogram_csv(xc))
    print(format_kv({
        "season": log.season.value,
        "samples": xc.sample_count,
        "bin_width_kwh": xc.bin_width,
        "mean_kwh": f"{s.mean:.6f}",
        "variance_kwh2": f"{s.variance:.6f}",
        "mode_kwh": f"{s.mode:.6f}",
        "support_kwh": f"{s.support[0]:.6g},{s.support[1]:.6g}",
    }), end="")
    return 0


def _state_path(state_dir: Path, driver_id: str) -> Path:
    if not driver_id or "/" in driver_id or driver_id.startswith("."):
        raise DomainError(f"invalid driver id {driver_id!r}")
    return state_dir / f"{driver_id}.state"


def cmd_detect(args) -> int:
    cfg = _app_config(args)
    if args.forgetting is not None:
        cfg = replace(cfg, forgetting=args.forgetting)
    if args.g_max is not None:
        cfg = replace(cfg, g_max=args.g_max)
    state_dir = args.state_dir or cfg.driver_state_dir
    state_file = _state_path(state_dir, args.driver_id)
    state = read_kv(state_file) if state_file.exists() else {}

    p1 = args.p1 if args.p1 is not None else cfg.p1
    if p1 is None:
        if "p1" not in state:
            raise DomainError(f"no prior for driver {args.driver_id!r}: "
                              f"pass --p1 or create {state_file}")
        p1 = float(state["p1"])
    x0 = args.x0
    if x0 is None:
        if "last_certified_soc_kwh" not in state:
            raise DomainError("no --x0 given and no stored SoC for this driver")
        x0 = float(state["last_certified_soc_kwh"])
    e_max = cfg.params.e_max
    soc = SocPair(x0, args.x1)
    soc.check(e_max)
    soc_after = e_max if args.soc_after is None else args.soc_after
    if not 0 <= soc_after <= e_max:
        raise DomainError(f"--soc-after must lie in [0, {e_max}]")
    if not 0 <= cfg.forgetting <= 1:
        raise DomainError("forgetting factor must lie in [0, 1]")

    log = _load_log(args, cfg)
    xc = _predict(log, cfg)
    out = posterior_h1(xc, cfg.undeclared(p1), soc.x_d, cfg.thresholds)
    record = {
        "driver_id": args.driver_id,
        "season": log.season.value,
        "x_d_kwh": f"{soc.x_d:.6f}",
        "posterior": f"{out.posterior_h1:.12g}",
        "decision": out.decision.value,
        "f_h0": f"{out.f_h0_at_xd:.12g}",
        "f_h1": f"{out.f_h1_at_xd:.12g}",
        "xd_bin": out.xd_bin_index,
        "flags": out.support_flag.value,
        "p1_used": f"{p1:.12g}",
    }
    if cfg.g_max is not None:
        record["bonus"] = f"{weighted_bonus(out.posterior_h1, cfg.g_max):.6f}"
    report = format_kv(record)
    atomic_write_text(args.out / f"detection_{args.driver_id}.txt", report)
    write_kv(state_file, {
        "driver_id": args.driver_id,
        "p1": f"{update_prior(out.posterior_h1, cfg.forgetting):.12g}",
        "last_certified_soc_kwh": f"{soc_after:.6f}",
        "last_certified_timestamp": format_timestamp(log.time[-1]),
    })
    print(report, end="")
    return EXIT_CODES[out.decision]


def cmd_study(args) -> int:
    study = load_study_config(args.study_config)
    if args.seed is not None:
        study = replace(study, seed=args.seed)
    if args.workers is not None:
        study = replace(study, workers=args.workers)
    reports = run_mc_study(study)
    files = {}
    summary = []
    for season, rep in reports.items():
        summary.append(rep.summary())
        files[f"confusion_{season.value}.csv"] = rep.confusion.to_csv()
        for h in Hypothesis:
            files[f"posterior_hist_{season.value}_{h.value.lower()}.csv"] = \
                rep.posterior_histogram_csv(h)
    files["summary.txt"] = "\n".join(summary)
    for name, text in files.items():
        atomic_write_text(args.out / name, text)
    print(files["summary.txt"], end="")
    return 0


def cmd_simulate(args) -> int:
    cfg, season = load_tripgen_config(args.tripgen_config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    season = Season(args.season) if args.season else (season or Season.SUMMER)
    text = format_gps_csv(generate_trip_log(cfg, season))
    if args.out is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(args.out / "gps.csv", text)
    return 0


COMMANDS = {"predict": cmd_predict, "detect": cmd_detect, "study": cmd_study,
            "simulate": cmd_simulate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (DomainError, OSError) as exc:
        print(f"chargecheck {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
