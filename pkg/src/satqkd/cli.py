"""Command-line entry points.

Every subcommand prints one machine-readable JSON report to stdout and can
additionally drop flat CSV series into --out-dir for plotting. Exit codes:
0 success, 2 config/schema error, 3 data-file format error, 4 domain error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .analysis import estimate_fwhm, estimate_spectrum, load_histogram_csv, load_spectrum_csv
from .channel import ChannelConfig
from .config import RunConfig, default_run_config, load_run_config, run_config_to_dict
from .errors import ConfigError, DomainError, FileFormatError, SatQkdError
from .optimizer import Axis, SearchSpace, optimize
from .protocol import (
    decoy_bounds_from_tally,
    integrate_pass,
    key_from_fixed_loss,
    key_length,
    simulate_block,
    stats_from_tally,
)
from .source import distinguishability_report

EXIT_CONFIG = 2
EXIT_FILE = 3
EXIT_DOMAIN = 4


def _emit(report: dict, out_dir: Optional[str]):
    text = json.dumps(report, indent=2, sort_keys=True, default=str)
    print(text)
    if out_dir:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / "report.json").write_text(text + "\n")


def _write_csv(out_dir: Optional[str], name: str, header, rows):
    if not out_dir:
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / name, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = load_run_config(args.config)
    else:
        cfg = default_run_config()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "loss_db", None) is not None:
        cfg.channel = ChannelConfig(
            mode="fixed",
            fixed_loss_db=args.loss_db,
            excess_loss_db=cfg.channel.excess_loss_db,
            background_click_prob=cfg.channel.background_click_prob,
        )
    return cfg


def _total_fixed_loss(cfg: RunConfig) -> float:
    return cfg.channel.fixed_loss_db + cfg.channel.excess_loss_db


def cmd_simulate(args) -> dict:
    cfg = _load_config(args)
    loss = _total_fixed_loss(cfg)
    per_source = []
    total_length = 0.0
    total_rate = 0.0
    for i, src in enumerate(cfg.sources):
        tally = simulate_block(
            src, loss, cfg.detector, cfg.e_det(src), cfg.block_pulses,
            seed=cfg.seed + i, shards=cfg.shards, workers=args.workers,
            background_click_prob=cfg.channel.background_click_prob,
        )
        bounds = decoy_bounds_from_tally(src, tally)
        result = key_length(stats_from_tally(src, tally), bounds, cfg.security, args.regime)
        total_length += result.secret_key_length
        total_rate += result.secret_key_rate
        per_source.append(
            {
                "wavelength_nm": src.wavelength_label_nm,
                "tally": tally.to_dict(),
                "key": result.to_dict(),
            }
        )
    return {
        "command": "simulate",
        "loss_db": loss,
        "seed": cfg.seed,
        "shards": cfg.shards,
        "regime": args.regime,
        "sources": per_source,
        "combined_key_length_bits": total_length,
        "combined_key_rate_bps": total_rate,
        "config": run_config_to_dict(cfg),
    }


def cmd_keyrate(args) -> dict:
    cfg = _load_config(args)
    lo, hi, step = args.sweep
    losses, rates = [], []
    loss = lo
    while loss <= hi + 1e-9:
        total = 0.0
        for src in cfg.sources:
            r = key_from_fixed_loss(
                src, loss + cfg.channel.excess_loss_db, cfg.detector, cfg.e_det(src),
                cfg.security, duration_s=args.duration, regime=args.regime,
                background_click_prob=cfg.channel.background_click_prob,
            )
            total += r.secret_key_rate
        losses.append(round(loss, 12))
        rates.append(total)
        loss += step
    _write_csv(args.out_dir, "keyrate_vs_loss.csv", ["loss_db", "key_rate_bps"], zip(losses, rates))
    return {
        "command": "keyrate",
        "regime": args.regime,
        "duration_s": args.duration,
        "rows": [{"loss_db": l, "key_rate_bps": r} for l, r in zip(losses, rates)],
    }


def cmd_pass(args) -> dict:
    cfg = _load_config(args)
    if cfg.channel.mode != "pass" or cfg.channel.pass_profile is None:
        raise ConfigError("pass command requires a channel in pass mode")
    profile = cfg.channel.pass_profile
    per_source = []
    total = 0.0
    for i, src in enumerate(cfg.sources):
        result, tally = integrate_pass(
            profile, src, cfg.detector, cfg.e_det(src), cfg.security,
            step_s=args.step, regime=args.regime, mode=args.mode,
            seed=cfg.seed + i,
            excess_loss_db=cfg.channel.excess_loss_db,
            background_click_prob=cfg.channel.background_click_prob,
        )
        total += result.secret_key_length
        per_source.append(
            {"wavelength_nm": src.wavelength_label_nm, "key": result.to_dict(),
             "tally": tally.to_dict()}
        )
    _write_csv(
        args.out_dir, "pass_elevation.csv", ["time_s", "elevation_deg"],
        zip(profile.times_s, profile.elevations_deg),
    )
    return {
        "command": "pass",
        "duration_s": profile.duration_s,
        "regime": args.regime,
        "mode": args.mode,
        "sources": per_source,
        "combined_key_length_bits": total,
    }


def cmd_optimize(args) -> dict:
    cfg = _load_config(args)
    axes = {
        "mu_signal": Axis(args.mu_min, args.mu_max, args.mu_points),
        "mu_decoy": Axis(args.mu_min, args.mu_max, args.mu_points),
    }
    result = optimize(
        SearchSpace(axes=axes), cfg.sources[0], _total_fixed_loss(cfg), cfg.detector,
        cfg.e_det(cfg.sources[0]), cfg.security, regime=args.regime,
        duration_s=args.duration,
    )
    if result.table:
        header = list(result.table[0].keys())
        _write_csv(args.out_dir, "optimize_grid.csv", header,
                   ([row[h] for h in header] for row in result.table))
    return {
        "command": "optimize",
        "best_params": result.best_params,
        "best_key_length_bits": result.best_key_length,
        "grid_points": len(result.table),
    }


def cmd_analyze_histogram(args) -> dict:
    series = load_histogram_csv(args.file)
    est = estimate_fwhm(series)
    return {
        "command": "analyze-histogram",
        "file": str(args.file),
        "peak_time_ps": est.peak_x,
        "fwhm_ps": est.fwhm,
        "left_crossing_ps": est.left_crossing,
        "right_crossing_ps": est.right_crossing,
        "multi_peak": est.multi_peak,
    }


def cmd_analyze_spectrum(args) -> dict:
    series = load_spectrum_csv(args.file)
    est = estimate_spectrum(series, band_center_nm=args.band_center, band_halfwidth_nm=args.band_halfwidth)
    return {
        "command": "analyze-spectrum",
        "file": str(args.file),
        "center_nm": est.center,
        "fwhm_nm": est.fwhm,
        "in_band": est.in_band,
        "multi_peak": est.multi_peak,
    }


def cmd_report_distinguishability(args) -> dict:
    cfg = _load_config(args)
    reports = []
    for src in cfg.sources:
        rep = distinguishability_report(src, temp_c=args.temp)
        rows = rep.as_rows()
        _write_csv(
            args.out_dir,
            f"distinguishability_{int(src.wavelength_label_nm)}nm.csv",
            ["mode_a", "mode_b", "temporal_overlap", "spectral_overlap",
             "temporal_score", "spectral_score", "score"],
            ([r[k] for k in ("mode_a", "mode_b", "temporal_overlap", "spectral_overlap",
                             "temporal_score", "spectral_score", "score")] for r in rows),
        )
        reports.append(
            {
                "wavelength_nm": src.wavelength_label_nm,
                "pairs": rows,
                "worst_pair": {
                    "mode_a": rep.worst_pair.mode_a,
                    "mode_b": rep.worst_pair.mode_b,
                    "score": rep.worst_pair.score,
                },
            }
        )
    return {"command": "report-distinguishability", "temp_c": args.temp, "sources": reports}


def _sweep_spec(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("sweep must be lo:hi:step")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("sweep needs hi >= lo and step > 0")
    return lo, hi, step


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="satqkd", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="YAML run configuration")
            p.add_argument("--seed", type=int, help="override the config seed")
            p.add_argument("--loss-db", type=float, help="override with a fixed channel loss")
        p.add_argument("--out-dir", help="directory for report.json and CSV series")

    p = sub.add_parser("simulate", help="Monte Carlo block simulation and key extraction")
    common(p)
    p.add_argument("--regime", choices=["asymptotic", "finite"], default="finite")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("keyrate", help="analytic key-rate sweep over channel loss")
    common(p)
    p.add_argument("--sweep", type=_sweep_spec, default=(0.0, 60.0, 1.0), metavar="LO:HI:STEP")
    p.add_argument("--regime", choices=["asymptotic", "finite"], default="asymptotic")
    p.add_argument("--duration", type=float, default=300.0, help="block duration in seconds")
    p.set_defaults(func=cmd_keyrate)

    p = sub.add_parser("pass", help="integrate a satellite pass into one pooled key")
    common(p)
    p.add_argument("--regime", choices=["asymptotic", "finite"], default="finite")
    p.add_argument("--mode", choices=["analytic", "mc"], default="analytic")
    p.add_argument("--step", type=float, default=1.0, help="integration step in seconds")
    p.set_defaults(func=cmd_pass)

    p = sub.add_parser("optimize", help="grid search over source intensities")
    common(p)
    p.add_argument("--regime", choices=["asymptotic", "finite"], default="asymptotic")
    p.add_argument("--mu-min", type=float, default=0.05)
    p.add_argument("--mu-max", type=float, default=1.0)
    p.add_argument("--mu-points", type=int, default=20)
    p.add_argument("--duration", type=float, default=1.0)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("analyze-histogram", help="FWHM of a TCSPC histogram CSV")
    p.add_argument("file")
    common(p, config=False)
    p.set_defaults(func=cmd_analyze_histogram)

    p = sub.add_parser("analyze-spectrum", help="center and FWHM of a spectrum CSV")
    p.add_argument("file")
    p.add_argument("--band-center", type=float, help="band check center, nm")
    p.add_argument("--band-halfwidth", type=float, help="band check half width, nm")
    common(p, config=False)
    p.set_defaults(func=cmd_analyze_spectrum)

    p = sub.add_parser("report-distinguishability", help="pairwise mode overlap table")
    common(p)
    p.add_argument("--temp", type=float, default=25.0, help="operating temperature, degC")
    p.set_defaults(func=cmd_report_distinguishability)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except FileFormatError as exc:
        print(json.dumps({"error": "file-format", "message": str(exc)}), file=sys.stderr)
        return EXIT_FILE
    except (DomainError, SatQkdError) as exc:
        print(json.dumps({"error": "domain", "message": str(exc)}), file=sys.stderr)
        return EXIT_DOMAIN
    _emit(report, getattr(args, "out_dir", None))
    return 0


if __name__ == "__main__":
    sys.exit(main())
