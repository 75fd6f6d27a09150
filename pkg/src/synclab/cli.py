"""Command-line entry point.

One subcommand per campaign, a strict key=value config file, repeatable
`--set key=value` overrides, and deterministic outputs under `--out`:
rows.csv with the pinned column order, summary.txt (a comment header
line plus a JSON body with the fits), and optionally plotdata.csv with
aggregated (x, y, err) triples.  Exit codes: 0 success, 2 flagged
statistical failure, 1 error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import ConfigError, build_run_config, parse_pairs
from .experiments import FITTED_KINDS, run_campaign
from .ldp import PhasePredicateFailed, build_sync_control, verify_control
from .potential import validate
from .reporting import write_plot_data, write_rows_csv, write_summary, write_text

SUBCOMMANDS = {
    "escape": "escape",
    "exit-prob": "exit_probability",
    "set-sync": "set_sync",
    "point-sync": "point_sync",
    "lyapunov": "lyapunov",
    "circle-sync": "circle_sync",
    "gronwall": "gronwall",
    "control-verify": "control_verify",
    "validate-potential": "validate_potential",
}

_HELP = {
    "escape": "annulus exit times vs noise level; Arrhenius barrier fit",
    "exit-prob": "fixed-window exit probabilities with Wilson intervals",
    "set-sync": "sphere synchronization times; exponential-law fit",
    "point-sync": "point-to-attractor times; linear-law fit (d=2)",
    "lyapunov": "top Lyapunov exponent of the circle process",
    "circle-sync": "decay rate of coupled circle copies under shared noise",
    "gronwall": "accelerated polar pair vs circle process deviation",
    "control-verify": "build and replay the synchronizing control",
    "validate-potential": "check the configured potential's assumptions",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synclab",
        description="simulation lab for attraction-time scaling of a radial "
                    "gradient diffusion under small shared noise")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", type=Path, help="key = value config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key")
        p.add_argument("--out", type=Path, default=Path("out"),
                       help="output directory (default: ./out)")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker pool size (default: logical cores)")
        p.add_argument("--emit-plot-data", action="store_true",
                       help="also write aggregated (x, y, err) triples")
    return parser


def _load_values(args) -> dict:
    values = {}
    if args.config is not None:
        values.update(parse_pairs(Path(args.config).read_text()))
    override_lines = []
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError([(None, f"--set expects KEY=VALUE, got {item!r}")])
        key, _, val = item.partition("=")
        override_lines.append(f"{key.strip()} = {val.strip()}")
    values.update(parse_pairs("\n".join(override_lines)))
    return values


def _run_control_verify(cfg, outdir, emit_plot):
    alphas = cfg.campaign_params["alphas"]
    delta = cfg.campaign_params["delta"]
    flags = []
    reports = []
    schedule_rows = []
    for alpha in alphas:
        control, schedule = build_sync_control(cfg.potential, alpha, delta)
        try:
            report = verify_control(cfg.potential, control, schedule, dt=cfg.dt)
        except PhasePredicateFailed as err:
            flags.append(f"verification_failed at alpha={alpha:g}: {err}")
            continue
        reports.append((alpha, schedule, report))
        for row in schedule.csv_rows():
            schedule_rows.append([alpha] + row)
    columns = ("alpha", "phase", "t_start", "t_end", "h_description", "action")
    write_rows_csv(outdir / "schedule.csv", columns, schedule_rows,
                   cfg.config_hash, cfg.master_seed)
    text = []
    summary = {"campaign": "control_verify", "delta": delta, "alphas": list(alphas),
               "results": [], "flags": flags}
    for alpha, schedule, report in reports:
        text.append(f"=== alpha = {alpha:g} ===")
        text.append(str(report))
        summary["results"].append({
            "alpha": alpha, "total_action": schedule.total_action,
            "final_diameter": report.final_diameter,
            "eta": schedule.eta, "c1": schedule.c1, "c2": schedule.c2,
            "phase_times": list(schedule.phase_times),
            "all_predicates_passed": report.all_passed})
    write_text(outdir / "verification.txt", "\n".join(text),
               cfg.config_hash, cfg.master_seed)
    write_summary(outdir / "summary.txt", summary, cfg.config_hash, cfg.master_seed)
    if emit_plot:
        triples = [(a, s.total_action, 0.0) for a, s, _r in reports]
        write_plot_data(outdir / "plotdata.csv", triples, cfg.config_hash,
                        cfg.master_seed)
    return 2 if flags else 0


def _run_validate_potential(cfg, outdir):
    report = validate(cfg.potential)
    write_text(outdir / "report.txt", str(report), cfg.config_hash, cfg.master_seed)
    write_summary(outdir / "summary.txt",
                  {"campaign": "validate_potential",
                   "all_passed": report.all_passed,
                   "checks": [{"name": c.name, "passed": c.passed,
                               "witness": c.witness, "detail": c.detail}
                              for c in report.checks]},
                  cfg.config_hash, cfg.master_seed)
    return 0 if report.all_passed else 2


def run(cfg, outdir: Path, jobs: int = 1, emit_plot: bool = False) -> int:
    """Execute the configured campaign and write its outputs."""
    outdir.mkdir(parents=True, exist_ok=True)
    if cfg.kind == "control_verify":
        return _run_control_verify(cfg, outdir, emit_plot)
    if cfg.kind == "validate_potential":
        return _run_validate_potential(cfg, outdir)

    campaign = cfg.campaign(jobs=jobs)
    if cfg.kind in FITTED_KINDS and campaign.replicas < 30:
        write_summary(outdir / "summary.txt",
                      {"campaign": cfg.kind,
                       "flags": [f"too_few_replicas: {campaign.replicas} < 30 "
                                 "for a fitted claim"]},
                      cfg.config_hash, cfg.master_seed)
        print(f"flagged: replicas={campaign.replicas} < 30 for fitted campaign",
              file=sys.stderr)
        return 2

    result = run_campaign(campaign)
    write_rows_csv(outdir / "rows.csv", result.columns, result.rows,
                   cfg.config_hash, cfg.master_seed)
    write_summary(outdir / "summary.txt", result.summary, cfg.config_hash,
                  cfg.master_seed)
    if emit_plot:
        write_plot_data(outdir / "plotdata.csv", result.plot_data,
                        cfg.config_hash, cfg.master_seed)
    if result.flags:
        for flag in result.flags:
            print(f"flagged: {flag}", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kind = SUBCOMMANDS[args.command]
    try:
        values = _load_values(args)
        cfg = build_run_config(values, kind=kind)
    except ConfigError as err:
        print(f"config error:\n{err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return 1
    try:
        return run(cfg, args.out, jobs=args.jobs, emit_plot=args.emit_plot_data)
    except Exception as err:  # surfaced with module-qualified type
        print(f"{type(err).__module__}.{type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
