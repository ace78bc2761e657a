"""Batch command-line harness: generate datasets, run experiments, re-emit reports.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import ConfigError, ExperimentConfig, emit_report, load_report, run_experiment
from .data import save_csv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="qforecast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("generate", "write the configured synthetic dataset as CSV + metadata sidecar"),
        ("run", "run the configured experiment and write its report files"),
        ("report", "re-emit report files from a completed run's report.json"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a YAML/JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--backend", choices=["dense", "mps"], default=None,
                       help="override the circuit backend")
    return parser


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    return cfg.with_overrides(seed=args.seed, output_dir=args.out, backend=args.backend)


def _cmd_generate(args) -> int:
    cfg = _load_config(args)
    from .bench import _build_dataset  # same construction path as experiments

    dataset = _build_dataset(cfg)
    out = Path(cfg["output_dir"])
    path = save_csv(dataset, out / "dataset.csv")
    print(f"wrote {dataset.n_customers} customers x {dataset.n_hours} hours to {path}")
    return 0


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    report = run_experiment(cfg)
    files = emit_report(report)
    print(f"experiment: {report.kind}")
    print(f"subset: {report.subset['role']} {report.subset['member_ids']}")
    for name in sorted(report.models):
        avg = report.models[name]["average"]
        print(f"  {name}: MAE {avg['mae']:.4f}  MSE {avg['mse']:.4f}")
    if report.tiers:
        for tier in report.tiers:
            print(
                f"  tier {tier['tier']:<6} share {tier['share_pct']:5.1f}%  "
                f"avg MAE {tier['avg_mae']:.4f}"
            )
    for f in files:
        print(f"wrote {f}")
    return 0


def _cmd_report(args) -> int:
    cfg = _load_config(args)
    report_path = Path(cfg["output_dir"]) / "report.json"
    if not report_path.exists():
        raise ConfigError(f"no report found at {report_path}; run the experiment first")
    report = load_report(report_path)
    files = emit_report(report, out_dir=cfg["output_dir"])
    for f in files:
        print(f"wrote {f}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"generate": _cmd_generate, "run": _cmd_run, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
