"""Command-line entry point.

    sqfock run --scenario fig2 --config fig2.toml --out results/
    sqfock validate --config fig2.toml
    sqfock list-scenarios

Exit codes: 0 success, 2 configuration error, 3 integration did not converge,
4 Fock truncation too small. The worker count for sweeps comes from
``SQFOCK_WORKERS`` (default: all cores).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config, scenarios
from .errors import ConfigError, SqfockError


def _load(path):
    return config.load(path) if path else config.ScenarioConfig()


def cmd_run(args):
    cfg = _load(args.config)
    name = scenarios.resolve_name(cfg, args.scenario)
    cfg.scenario = name
    out = args.out or cfg.path
    if not out:
        raise ConfigError("no output directory (use --out or output.path)")
    out = Path(out)
    result = scenarios.run(name, cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    digest = cfg.hash()
    for tab in result.tables:
        path = tab.write(out, name, digest, cfg.precision)
        print(path)
        for line in tab.diagnostics:
            if "FLAG" in line or "DISCREPANCY" in line:
                print(f"{tab.name}: {line}", file=sys.stderr)
    for label, report in result.rwa:
        if not report.ok:
            print(f"warning: {label}: rotating-wave ratios {report.ratios} exceed {report.threshold:g}",
                  file=sys.stderr)
    return 0


def cmd_validate(args):
    cfg = config.load(args.config)
    name = scenarios.resolve_name(cfg, args.scenario)
    reports = scenarios.validate(name, cfg)
    print(f"{args.config}: valid {name} config (sha256 {cfg.hash()})")
    if not reports:
        print("no rotating-wave conditions apply (closed-form scenario)")
    for label, report in reports:
        status = "ok" if report.ok else "FAIL"
        ratios = ", ".join(f"{x:.4g}" for x in report.ratios)
        print(f"rwa {status} [{label}]: ratios {ratios} (threshold {report.threshold:g})")
    return 0


def cmd_list(args):
    for name, scen in scenarios.SCENARIOS.items():
        print(f"{name:12s} {scen.summary}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="sqfock", description="Squeezed-Fock mechanical qubit scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a named scenario and write CSV tables")
    run.add_argument("--scenario", help="scenario name (see list-scenarios)")
    run.add_argument("--config", help="TOML config; defaults apply when omitted")
    run.add_argument("--out", help="output directory")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a config and print the rotating-wave report")
    val.add_argument("--config", required=True)
    val.add_argument("--scenario")
    val.set_defaults(func=cmd_validate)

    ls = sub.add_parser("list-scenarios", help="list scenario names")
    ls.set_defaults(func=cmd_list)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SqfockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
