"""Command-line entry point: gen, run, cover, report and check-model."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .campaign import ConfigError, build_tests, load_config, load_report, parse_kv, run_campaign, write_report, write_tests
from .coverage import CoverageIntegrityError, merge
from .mbt import BudgetExceeded, ModelError, Verdict, build_protocol_model, check, expand_targets
from .report import ReportError, render

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_TOOL_ERROR = 2

log = logging.getLogger("handover_cdv")


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value campaign file")
    common.add_argument("--seed", type=_u64, help="master seed (overrides the config file)")
    common.add_argument("--jobs", type=_positive, default=1, help="parallel simulation workers")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="handover-cdv", description="Coverage-driven testbench for a handover controller.")
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("gen", parents=[common], help="generate abstract and concrete tests only")
    sub.add_parser("run", parents=[common], help="generate, simulate, check and report a campaign")
    cover = sub.add_parser("cover", parents=[common], help="merge the reports of several campaigns")
    cover.add_argument("campaigns", nargs="+", type=Path)
    rep = sub.add_parser("report", parents=[common], help="render tables and figures for a campaign directory")
    rep.add_argument("campaign", nargs="?", type=Path)
    rep.add_argument("--no-figures", action="store_true")
    sub.add_parser("check-model", parents=[common], help="model-check the protocol properties")
    return p


def _config(args):
    if args.config is None:
        raise ConfigError("--config is required for this verb")
    return load_config(args.config.read_text(), seed=args.seed)


def _need_out(args) -> Path:
    if args.out is None:
        raise ConfigError("--out is required for this verb")
    return args.out


def cmd_gen(args) -> int:
    cfg = _config(args)
    out = _need_out(args)
    tests = build_tests(cfg)
    write_tests(out, tests)
    print(f"{len(tests.abstract)} abstract and {len(tests.concrete)} concrete tests written to {out / 'tests'}")
    for name in tests.unreachable:
        print(f"not reachable, no test: {name}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    out = _need_out(args)
    t0 = time.perf_counter()
    result = run_campaign(cfg, out, jobs=args.jobs)
    render(out)
    r = result.report
    print(f"{r.runs} runs ({r.errors} errors) in {time.perf_counter() - t0:.1f}s; report in {out}")
    failed = [req for req, (_, _, f) in r.requirements.items() if f]
    if failed:
        print("failed requirements: " + " ".join(failed))
        return EXIT_FAILED
    return EXIT_OK


def cmd_cover(args) -> int:
    out = _need_out(args)
    reports = []
    for d in args.campaigns:
        path = d / "report.json"
        if not path.is_file():
            raise ReportError(f"{d} is missing: report.json")
        reports.append(load_report(path))
    merged = merge(reports)
    write_report(out, merged)
    render(out)
    print(f"merged {len(reports)} campaigns, {merged.runs} runs; report in {out}")
    return EXIT_FAILED if merged.any_failed() else EXIT_OK


def cmd_report(args) -> int:
    campdir = args.campaign or args.out
    if campdir is None:
        raise ConfigError("give a campaign directory")
    for path in render(campdir, figures=not args.no_figures):
        print(path)
    return EXIT_OK


def cmd_check_model(args) -> int:
    targets = "all-tuples;reqs"
    if args.config is not None:
        kv = parse_kv(args.config.read_text())
        if "targets" in kv:
            targets = kv["targets"][0]
    net = build_protocol_model()
    rows = []
    for prop in expand_targets(targets):
        res = check(net, prop)
        status = "Reachable" if prop.kind.value == "Reach" and res.verdict is Verdict.HOLDS else res.verdict.value
        steps = len(res.witness) if res.witness is not None else None
        rows.append({"property": prop.name, "verdict": status, "witness_steps": steps, "states": res.states})
        print(f"{prop.name} {status}" + (f" ({steps} steps)" if steps is not None else ""))
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "model.txt").write_text(net.text())
        (args.out / "check.json").write_text(json.dumps(rows, indent=1) + "\n")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "cover": cmd_cover, "report": cmd_report, "check-model": cmd_check_model}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.verb](args)
    except (ValueError, KeyError, ReportError, ModelError, BudgetExceeded, CoverageIntegrityError, OSError) as e:
        # ConfigError, CatalogError and malformed generator settings all land here
        print(f"error: {e}", file=sys.stderr)
        return EXIT_TOOL_ERROR


if __name__ == "__main__":
    sys.exit(main())
