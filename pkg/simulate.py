import argparse
import json
import os
import sys
from dataclasses import replace
from typing import List

from core.config import (
    CONFIG_PATH,
    ExperimentSpec,
    RunConfig,
    apply_full_scale,
    load_config,
    resolve_config,
    resolve_experiment,
)
from core.errors import ConfigError, SLEError
from core.logger import attach_run_log, detach_run_log, get_logger, set_level
from core.report_html import write_html_report
from experiments import EXPERIMENTS
from experiments.common import SLE_THREADS, ExperimentContext

logger = get_logger(__name__)


def _as_experiment(cfg: RunConfig | ExperimentSpec) -> ExperimentSpec:
    if isinstance(cfg, ExperimentSpec):
        return cfg
    return ExperimentSpec(kind="single_run", base=cfg)


def _prepare(args: argparse.Namespace, spec: ExperimentSpec) -> tuple[ExperimentSpec, ExperimentContext]:
    if args.full_scale:
        spec = apply_full_scale(spec)
    if args.strict_cfl:
        spec = replace(spec, base=replace(spec.base, strict_cfl=True))
    out_dir = args.out or spec.output_dir
    spec = replace(spec, output_dir=out_dir)
    ctx = ExperimentContext(out_dir=out_dir, threads=max(1, args.threads), full_scale=args.full_scale)
    return spec, ctx


def run_experiment(spec: ExperimentSpec, ctx: ExperimentContext) -> int:
    driver = EXPERIMENTS.get(spec.kind)
    if driver is None:
        raise ConfigError(f"no experiment registered for kind '{spec.kind}'")

    os.makedirs(ctx.out_dir, exist_ok=True)
    resolved = resolve_experiment(spec)
    with open(os.path.join(ctx.out_dir, f"{spec.kind}_resolved_config.json"), "w", encoding="utf-8") as f:
        json.dump(resolved, f, indent=2, sort_keys=True)

    log_path = attach_run_log(ctx.out_dir, spec.kind)
    try:
        logger.info("Starting experiment '%s' (%s) into %s", spec.kind, spec.base.label, ctx.out_dir)
        report = driver(spec, ctx)
        report.files.append(log_path)
        path = write_html_report(ctx.out_dir, report, resolved)
    finally:
        detach_run_log(log_path)
    if report.violations:
        logger.error("Experiment '%s' recorded %d violation(s); see %s", spec.kind, len(report.violations), path)
    logger.info("Experiment '%s' finished: %d file(s), report at %s", spec.kind, len(report.files), path)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if not isinstance(cfg, RunConfig):
        raise ConfigError(f"{args.config}: 'run' expects a run config; use 'experiment' for kind '{cfg.kind}'")
    spec, ctx = _prepare(args, _as_experiment(cfg))
    return run_experiment(spec, ctx)


def cmd_experiment(args: argparse.Namespace) -> int:
    spec, ctx = _prepare(args, _as_experiment(load_config(args.config)))
    return run_experiment(spec, ctx)


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if isinstance(cfg, RunConfig):
        resolved = resolve_config(cfg)
    else:
        resolved = resolve_experiment(apply_full_scale(cfg) if args.full_scale else cfg)
    json.dump(resolved, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    logger.info("Config %s is valid.", args.config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Time-splitting solver for the coupled Schroedinger-Liouville-Ehrenfest system.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=CONFIG_PATH, help="JSON config file (default: %(default)s)")
    common.add_argument("--out", default=None, help="output directory (default: from config / OUTPUT_DIR)")
    common.add_argument("--threads", type=int, default=SLE_THREADS, help="parallel runs in sweeps")
    common.add_argument("--strict-cfl", action="store_true", help="fail instead of warning on CFL violations")
    common.add_argument(
        "--full-scale", "--paper-exact", dest="full_scale", action="store_true", help="undo desk-scale substitutions"
    )
    common.add_argument("--log-level", default=None, help="override LOG_LEVEL")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run a single configuration").set_defaults(func=cmd_run)
    sub.add_parser("experiment", parents=[common], help="run an experiment sweep").set_defaults(func=cmd_experiment)
    sub.add_parser("validate-config", parents=[common], help="validate and echo the resolved config").set_defaults(
        func=cmd_validate
    )
    return parser


def main(argv: List[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)
    try:
        return args.func(args)
    except SLEError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    except Exception as e:
        logger.exception("Fatal solver error: %s", e)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
