# experiments/common.py
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, List, Sequence

import numpy as np

from core import storage
from core.config import ExperimentSpec, RunConfig, h_label, resolve_config, resolve_experiment
from core.logger import get_logger
from core.solver import RunResult, run

logger = get_logger(__name__)

SLE_THREADS = int(os.getenv("SLE_THREADS", "1"))


@dataclass(frozen=True)
class ExperimentContext:
    out_dir: str
    threads: int = SLE_THREADS
    db_path: str = ""
    full_scale: bool = False

    @property
    def ledger(self) -> str:
        return self.db_path or storage.ledger_path(self.out_dir)


def provenance(spec: ExperimentSpec, ctx: ExperimentContext, **extra: Any) -> Dict[str, Any]:
    header: Dict[str, Any] = {
        "experiment": spec.kind,
        "resolved_config": resolve_experiment(spec),
        "full_scale": ctx.full_scale,
    }
    if spec.substitutions and not ctx.full_scale:
        header["desk_scale_substitutions"] = list(spec.substitutions)
    header.update(extra)
    return header


def execute_run(cfg: RunConfig, kind: str, db_path: str) -> RunResult:
    """One run with its ledger entry; the ledger row is marked failed if the run raises."""
    storage.ensure_db(db_path)
    run_id = storage.start_run(db_path, cfg.label, kind, resolve_config(cfg))
    try:
        result = run(cfg)
    except Exception:
        storage.finish_run(db_path, run_id, "failed")
        raise
    status = "ok" if not result.violations else "violations"
    storage.finish_run(db_path, run_id, status, result.steps, len(result.violations), result.records)
    return result


def _execute(job: tuple[RunConfig, str, str]) -> RunResult:
    cfg, kind, db_path = job
    return execute_run(cfg, kind, db_path)


def sweep(
    configs: Sequence[RunConfig],
    kind: str,
    ctx: ExperimentContext,
    on_partial: Callable[[List[RunResult]], None] | None = None,
) -> List[RunResult]:
    """
    Run independent configurations, in parallel when ctx.threads > 1.
    Results come back in input order. If a run fails, on_partial receives
    the results finished before it so they can be flushed, then the error
    propagates.
    """
    jobs = [(cfg, kind, ctx.ledger) for cfg in configs]
    done: List[RunResult] = []
    try:
        if ctx.threads <= 1 or len(jobs) <= 1:
            for job in jobs:
                done.append(_execute(job))
        else:
            workers = min(ctx.threads, len(jobs))
            logger.info("Sweep '%s': %d runs on %d worker processes", kind, len(jobs), workers)
            with ProcessPoolExecutor(max_workers=workers) as executor:
                for result in executor.map(_execute, jobs):
                    done.append(result)
    except Exception:
        if on_partial is not None and done:
            logger.error("Sweep '%s' failed after %d of %d runs; flushing partial results.", kind, len(done), len(jobs))
            on_partial(done)
        raise
    return done


def labelled(cfg: RunConfig, **changes: Any) -> RunConfig:
    """Copy of cfg with changes applied and a label naming h and dt."""
    updated = replace(cfg, **changes)
    return replace(updated, label=f"{cfg.label} h={h_label(updated.h)} dt={updated.dt:.6g}")


def fitted_slope(steps: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(dt); NaN with fewer than two positive errors."""
    pairs = [(s, e) for s, e in zip(steps, errors) if e > 0.0 and np.isfinite(e)]
    if len(pairs) < 2:
        return float("nan")
    x, y = np.log([p[0] for p in pairs]), np.log([p[1] for p in pairs])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def out_path(ctx: ExperimentContext, name: str) -> str:
    return os.path.join(ctx.out_dir, name)
