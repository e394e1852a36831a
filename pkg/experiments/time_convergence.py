# experiments/time_convergence.py
from typing import List

from core import storage
from core.config import ExperimentSpec, h_label
from core.diff import diff_states
from core.logger import get_logger
from core.report_html import ExperimentReport, ReportTable
from core.solver import RunResult
from core.storage import ERROR_COLUMNS

from .common import ExperimentContext, fitted_slope, labelled, out_path, provenance, sweep

logger = get_logger(__name__)


def run_experiment(spec: ExperimentSpec, ctx: ExperimentContext) -> ExperimentReport:
    base = spec.base
    reference_dt = spec.reference_dt_for(base.h)
    header = provenance(spec, ctx, reference_dt=reference_dt)
    path = out_path(ctx, "time_convergence.csv")
    dts = sorted(spec.dt_values, reverse=True)

    # reference first so partial flushes can already diff against it
    configs = [labelled(base, dt=reference_dt)] + [labelled(base, dt=dt) for dt in dts]

    def rows_of(results: List[RunResult]) -> List[list]:
        if not results:
            return []
        reference = results[0].final
        return [[r.config.dt, *diff_states(r.final, reference).row()] for r in results[1:]]

    def flush(partial: List[RunResult]) -> None:
        storage.write_error_table(path, "dt", rows_of(partial), header)

    results = sweep(configs, spec.kind, ctx, on_partial=flush)
    rows = rows_of(results)
    files = [storage.write_error_table(path, "dt", rows, header)]

    slopes = [[name, fitted_slope([r[0] for r in rows], [r[i + 1] for r in rows])] for i, name in enumerate(ERROR_COLUMNS)]
    files.append(storage.write_csv(out_path(ctx, "time_convergence_slopes.csv"), ["error", "slope"], slopes, header))

    report = ExperimentReport(kind=spec.kind, label=base.label, files=files)
    report.tables.append(
        ReportTable(
            title=f"Errors at T against dt={reference_dt:.6g} (h={h_label(base.h)})",
            columns=["dt", *ERROR_COLUMNS],
            rows=rows,
        )
    )
    report.tables.append(ReportTable(title="Fitted log-log slopes", columns=["error", "slope"], rows=slopes))
    for name, slope in slopes:
        logger.info("time_convergence: %s slope %.3f", name, slope)
    for r in results:
        report.violations.extend(f"{r.config.label}: {v}" for v in r.violations)
    return report
