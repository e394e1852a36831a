# experiments/dt_independence.py
from typing import Any, Callable, Dict, List, Tuple

from core import storage
from core.config import ExperimentSpec, RunConfig, h_label
from core.diff import StateDiff, diff_states
from core.logger import get_logger
from core.report_html import ExperimentReport, ReportTable
from core.solver import RunResult

from .common import ExperimentContext, labelled, out_path, provenance, sweep

logger = get_logger(__name__)

COLUMNS = ["rel_diff_mu", "err_psi", "err_rho", "err_mu"]


def paired_diffs(
    spec: ExperimentSpec,
    ctx: ExperimentContext,
    on_rows: Callable[[List[Tuple[float, StateDiff]]], Any] | None = None,
) -> Tuple[List[Tuple[float, StateDiff]], List[RunResult]]:
    """Run (test_dt, reference_dt) pairs for every h and diff their final states."""
    configs = []
    for h in spec.h_values:
        configs.append(labelled(spec.base, h=h, dt=spec.test_dt))
        configs.append(labelled(spec.base, h=h, dt=spec.reference_dt_for(h)))

    def diffs_of(results: List[RunResult]) -> List[Tuple[float, StateDiff]]:
        out = []
        for i in range(0, len(results) - 1, 2):
            test, reference = results[i], results[i + 1]
            out.append((test.config.h, diff_states(test.final, reference.final)))
        return out

    def flush(partial: List[RunResult]) -> None:
        if on_rows is not None:
            on_rows(diffs_of(partial))

    results = sweep(configs, spec.kind, ctx, on_partial=flush)
    return diffs_of(results), results


def profile_stem(label: str, cfg: RunConfig, role: str) -> str:
    return f"{label.replace(' ', '_')}_h{h_label(cfg.h).replace('/', '_')}_{role}"


def write_final_profiles(
    results: List[RunResult], label: str, ctx: ExperimentContext, header: Dict[str, Any]
) -> List[str]:
    """rho, current and kappa at T for every (test, reference) pair."""
    files: List[str] = []
    for i, r in enumerate(results):
        role = "test" if i % 2 == 0 else "reference"
        final = r.records[-1]
        files.extend(
            storage.write_profiles(
                ctx.out_dir, profile_stem(label, r.config, role), [final], r.config.xgrid(),
                {**header, "dt": r.config.dt, "role": role},
            )
        )
    return files


def run_experiment(spec: ExperimentSpec, ctx: ExperimentContext) -> ExperimentReport:
    header = provenance(spec, ctx, measured_at="final time T")
    path = out_path(ctx, "dt_independence.csv")

    def write(rows: List[Tuple[float, StateDiff]]) -> str:
        return storage.write_error_table(
            path, "h",
            ([h, d.rel_mu, d.err_psi, d.err_rho, d.err_mu] for h, d in rows),
            header, columns=COLUMNS,
        )

    diffs, results = paired_diffs(spec, ctx, on_rows=write)
    report = ExperimentReport(kind=spec.kind, label=spec.base.label, files=[write(diffs)])
    report.files.extend(write_final_profiles(results, spec.base.label, ctx, header))
    report.tables.append(
        ReportTable(
            title="Relative l2 difference of mu at T between dt=%g and the h-scaled reference" % spec.test_dt,
            columns=["h", *COLUMNS],
            rows=[[h_label(h), d.rel_mu, d.err_psi, d.err_rho, d.err_mu] for h, d in diffs],
        )
    )
    for r in results:
        report.violations.extend(f"{r.config.label}: {v}" for v in r.violations)
    for h, d in diffs:
        logger.info("h=%s: relative mu difference %.3e", h_label(h), d.rel_mu)
    return report
