# experiments/error_vs_h.py
from typing import List, Tuple

from core import storage
from core.config import ExperimentSpec, h_label
from core.diff import StateDiff
from core.logger import get_logger
from core.report_html import ExperimentReport, ReportTable
from core.storage import ERROR_COLUMNS

from .common import ExperimentContext, out_path, provenance
from .dt_independence import paired_diffs

logger = get_logger(__name__)


def run_experiment(spec: ExperimentSpec, ctx: ExperimentContext) -> ExperimentReport:
    header = provenance(spec, ctx)
    path = out_path(ctx, "error_vs_h.csv")

    def write(rows: List[Tuple[float, StateDiff]]) -> str:
        return storage.write_error_table(path, "h", ([h, *d.row()] for h, d in rows), header)

    diffs, results = paired_diffs(spec, ctx, on_rows=write)
    report = ExperimentReport(kind=spec.kind, label=spec.base.label, files=[write(diffs)])
    report.tables.append(
        ReportTable(
            title="l2 errors at T with dt=%g against the h-scaled reference" % spec.test_dt,
            columns=["h", *ERROR_COLUMNS],
            rows=[[h_label(h), *d.row()] for h, d in diffs],
        )
    )

    if diffs:
        smallest = min(diffs, key=lambda item: item[0])[1]
        ratio = smallest.err_psi / max(smallest.err_rho, smallest.err_mu, 1e-300)
        rho = [d.err_rho for _, d in diffs]
        mu = [d.err_mu for _, d in diffs]
        spread_rho = max(rho) / max(min(rho), 1e-300)
        spread_mu = max(mu) / max(min(mu), 1e-300)
        report.notes.append(
            f"At the smallest h the psi error is {ratio:.1f}x the larger observable error; "
            f"across h the rho error varies by {spread_rho:.2f}x and the mu error by {spread_mu:.2f}x."
        )
        logger.info("error_vs_h: psi/observable ratio %.1f, rho spread %.2f, mu spread %.2f", ratio, spread_rho, spread_mu)

    for r in results:
        report.violations.extend(f"{r.config.label}: {v}" for v in r.violations)
    return report
