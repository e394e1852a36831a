# experiments/single_run.py
from core import storage
from core.config import ExperimentSpec
from core.logger import get_logger
from core.report_html import ExperimentReport, ReportTable
from core.storage import OBSERVABLE_COLUMNS

from .common import ExperimentContext, execute_run, out_path, provenance

logger = get_logger(__name__)

WIGNER_COLUMNS = ["t", "rho", "current", "kinetic", "kinetic_plain", "norm", "imag_residue"]


def run_experiment(spec: ExperimentSpec, ctx: ExperimentContext) -> ExperimentReport:
    cfg = spec.base
    header = provenance(spec, ctx)
    report = ExperimentReport(kind=spec.kind, label=cfg.label)

    result = execute_run(cfg, spec.kind, ctx.ledger)
    xg = cfg.xgrid()
    stem = cfg.label.replace(" ", "_")

    report.files.append(storage.write_observables(out_path(ctx, f"{stem}_observables.csv"), result.records, header))
    report.files.extend(storage.write_profiles(ctx.out_dir, stem, result.profiles, xg, header))
    if cfg.full_state:
        report.files.extend(storage.write_state(ctx.out_dir, stem, result.final, header))

    wigner_rows = [
        [t, *(checks[c] for c in WIGNER_COLUMNS[1:])] for t, checks in sorted(result.wigner.items())
    ]
    if wigner_rows:
        report.files.append(
            storage.write_csv(out_path(ctx, f"{stem}_wigner_moments.csv"), WIGNER_COLUMNS, wigner_rows, header)
        )
        report.tables.append(
            ReportTable(
                title="Wigner moment identities (relative l2 mismatch)",
                columns=WIGNER_COLUMNS,
                rows=wigner_rows,
            )
        )

    report.tables.append(
        ReportTable(
            title="Observables",
            columns=OBSERVABLE_COLUMNS,
            rows=[[r.scalars()[c] for c in OBSERVABLE_COLUMNS] for r in result.records],
        )
    )
    report.violations = [str(v) for v in result.violations]
    logger.info("Single run '%s' done: %d records, %d violation(s)", cfg.label, len(result.records), len(result.violations))
    return report
