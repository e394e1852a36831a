# experiments/ap_study.py
import numpy as np

from core import storage
from core.config import ExperimentSpec, h_label
from core.grids import phase_l2_norm
from core.limit_solver import nu_grids, pool_density, run_limit
from core.logger import get_logger
from core.observables import position_density
from core.report_html import ExperimentReport, ReportTable

from .common import ExperimentContext, labelled, out_path, provenance, sweep

logger = get_logger(__name__)

COLUMNS = ["dist_rho", "dist_mu"]
MONOTONE_SLACK = 0.10


def run_experiment(spec: ExperimentSpec, ctx: ExperimentContext) -> ExperimentReport:
    base = spec.base
    settings = spec.limit
    h_init = min(spec.h_values)
    header = provenance(
        spec, ctx,
        limit_model="classical Liouville limit",
        nu_init=settings.init,
        nu_init_note=(
            "Wigner transform of psi_in at h=%s pooled to the (x, xi) grid, clipped at 0, renormalised"
            % h_label(h_init)
            if settings.init == "wigner"
            else "|A|^2 placed at xi = S'(x)"
        ),
    )

    limit = run_limit(base, settings, h_init=h_init)
    files = [storage.write_limit_observables(out_path(ctx, "ap_limit_observables.csv"), limit.records, header)]
    xg_nu, _ = nu_grids(base, settings)
    files.append(
        storage.write_csv(
            out_path(ctx, "ap_limit_rho.csv"), ["x", "rho"], zip(xg_nu.points, limit.nu.x_marginal), header
        )
    )

    results = sweep([labelled(base, h=h) for h in sorted(spec.h_values, reverse=True)], spec.kind, ctx)
    rows = []
    for r in results:
        xg = r.config.xgrid()
        rho = pool_density(position_density(r.final.psi), xg, xg_nu)
        dist_rho = float(np.sqrt(xg_nu.dx * np.sum((rho - limit.nu.x_marginal) ** 2)))
        dist_mu = phase_l2_norm(r.final.mu.values - limit.mu.values, limit.mu.grid)
        rows.append([r.config.h, dist_rho, dist_mu])
    files.append(storage.write_error_table(out_path(ctx, "ap_study.csv"), "h", rows, header, columns=COLUMNS))

    distances = [row[1] for row in rows]
    monotone = all(b <= a * (1.0 + MONOTONE_SLACK) for a, b in zip(distances, distances[1:]))

    report = ExperimentReport(kind=spec.kind, label=base.label, files=files)
    report.tables.append(
        ReportTable(
            title=f"Distance to the classical limit at T={base.T:g}",
            columns=["h", *COLUMNS],
            rows=[[h_label(h), a, b] for h, a, b in rows],
            note="rho of each run is averaged onto the limit solver's x nodes before comparing.",
        )
    )
    report.notes.append(
        "rho distance decreases with h (within %d%% slack): %s" % (int(MONOTONE_SLACK * 100), "yes" if monotone else "no")
    )
    report.violations.extend(limit.violations)
    for r in results:
        report.violations.extend(f"{r.config.label}: {v}" for v in r.violations)
    logger.info("ap_study: rho distances %s, monotone=%s", ["%.3e" % d for d in distances], monotone)
    return report
