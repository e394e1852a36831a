# experiments/ode_crosscheck.py
from dataclasses import replace
from typing import List

import numpy as np

from core import storage
from core.config import ExperimentSpec, InitialCondition
from core.ehrenfest_ode import run_ode
from core.grids import PhaseGrid
from core.logger import get_logger
from core.models import SleState
from core.report_html import ExperimentReport, ReportTable
from core.solver import run

from .common import ExperimentContext, out_path, provenance

logger = get_logger(__name__)

COLUMNS = ["t", "y_ode", "eta_ode", "j_ode", "k_ode", "j_max", "k_max", "cell_distance"]


def cyclic_distance(a: int, b: int, n: int) -> int:
    d = abs(a - b) % n
    return min(d, n - d)


def peak_cell(mu_values: np.ndarray) -> tuple[int, int]:
    j, k = np.unravel_index(int(np.argmax(mu_values)), mu_values.shape)
    return int(j), int(k)


def compare(pg: PhaseGrid, t: float, y: float, eta: float, peak: tuple[int, int]) -> list:
    j_ode, k_ode = pg.nearest_cell(y, eta)
    distance = max(cyclic_distance(j_ode, peak[0], pg.J), cyclic_distance(k_ode, peak[1], pg.K))
    return [t, y, eta, j_ode, k_ode, peak[0], peak[1], distance]


def run_experiment(spec: ExperimentSpec, ctx: ExperimentContext) -> ExperimentReport:
    y0, eta0 = spec.ode_start
    cfg = replace(
        spec.base,
        mu_init=InitialCondition("point_mass", {"y0": y0, "eta0": eta0}),
        cadence=1,
        label=f"{spec.base.label} point mass",
    )
    header = provenance(spec, ctx, y0=y0, eta0=eta0)

    peaks: List[tuple[int, int]] = []

    def watch(state: SleState) -> None:
        peaks.append(peak_cell(state.mu.values))

    result = run(cfg, observer=watch)
    ode = run_ode(cfg, y0, eta0)
    pg = cfg.phasegrid()

    rows = [
        compare(pg, t, y, eta, peak)
        for t, y, eta, peak in zip(ode.trajectory.t, ode.trajectory.y, ode.trajectory.eta, peaks)
    ]
    files = [
        storage.write_trajectory(out_path(ctx, "ode_trajectory.csv"), ode.trajectory, header),
        storage.write_csv(out_path(ctx, "ode_crosscheck.csv"), COLUMNS, rows, header),
    ]
    worst = max((row[-1] for row in rows), default=0)

    report = ExperimentReport(kind=spec.kind, label=cfg.label, files=files)
    report.tables.append(ReportTable(title="Peak mu cell against the Ehrenfest trajectory", columns=COLUMNS, rows=rows))
    report.notes.append(f"Largest distance between the peak cell and the trajectory cell: {worst} cell(s).")
    report.violations = [str(v) for v in result.violations]
    if worst > 1:
        report.violations.append(f"peak cell drifted {worst} cells from the Ehrenfest trajectory")
    logger.info("ode_crosscheck: worst cell distance %d over %d samples", worst, len(rows))
    return report
