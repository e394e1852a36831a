import math

import numpy as np
import pytest

from core import storage
from core.diff import diff_states, x_l2
from core.errors import NumericalError
from core.grids import make_phasegrid, make_xgrid
from core.models import ObservableRecord, SleState, Trajectory
from core.report_html import ExperimentReport, ReportTable, build_html_report, write_html_report


def _record(t: float) -> ObservableRecord:
    return ObservableRecord(
        t=t, mass_psi=1.0, mass_mu=1.0, energy_Ed=0.25, hgrad_norm=0.5, rho=np.empty(0), current=np.empty(0)
    )


def test_csv_header_carries_provenance(tmp_path) -> None:
    path = str(tmp_path / "out" / "table.csv")
    provenance = {"experiment": "dt_independence", "h": [1 / 256], "grid": np.arange(2)}
    storage.write_csv(path, ["h", "err", "flag", "n"], [[0.1, 1.5e-3, True, 7]], provenance)
    header, rows = storage.read_csv(path)
    assert header == {"experiment": "dt_independence", "h": [1 / 256], "grid": [0, 1]}
    assert rows == [{"h": "%.17e" % 0.1, "err": "%.17e" % 1.5e-3, "flag": "true", "n": "7"}]
    assert float(rows[0]["h"]) == 0.1


def test_csv_files_are_byte_identical_on_rerun(tmp_path) -> None:
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    records = [_record(0.0), _record(0.5)]
    storage.write_observables(str(first), records, {"run": "x"})
    storage.write_observables(str(second), records, {"run": "x"})
    assert first.read_bytes() == second.read_bytes()
    _, rows = storage.read_csv(str(first))
    assert list(rows[0]) == storage.OBSERVABLE_COLUMNS


def test_trajectory_and_error_tables(tmp_path) -> None:
    trajectory = Trajectory()
    trajectory.append(0.0, 0.0, 0.5)
    trajectory.append(0.01, 0.005, 0.49)
    _, rows = storage.read_csv(storage.write_trajectory(str(tmp_path / "traj.csv"), trajectory, {}))
    assert [float(r["eta"]) for r in rows] == [0.5, 0.49]

    path = storage.write_error_table(str(tmp_path / "err.csv"), "dt", [[0.01, 1e-3, 2e-3, 3e-3]], {})
    _, rows = storage.read_csv(path)
    assert list(rows[0]) == ["dt", *storage.ERROR_COLUMNS]


def test_state_dump(tmp_path, wave, bump) -> None:
    files = storage.write_state(str(tmp_path), "final", SleState(psi=wave, mu=bump, t=0.5), {})
    assert [f.rsplit("/", 1)[-1] for f in files] == ["final_psi.csv", "final_mu.csv"]
    header, rows = storage.read_csv(files[1])
    assert header == {"t": 0.5}
    assert len(rows) == bump.grid.J * bump.grid.K


def test_ledger_tracks_runs(tmp_path) -> None:
    db = str(tmp_path / "ledger" / "runs.sqlite3")
    storage.ensure_db(db)
    ok = storage.start_run(db, "a", "single_run", {"h": 0.1})
    failed = storage.start_run(db, "b", "single_run", {"h": 0.2})
    storage.finish_run(db, ok, "ok", steps=3, records=[_record(0.0), _record(0.1)])
    storage.finish_run(db, failed, "failed")
    runs = storage.list_runs(db)
    assert [(r["label"], r["status"], r["steps"]) for r in runs] == [("a", "ok", 3), ("b", "failed", 0)]
    assert storage.now_utc_iso().endswith("+00:00")


def test_ledger_defaults_to_output_directory(tmp_path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(storage, "DB_PATH", "")
    assert storage.ledger_path(str(tmp_path)) == str(tmp_path / "sle_runs.sqlite3")


def test_diff_of_identical_states_is_zero(wave, bump) -> None:
    state = SleState(psi=wave, mu=bump)
    d = diff_states(state, state)
    assert d.row() == (0.0, 0.0, 0.0)
    assert d.rel_mu == 0.0


def test_diff_of_phase_shifted_wave(wave, bump) -> None:
    shifted = SleState(psi=wave.with_values(-wave.values), mu=bump)
    d = diff_states(shifted, SleState(psi=wave, mu=bump))
    assert d.err_psi == pytest.approx(2.0)
    assert d.err_rho == pytest.approx(0.0, abs=1e-15)
    assert x_l2(np.ones(4), 0.25) == pytest.approx(1.0)


def test_diff_rejects_different_grids(wave, bump) -> None:
    other_mu = bump.with_values(bump.values)
    other_mu.grid = make_phasegrid(-math.pi, math.pi, 32, -2 * math.pi, 2 * math.pi, 32)
    with pytest.raises(NumericalError, match="phase grids"):
        diff_states(SleState(psi=wave, mu=other_mu), SleState(psi=wave, mu=bump))
    coarse = wave.__class__(grid=make_xgrid(-math.pi, math.pi, 128), values=np.zeros(128), h=wave.h)
    with pytest.raises(NumericalError, match="x-grids"):
        diff_states(SleState(psi=coarse, mu=bump), SleState(psi=wave, mu=bump))


def test_html_report_escapes_and_lists_results(tmp_path) -> None:
    report = ExperimentReport(kind="error_vs_h", label="<example2>", files=[str(tmp_path / "error_vs_h.csv")])
    report.tables.append(ReportTable(title="Errors", columns=["h", "err_psi"], rows=[["1/64", 1.5e-3]]))
    report.violations.append("t=0.1 energy bound: 2 exceeds 1")
    html = build_html_report(report, {"kind": "error_vs_h"})
    assert "&lt;example2&gt;" in html
    assert "1.500000e-03" in html
    assert "error_vs_h.csv" in html
    assert "energy bound" in html

    path = write_html_report(str(tmp_path), report, {})
    assert path.endswith("error_vs_h_report.html")
