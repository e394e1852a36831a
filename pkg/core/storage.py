# core/storage.py
import csv
import datetime
import json
import os
import sqlite3
from typing import Any, Dict, Iterable, List, Mapping, Sequence

import numpy as np
import pytz
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential_jitter

from .config import OUTPUT_DIR
from .grids import XGrid
from .logger import get_logger
from .models import LimitRecord, ObservableRecord, SleState, Trajectory

logger = get_logger(__name__)

DB_PATH = os.getenv("DB_PATH", "")

OBSERVABLE_COLUMNS = ["t", "mass_psi", "mass_mu", "energy_Ed", "hgrad_norm"]
LIMIT_COLUMNS = ["t", "mass_nu", "mass_mu", "energy", "model"]
PROFILE_COLUMNS = ["x", "rho", "current", "kinetic"]
TRAJECTORY_COLUMNS = ["t", "y", "eta"]
ERROR_COLUMNS = ["err_psi", "err_rho", "err_mu"]


def _fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17e" % float(value)
    return str(value)


def write_csv(
    path: str,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    provenance: Mapping[str, Any],
) -> str:
    """Write rows below a '# '-prefixed JSON header; no timestamps, so reruns are byte-identical."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    header = json.dumps(provenance, indent=2, sort_keys=True, default=_json_default)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in header.splitlines():
            f.write(f"# {line}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    logger.debug("Wrote %s", path)
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"cannot serialise {type(value).__name__} into a provenance header")


def read_csv(path: str) -> tuple[Dict[str, Any], List[Dict[str, str]]]:
    """Return (provenance, rows) for a file written by write_csv."""
    header_lines: List[str] = []
    with open(path, "r", encoding="utf-8") as f:
        body: List[str] = []
        for line in f:
            if line.startswith("# ") and not body:
                header_lines.append(line[2:])
            else:
                body.append(line)
    provenance = json.loads("".join(header_lines)) if header_lines else {}
    return provenance, list(csv.DictReader(body))


def write_observables(path: str, records: Sequence[ObservableRecord], provenance: Mapping[str, Any]) -> str:
    rows = ([r.scalars()[c] for c in OBSERVABLE_COLUMNS] for r in records)
    return write_csv(path, OBSERVABLE_COLUMNS, rows, provenance)


def write_limit_observables(path: str, records: Sequence[LimitRecord], provenance: Mapping[str, Any]) -> str:
    rows = ([r.t, r.mass_nu, r.mass_mu, r.energy, "limit"] for r in records)
    return write_csv(path, LIMIT_COLUMNS, rows, provenance)


def write_profiles(
    out_dir: str, stem: str, profiles: Sequence[ObservableRecord], xg: XGrid, provenance: Mapping[str, Any]
) -> List[str]:
    written = []
    x = xg.points
    for p in profiles:
        kinetic = p.kinetic if p.kinetic is not None else np.full_like(x, np.nan)
        path = os.path.join(out_dir, f"{stem}_profile_t{p.t:.6f}.csv")
        rows = zip(x, p.rho, p.current, kinetic)
        written.append(write_csv(path, PROFILE_COLUMNS, rows, {**provenance, "t": p.t}))
    return written


def write_trajectory(path: str, trajectory: Trajectory, provenance: Mapping[str, Any]) -> str:
    return write_csv(path, TRAJECTORY_COLUMNS, zip(trajectory.t, trajectory.y, trajectory.eta), provenance)


def write_error_table(
    path: str, parameter: str, rows: Iterable[Sequence[Any]], provenance: Mapping[str, Any],
    columns: Sequence[str] = ERROR_COLUMNS,
) -> str:
    return write_csv(path, [parameter, *columns], rows, provenance)


def write_state(out_dir: str, stem: str, state: SleState, provenance: Mapping[str, Any]) -> List[str]:
    """Full-state dump: psi as (x, re, im) and mu as (y, eta, mu)."""
    psi, mu = state.psi, state.mu
    psi_path = write_csv(
        os.path.join(out_dir, f"{stem}_psi.csv"),
        ["x", "re_psi", "im_psi"],
        zip(psi.grid.points, psi.values.real, psi.values.imag),
        {**provenance, "t": state.t},
    )
    Y, E = np.meshgrid(mu.grid.y, mu.grid.eta, indexing="ij")
    mu_path = write_csv(
        os.path.join(out_dir, f"{stem}_mu.csv"),
        ["y", "eta", "mu"],
        zip(Y.ravel(), E.ravel(), mu.values.ravel()),
        {**provenance, "t": state.t},
    )
    return [psi_path, mu_path]


# ---------------------------------------------------------------------------
# Run ledger
# ---------------------------------------------------------------------------

_db_retry = retry(
    retry=retry_if_exception_type(sqlite3.OperationalError),
    wait=wait_exponential_jitter(initial=0.1, max=5),
    stop=stop_after_attempt(5),
    reraise=True,
)


def ledger_path(out_dir: str = OUTPUT_DIR) -> str:
    return DB_PATH or os.path.join(out_dir, "sle_runs.sqlite3")


def _connect(db_path: str) -> sqlite3.Connection:
    os.makedirs(os.path.dirname(db_path) or ".", exist_ok=True)
    return sqlite3.connect(db_path, timeout=30)


def now_utc_iso() -> str:
    return datetime.datetime.now(tz=pytz.UTC).isoformat()


@_db_retry
def ensure_db(db_path: str) -> None:
    with _connect(db_path) as con:
        cur = con.cursor()
        cur.execute(
            """
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                label TEXT,
                kind TEXT,
                config TEXT,
                started TEXT,
                finished TEXT,
                status TEXT,      -- running|ok|violations|failed
                steps INTEGER,
                violations INTEGER
            )
        """
        )
        cur.execute(
            """
            CREATE TABLE IF NOT EXISTS observables (
                run_id INTEGER REFERENCES runs(id),
                t REAL,
                mass_psi REAL,
                mass_mu REAL,
                energy_Ed REAL,
                hgrad_norm REAL
            )
        """
        )
        con.commit()


@_db_retry
def start_run(db_path: str, label: str, kind: str, config: Mapping[str, Any]) -> int:
    with _connect(db_path) as con:
        cur = con.cursor()
        cur.execute(
            "INSERT INTO runs (label, kind, config, started, status) VALUES (?,?,?,?,?)",
            (label, kind, json.dumps(config, sort_keys=True, default=_json_default), now_utc_iso(), "running"),
        )
        con.commit()
        run_id = cur.lastrowid
    assert run_id is not None
    return int(run_id)


@_db_retry
def finish_run(
    db_path: str,
    run_id: int,
    status: str,
    steps: int = 0,
    violations: int = 0,
    records: Sequence[ObservableRecord] = (),
) -> None:
    with _connect(db_path) as con:
        cur = con.cursor()
        cur.executemany(
            "INSERT INTO observables (run_id, t, mass_psi, mass_mu, energy_Ed, hgrad_norm) "
            "VALUES (?,?,?,?,?,?)",
            [(run_id, r.t, r.mass_psi, r.mass_mu, r.energy_Ed, r.hgrad_norm) for r in records],
        )
        cur.execute(
            "UPDATE runs SET finished=?, status=?, steps=?, violations=? WHERE id=?",
            (now_utc_iso(), status, steps, violations, run_id),
        )
        con.commit()
    logger.debug("Ledger: run %d marked %s", run_id, status)


def list_runs(db_path: str) -> List[Dict[str, Any]]:
    with _connect(db_path) as con:
        con.row_factory = sqlite3.Row
        rows = con.execute(
            "SELECT id, label, kind, status, steps, violations FROM runs ORDER BY id"
        ).fetchall()
    return [dict(r) for r in rows]
