# core/report_html.py
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence

from jinja2 import Environment, FileSystemLoader, select_autoescape

TEMPLATE_DIR = Path(__file__).resolve().parent.parent / "templates"
env = Environment(loader=FileSystemLoader(str(TEMPLATE_DIR)), autoescape=select_autoescape(["html"]))

REPORT_THEME = os.getenv("REPORT_THEME", "dark").strip().lower()
if REPORT_THEME not in ("light", "dark"):
    REPORT_THEME = "dark"

PALETTES: Dict[str, Dict[str, str]] = {
    "dark": {"background": "#202124", "text": "#E8EAED", "muted": "#BDC1C6", "border": "#3C4043", "bad": "#FF6B6B"},
    "light": {"background": "#FFFFFF", "text": "#202124", "muted": "#5F6368", "border": "#DADCE0", "bad": "#C5221F"},
}


@dataclass
class ReportTable:
    title: str
    columns: List[str]
    rows: List[Sequence[Any]]
    note: str = ""


@dataclass
class ExperimentReport:
    kind: str
    label: str
    tables: List[ReportTable] = field(default_factory=list)
    files: List[str] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6e}"
    return str(value)


def build_html_report(report: ExperimentReport, resolved: Mapping[str, Any]) -> str:
    template = env.get_template("report.html")
    tables = [
        {
            "title": t.title,
            "columns": t.columns,
            "rows": [[_cell(v) for v in row] for row in t.rows],
            "note": t.note,
        }
        for t in report.tables
    ]
    summary = (
        f"{len(report.tables)} table(s) · {len(report.files)} file(s) · "
        f"{len(report.violations)} monitor violation(s)"
    )
    return template.render(
        title=f"{report.kind.replace('_', ' ').capitalize()}: {report.label}",
        theme=PALETTES[REPORT_THEME],
        summary=summary,
        tables=tables,
        files=[os.path.basename(f) for f in report.files],
        violations=report.violations,
        notes=report.notes,
        config=json.dumps(resolved, indent=2, sort_keys=True, default=str),
    )


def write_html_report(out_dir: str, report: ExperimentReport, resolved: Mapping[str, Any]) -> str:
    path = os.path.join(out_dir, f"{report.kind}_report.html")
    os.makedirs(out_dir, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(build_html_report(report, resolved))
    return path
