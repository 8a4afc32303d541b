"""Session accuracy bookkeeping: per-group accuracy series, their average,
the first-to-last drop, and report rendering (table / csv / json).

Groups are "base" (true class from the base session), "incremental"
(true class from any later session; undefined at session 0), and "all".
The average for a group runs over the sessions where the group is
defined; the drop is the group's first defined entry minus its last.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

GROUPS = ("base", "incremental", "all")
_TABLE_LABELS = {"base": "Base", "incremental": "Incr.", "all": "All"}


def accuracy(predictions, truths) -> float:
    """Percent of positions where predictions and truths agree."""
    p = np.asarray(predictions)
    t = np.asarray(truths)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError(f"prediction/truth shapes differ: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("cannot score an empty prediction set")
    return 100.0 * float(np.sum(p == t)) / p.size


def average_accuracy(series) -> float:
    """Arithmetic mean of a per-session accuracy series."""
    values = [float(v) for v in series]
    if not values:
        raise ValueError("cannot average an empty accuracy series")
    return sum(values) / len(values)


def performance_dropping(series) -> float:
    """First entry of the series minus the last (how much was forgotten)."""
    values = [float(v) for v in series]
    if not values:
        raise ValueError("cannot compute a drop over an empty series")
    return values[0] - values[-1]


@dataclass
class SessionAccuracyRecord:
    session: int
    base_acc: float
    incr_acc: float | None
    all_acc: float

    def __post_init__(self):
        if (self.incr_acc is None) != (self.session == 0):
            raise ValueError("incremental accuracy is absent exactly at session 0")
        for v in (self.base_acc, self.incr_acc, self.all_acc):
            if v is not None and not 0.0 <= v <= 100.0:
                raise ValueError(f"accuracy {v} outside [0, 100]")


@dataclass
class RunReport:
    records: list[SessionAccuracyRecord]
    aa: dict[str, float | None] = field(default_factory=dict)
    pd: dict[str, float | None] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seed: int = 0

    def group_series(self, group: str) -> list[float]:
        """Defined accuracy values of a group, in session order."""
        if group == "base":
            return [r.base_acc for r in self.records]
        if group == "incremental":
            return [r.incr_acc for r in self.records if r.incr_acc is not None]
        if group == "all":
            return [r.all_acc for r in self.records]
        raise ValueError(f"unknown group {group!r}")


def build_report(records, config=None, seed: int = 0) -> RunReport:
    """Assemble a report, computing AA and PD per group from the records."""
    report = RunReport(records=list(records), config=dict(config or {}), seed=seed)
    for group in GROUPS:
        series = report.group_series(group)
        report.aa[group] = average_accuracy(series) if series else None
        report.pd[group] = performance_dropping(series) if series else None
    return report


def _round2(x: float) -> str:
    # half away from zero, for human tables only
    return str(Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def render_table(report: RunReport) -> str:
    """Sessions as columns, groups as rows, AA and PD trailing."""
    sessions = [r.session for r in report.records]
    header = ["group"] + [str(m) for m in sessions] + ["AA", "PD"]
    rows = [header]
    for group in GROUPS:
        if report.aa.get(group) is None:
            continue
        by_session = {}
        for r in report.records:
            v = {"base": r.base_acc, "incremental": r.incr_acc, "all": r.all_acc}[group]
            by_session[r.session] = v
        cells = [_TABLE_LABELS[group]]
        cells += ["-" if by_session[m] is None else _round2(by_session[m]) for m in sessions]
        cells += [_round2(report.aa[group]), _round2(report.pd[group])]
        rows.append(cells)
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    return "\n".join(
        "  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows
    )


def render_csv(report: RunReport) -> str:
    """Rows `group,session,accuracy`, then `group,AA,value` and `group,PD,value`."""
    lines = ["group,session,accuracy"]
    for group in GROUPS:
        if report.aa.get(group) is None:
            continue
        for r in report.records:
            v = {"base": r.base_acc, "incremental": r.incr_acc, "all": r.all_acc}[group]
            if v is not None:
                lines.append(f"{group},{r.session},{v!r}")
        lines.append(f"{group},AA,{report.aa[group]!r}")
        lines.append(f"{group},PD,{report.pd[group]!r}")
    return "\n".join(lines) + "\n"


def parse_csv(text: str):
    """Read back a csv emission: (per-group series, aa dict, pd dict)."""
    series: dict[str, list[float]] = {}
    aa: dict[str, float] = {}
    pd: dict[str, float] = {}
    lines = [ln for ln in text.strip().splitlines() if ln]
    if lines[0] != "group,session,accuracy":
        raise ValueError("unrecognized csv header")
    for line in lines[1:]:
        group, key, value = line.split(",")
        if key == "AA":
            aa[group] = float(value)
        elif key == "PD":
            pd[group] = float(value)
        else:
            series.setdefault(group, []).append(float(value))
    return series, aa, pd


def report_to_json_dict(report: RunReport) -> dict:
    return {
        "seed": report.seed,
        "config": report.config,
        "records": [
            {
                "session": r.session,
                "base_acc": r.base_acc,
                "incr_acc": r.incr_acc,
                "all_acc": r.all_acc,
            }
            for r in report.records
        ],
        "aa": {g: report.aa.get(g) for g in GROUPS},
        "pd": {g: report.pd.get(g) for g in GROUPS},
    }


def report_from_json_dict(payload: dict) -> RunReport:
    records = [
        SessionAccuracyRecord(
            session=r["session"],
            base_acc=r["base_acc"],
            incr_acc=r["incr_acc"],
            all_acc=r["all_acc"],
        )
        for r in payload["records"]
    ]
    return RunReport(
        records=records,
        aa=dict(payload["aa"]),
        pd=dict(payload["pd"]),
        config=dict(payload.get("config", {})),
        seed=payload.get("seed", 0),
    )


def render_json(report: RunReport) -> str:
    return json.dumps(report_to_json_dict(report), indent=2, sort_keys=True) + "\n"


def emit_report(report: RunReport, fmt: str, sink) -> None:
    """Write one rendering of the report to a file-like sink."""
    renderers = {"table": render_table, "csv": render_csv, "json": render_json}
    if fmt not in renderers:
        raise ValueError(f"unknown report format {fmt!r}")
    text = renderers[fmt](report)
    if fmt == "table" and not text.endswith("\n"):
        text += "\n"
    sink.write(text)
