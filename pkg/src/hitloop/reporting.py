"""Round-ledger report rows: per-round counts plus raw and normalized HaDES.

Raw harmonic scores are stored per round; normalization is recomputed here,
at report time, because the min/max reference set grows as rounds accumulate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .datastore import DataStore
from .diversity import normalize_scores

UNSCORED_CELL = "—"


@dataclass
class ReportRow:
    round: int
    newly_collected: int
    overall_collected: int
    raw_hades: float | None
    norm_hades: float | None
    model_version: str | None


def build_report(store: DataStore, extra_scores: dict[int, float] | None = None) -> list[ReportRow]:
    """One row per successful round. ``extra_scores`` may supply raw HaDES
    values for rounds stored as unscored (e.g. recomputed from embeddings)."""
    rows = []
    for record in store.rounds():
        if not record.succeeded:
            continue
        raw = record.raw_hades
        if raw is None and extra_scores is not None:
            raw = extra_scores.get(record.round)
        rows.append(
            ReportRow(
                round=record.round,
                newly_collected=record.newly_collected,
                overall_collected=record.overall_collected,
                raw_hades=raw,
                norm_hades=None,
                model_version=record.produced_model,
            )
        )
    scored = [r for r in rows if r.raw_hades is not None]
    if scored:
        for row, norm in zip(scored, normalize_scores([r.raw_hades for r in scored])):
            row.norm_hades = norm
    return rows


def fmt_score(value: float | None) -> str:
    return UNSCORED_CELL if value is None else f"{value:.6g}"


def report_text(rows: list[ReportRow]) -> str:
    header = ("round", "newly", "overall", "raw-hades", "norm-hades", "model")
    table = [header] + [
        (
            str(r.round),
            str(r.newly_collected),
            str(r.overall_collected),
            fmt_score(r.raw_hades),
            fmt_score(r.norm_hades),
            r.model_version or "-",
        )
        for r in rows
    ]
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]
    return "\n".join(lines) + "\n"


def report_json(rows: list[ReportRow]) -> str:
    return json.dumps([vars(r) for r in rows], indent=2) + "\n"
