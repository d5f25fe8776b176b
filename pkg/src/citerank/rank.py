"""Ranked tables, per-field breakdowns, and external-score correlation.

Sorting always uses exact metric values; the two-decimal display strings
are derived afterwards and never influence order.  Ties on the exact metric
break by entity id ascending, so a ranking is a pure function of the store
and the RankSpec.  Every entity in the store lands either in the output rows
or in exactly one bucket of the exclusion report.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, fields
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping

from .aggregate import AggregateStore
from .errors import ConfigError
from .linking import EntityKey
from .metrics import DEFAULT_SI_CONFIG, EntityTally, SiConfig, pearson, si, usi

__all__ = [
    "METRICS",
    "FORMATS",
    "RankSpec",
    "RankedRow",
    "ExclusionReport",
    "FieldBreakdownRow",
    "CorrelationResult",
    "round_display",
    "rank_entities",
    "field_breakdown",
    "correlate",
    "export_rows",
    "export_breakdown",
    "RANK_CSV_HEADER",
    "BREAKDOWN_CSV_HEADER",
]

METRICS = ("si", "usi")
FORMATS = ("csv", "json", "md")

RANK_CSV_HEADER = (
    "kind,id,supporting,mentioning,contrasting,references,"
    "usi_exact,si_exact,usi_display,si_display,rank"
)
BREAKDOWN_CSV_HEADER = (
    "institution,field,supporting,mentioning,contrasting,references,usi_exact,si_exact"
)


@dataclass(frozen=True, slots=True)
class RankSpec:
    """What to rank and what to filter out before ranking."""

    metric: str = "si"
    kind: str | None = None
    min_valenced: int = 0
    min_references: int = 0
    top_k: int | None = None
    si_config: SiConfig = DEFAULT_SI_CONFIG

    def __post_init__(self) -> None:
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.min_valenced < 0 or self.min_references < 0:
            raise ConfigError("thresholds must be >= 0")
        if self.top_k is not None and self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")


@dataclass(frozen=True, slots=True)
class RankedRow:
    """One entity in a ranked table; rank is 1-based and dense."""

    rank: int
    entity: EntityKey
    tally: EntityTally
    usi_exact: float
    si_exact: float | None
    usi_display: str
    si_display: str


@dataclass(slots=True)
class ExclusionReport:
    """Why entities in the store are absent from the emitted rows.

    rows + every bucket here partitions the store exactly; an entity failing
    several filters lands in the first bucket that rejected it, in the order
    the fields are declared.
    """

    below_min_valenced: int = 0
    below_min_references: int = 0
    undefined_metric: int = 0
    beyond_top_k: int = 0

    @property
    def total(self) -> int:
        return sum(getattr(self, spec.name) for spec in fields(ExclusionReport))

    def as_dict(self) -> dict:
        return {spec.name: getattr(self, spec.name) for spec in fields(ExclusionReport)}


def round_display(value: float | None) -> str:
    """Two-decimal display string, ties rounding away from zero.

    Via Decimal(repr(x)) so the decision happens on the shortest decimal
    form of the float, not on binary artifacts several digits down.
    None (undefined score) displays as the empty string.
    """
    if value is None:
        return ""
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def rank_entities(
    store: AggregateStore, spec: RankSpec
) -> tuple[list[RankedRow], ExclusionReport]:
    """Rank the store's entities by the chosen metric, descending.

    Filters run before scoring: entities below min_valenced or
    min_references are excluded and counted, entities whose chosen metric is
    undefined are excluded and counted, and with top_k the tail beyond k is
    counted too.  Output order is exact metric descending, then entity id
    ascending (then field label, for per-field stores).
    """
    if spec.kind is not None and store.kind is not None and spec.kind != store.kind:
        raise ConfigError(
            f"spec expects kind {spec.kind!r} but store holds {store.kind!r}"
        )
    report = ExclusionReport()
    scored: list[tuple[float, EntityKey, EntityTally, float, float | None]] = []
    for key, tally in store.tallies.items():
        if tally.valenced < spec.min_valenced:
            report.below_min_valenced += 1
            continue
        if tally.references < spec.min_references:
            report.below_min_references += 1
            continue
        usi_value = usi(tally.supporting, tally.contrasting)
        si_value = (
            None if usi_value is None else si(tally.references, usi_value, spec.si_config)
        )
        metric_value = usi_value if spec.metric == "usi" else si_value
        if metric_value is None:
            report.undefined_metric += 1
            continue
        assert usi_value is not None
        scored.append((metric_value, key, tally, usi_value, si_value))

    scored.sort(key=lambda item: (-item[0], item[1].id, item[1].field or ""))
    if spec.top_k is not None and len(scored) > spec.top_k:
        report.beyond_top_k = len(scored) - spec.top_k
        scored = scored[: spec.top_k]

    rows = [
        RankedRow(
            rank=position,
            entity=key,
            tally=tally,
            usi_exact=usi_value,
            si_exact=si_value,
            usi_display=round_display(usi_value),
            si_display=round_display(si_value),
        )
        for position, (_, key, tally, usi_value, si_value) in enumerate(scored, start=1)
    ]
    return rows, report


@dataclass(frozen=True, slots=True)
class FieldBreakdownRow:
    """One (institution, field) cell with a defined impact-weighted score."""

    institution: EntityKey
    field: str
    tally: EntityTally
    usi_exact: float
    si_exact: float


def field_breakdown(
    store: AggregateStore, si_config: SiConfig = DEFAULT_SI_CONFIG
) -> list[FieldBreakdownRow]:
    """Per-field score rows from a store built with per-field grouping.

    Rows without a defined score (no valenced statements, or zero usi or
    references) are dropped: the breakdown is plot-ready data, and those
    cells would have no position on a score axis.  Sorted by field label,
    then score descending, then entity id.
    """
    if not store.by_field:
        raise ConfigError(
            "store lacks per-field grouping; rebuild aggregation with it enabled"
        )
    rows: list[FieldBreakdownRow] = []
    for key, tally in store.tallies.items():
        if key.field is None:
            continue
        usi_value = usi(tally.supporting, tally.contrasting)
        if usi_value is None:
            continue
        si_value = si(tally.references, usi_value, si_config)
        if si_value is None:
            continue
        rows.append(
            FieldBreakdownRow(
                institution=EntityKey(key.kind, key.id),
                field=key.field,
                tally=tally,
                usi_exact=usi_value,
                si_exact=si_value,
            )
        )
    rows.sort(key=lambda row: (row.field, -row.si_exact, row.institution.id))
    return rows


@dataclass(slots=True)
class CorrelationResult:
    """Correlation of ranked scores against an external per-entity score."""

    r: float
    matched: int
    unmatched_rows: int
    unmatched_external: int

    def as_dict(self) -> dict:
        return {
            "r": self.r,
            "matched": self.matched,
            "unmatched_rows": self.unmatched_rows,
            "unmatched_external": self.unmatched_external,
        }


def correlate(
    rows: list[RankedRow], external: Mapping[str, float], metric: str = "usi"
) -> CorrelationResult:
    """Pearson correlation between a ranked metric and external scores.

    Matching is by entity id.  Rows without an external value, and rows
    whose chosen metric is undefined, are skipped and counted; external ids
    matching no row are counted on the other side.  Raises DataError when
    fewer than two matches remain or a side is constant.
    """
    if metric not in METRICS:
        raise ConfigError(f"metric must be one of {METRICS}, got {metric!r}")
    points: list[tuple[float, float]] = []
    unmatched_rows = 0
    for row in rows:
        outside = external.get(row.entity.id)
        value = row.usi_exact if metric == "usi" else row.si_exact
        if outside is None or value is None:
            unmatched_rows += 1
            continue
        points.append((value, float(outside)))
    return CorrelationResult(
        r=pearson(points),
        matched=len(points),
        unmatched_rows=unmatched_rows,
        unmatched_external=len(external) - len(points),
    )


# -- exports ---------------------------------------------------------------
#
# All three formats are deterministic byte-for-byte for a given row list.
# csv and json carry exact values (repr round-trips them losslessly); the
# markdown table is the human view and shows display strings only.


def export_rows(rows: list[RankedRow], fmt: str) -> str:
    if fmt == "csv":
        return _rows_csv(rows)
    if fmt == "json":
        return _rows_json(rows)
    if fmt == "md":
        return _rows_markdown(rows)
    raise ConfigError(f"format must be one of {FORMATS}, got {fmt!r}")


def _rows_csv(rows: list[RankedRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(RANK_CSV_HEADER.split(","))
    for row in rows:
        writer.writerow(
            [
                row.entity.kind,
                row.entity.id,
                row.tally.supporting,
                row.tally.mentioning,
                row.tally.contrasting,
                row.tally.references,
                repr(row.usi_exact),
                "" if row.si_exact is None else repr(row.si_exact),
                row.usi_display,
                row.si_display,
                row.rank,
            ]
        )
    return buffer.getvalue()


def _rows_json(rows: list[RankedRow]) -> str:
    payload = [
        {
            "kind": row.entity.kind,
            "id": row.entity.id,
            "supporting": row.tally.supporting,
            "mentioning": row.tally.mentioning,
            "contrasting": row.tally.contrasting,
            "references": row.tally.references,
            "usi_exact": row.usi_exact,
            "si_exact": row.si_exact,
            "usi_display": row.usi_display,
            "si_display": row.si_display,
            "rank": row.rank,
        }
        for row in rows
    ]
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def _md_escape(text: str) -> str:
    return text.replace("|", "\\|")


def _rows_markdown(rows: list[RankedRow]) -> str:
    lines = [
        "| Entity | Supporting | Mentioning | Contrasting | USI | SI |",
        "| :-- | --: | --: | --: | --: | --: |",
    ]
    for row in rows:
        lines.append(
            "| {} | {:,} | {:,} | {:,} | {} | {} |".format(
                _md_escape(row.entity.id),
                row.tally.supporting,
                row.tally.mentioning,
                row.tally.contrasting,
                row.usi_display,
                row.si_display or "n/a",
            )
        )
    return "\n".join(lines) + "\n"


def export_breakdown(rows: list[FieldBreakdownRow], fmt: str) -> str:
    if fmt == "csv":
        return _breakdown_csv(rows)
    if fmt == "json":
        return _breakdown_json(rows)
    if fmt == "md":
        return _breakdown_markdown(rows)
    raise ConfigError(f"format must be one of {FORMATS}, got {fmt!r}")


def _breakdown_csv(rows: list[FieldBreakdownRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(BREAKDOWN_CSV_HEADER.split(","))
    for row in rows:
        writer.writerow(
            [
                row.institution.id,
                row.field,
                row.tally.supporting,
                row.tally.mentioning,
                row.tally.contrasting,
                row.tally.references,
                repr(row.usi_exact),
                repr(row.si_exact),
            ]
        )
    return buffer.getvalue()


def _breakdown_json(rows: list[FieldBreakdownRow]) -> str:
    payload = [
        {
            "institution": row.institution.id,
            "field": row.field,
            "supporting": row.tally.supporting,
            "mentioning": row.tally.mentioning,
            "contrasting": row.tally.contrasting,
            "references": row.tally.references,
            "usi_exact": row.usi_exact,
            "si_exact": row.si_exact,
        }
        for row in rows
    ]
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def _breakdown_markdown(rows: list[FieldBreakdownRow]) -> str:
    lines = [
        "| Institution | Field | Supporting | Mentioning | Contrasting | References | USI | SI |",
        "| :-- | :-- | --: | --: | --: | --: | --: | --: |",
    ]
    for row in rows:
        lines.append(
            "| {} | {} | {:,} | {:,} | {:,} | {:,} | {} | {} |".format(
                _md_escape(row.institution.id),
                _md_escape(row.field),
                row.tally.supporting,
                row.tally.mentioning,
                row.tally.contrasting,
                row.tally.references,
                round_display(row.usi_exact),
                round_display(row.si_exact),
            )
        )
    return "\n".join(lines) + "\n"
