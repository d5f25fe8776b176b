"""Resolution of cited publication ids to rankable entities.

A cited publication maps to at most one journal, at most one field, and any
number of institutions.  Multi-institution papers credit every institution
in full (full counting, no fractionalization), which is why ``resolve``
returns a set of keys rather than a single key.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import ConfigError
from .ingest import AffiliationRecord, PublicationRecord

__all__ = ["ENTITY_KINDS", "EntityKey", "LinkTables", "build_link_tables", "resolve"]

ENTITY_KINDS = ("journal", "institution", "field")


@dataclass(frozen=True, slots=True)
class EntityKey:
    """Identity of a rankable entity.

    ``field`` stays None except in per-field grouping, where tallies are
    kept per (entity, field label) pair.  Not ordered on purpose: sort
    callers spell out their key so the ordering is visible where it matters.
    """

    kind: str
    id: str
    field: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ENTITY_KINDS:
            raise ValueError(f"kind must be one of {ENTITY_KINDS}, got {self.kind!r}")


@dataclass(slots=True)
class LinkTables:
    """Publication-to-entity lookup tables plus overwrite diagnostics.

    Duplicate ids are resolved last-writer-wins, and the overwrite counters
    exist so a pipeline can report how dirty its metadata was.
    """

    pub_to_journal: dict[str, str]
    pub_to_field: dict[str, str]
    pub_to_institutions: dict[str, frozenset[str]]
    publication_overwrites: int = 0
    affiliation_overwrites: int = 0


def build_link_tables(
    publications: Iterable[PublicationRecord],
    affiliations: Iterable[AffiliationRecord],
) -> LinkTables:
    """Fold metadata streams into lookup tables, last record per id winning.

    A repeated publication id replaces the earlier record wholesale: if the
    later record lacks a journal or field, the earlier value is dropped, not
    inherited.  Same for repeated affiliation pub_ids.
    """
    pub_to_journal: dict[str, str] = {}
    pub_to_field: dict[str, str] = {}
    seen_pubs: set[str] = set()
    publication_overwrites = 0
    for rec in publications:
        if rec.id in seen_pubs:
            publication_overwrites += 1
            pub_to_journal.pop(rec.id, None)
            pub_to_field.pop(rec.id, None)
        else:
            seen_pubs.add(rec.id)
        if rec.journal_id is not None:
            pub_to_journal[rec.id] = rec.journal_id
        if rec.field is not None:
            pub_to_field[rec.id] = rec.field

    pub_to_institutions: dict[str, frozenset[str]] = {}
    affiliation_overwrites = 0
    for rec in affiliations:
        if rec.pub_id in pub_to_institutions:
            affiliation_overwrites += 1
        pub_to_institutions[rec.pub_id] = rec.institution_ids

    return LinkTables(
        pub_to_journal=pub_to_journal,
        pub_to_field=pub_to_field,
        pub_to_institutions=pub_to_institutions,
        publication_overwrites=publication_overwrites,
        affiliation_overwrites=affiliation_overwrites,
    )


def resolve(cited_id: str, kind: str, tables: LinkTables) -> set[EntityKey]:
    """Entities credited when ``cited_id`` is cited, empty if unresolvable.

    Journals and fields yield zero or one key; institutions yield one key
    per affiliated institution.
    """
    if kind == "journal":
        journal = tables.pub_to_journal.get(cited_id)
        return set() if journal is None else {EntityKey("journal", journal)}
    if kind == "field":
        label = tables.pub_to_field.get(cited_id)
        return set() if label is None else {EntityKey("field", label)}
    if kind == "institution":
        institutions = tables.pub_to_institutions.get(cited_id)
        if not institutions:
            return set()
        return {EntityKey("institution", inst) for inst in institutions}
    raise ConfigError(f"unknown entity kind {kind!r}")
