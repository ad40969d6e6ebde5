"""Structural features from the triple store, plus the external social score."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .ingest import TripleStore, format_real

TYPE_PREDICATE = "type"
SOCIAL_PREDICATE = "social_profile"


class TripleIndex:
    """Subject/object/type lookups over a :class:`TripleStore`.

    Type assertions (``type_predicate``) are kept apart from connecting
    triples and never count towards subject/object degrees.
    """

    def __init__(self, store: TripleStore, type_predicate: str = TYPE_PREDICATE,
                 social_predicate: str = SOCIAL_PREDICATE, distinct_objects: bool = False):
        self.type_predicate = type_predicate
        self.social_predicate = social_predicate
        self.distinct_objects = distinct_objects
        self.types: dict[str, set[str]] = {}
        self.out_refs: dict[str, list[str]] = {}
        self.in_refs: dict[str, list[str]] = {}
        self.social: dict[str, list[str]] = {}
        self.mentioned: set[str] = set()
        for t in store.triples:
            self.mentioned.add(t.subject)
            if t.obj_is_entity:
                self.mentioned.add(t.obj)
            if t.predicate == type_predicate:
                self.types.setdefault(t.subject, set()).add(t.obj)
            elif t.obj_is_entity:
                self.out_refs.setdefault(t.subject, []).append(t.obj)
                self.in_refs.setdefault(t.obj, []).append(t.subject)
            elif t.predicate == social_predicate:
                self.social.setdefault(t.subject, []).append(t.obj)

    def types_of(self, kb_id: str) -> set[str]:
        return self.types.get(kb_id, set())

    def _count_and_types(self, neighbours: list[str]) -> tuple[int, int]:
        count = len(set(neighbours)) if self.distinct_objects else len(neighbours)
        kinds: set[str] = set()
        for other in neighbours:
            kinds |= self.types_of(other)
        return count, len(kinds)


def object_features(index: TripleIndex, kb_id: str) -> tuple[int, int]:
    """``(object_count, object_type_count)``: entity-valued triples with ``kb_id``
    as subject, and the distinct types across those objects."""
    return index._count_and_types(index.out_refs.get(kb_id, []))


def subject_features(index: TripleIndex, kb_id: str) -> tuple[int, int]:
    """``(subject_count, subject_type_count)``: triples pointing at ``kb_id``,
    and the distinct types across their subjects."""
    return index._count_and_types(index.in_refs.get(kb_id, []))


def social_score_feature(index: TripleIndex, social_scores: Mapping[str, float], kb_id: str) -> float | None:
    """Best score among the entity's social profiles, or None if none resolve."""
    found = [social_scores[p] for p in index.social.get(kb_id, []) if p in social_scores]
    return max(found) if found else None


@dataclass(frozen=True)
class TripleFeatureRow:
    """Counts are None when the entity never occurs in the triple store."""

    kb_id: str
    subject_count: int | None
    subject_type_count: int | None
    object_count: int | None
    object_type_count: int | None
    social_score: float | None


def kb_feature_rows(index: TripleIndex, social_scores: Mapping[str, float],
                    kb_ids: Iterable[str]) -> dict[str, TripleFeatureRow]:
    rows = {}
    for kb_id in kb_ids:
        social = social_score_feature(index, social_scores, kb_id)
        if kb_id in index.mentioned:
            sc, st = subject_features(index, kb_id)
            oc, ot = object_features(index, kb_id)
        else:
            sc = st = oc = ot = None
        rows[kb_id] = TripleFeatureRow(kb_id, sc, st, oc, ot, social)
    return rows


KB_DUMP_COLUMNS = ("kb_id", "subject#", "subject_types#", "object#", "object_types#", "social_score")


def dump_lines(rows: Mapping[str, TripleFeatureRow]):
    def cell(v):
        if v is None:
            return "-"
        return format_real(v) if isinstance(v, float) else str(v)

    for kb_id in sorted(rows):
        r = rows[kb_id]
        yield "\t".join([kb_id] + [cell(v) for v in (
            r.subject_count, r.subject_type_count, r.object_count, r.object_type_count, r.social_score)])
