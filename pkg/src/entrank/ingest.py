"""Parsers for the tab-separated input formats.

Every parser skips blank lines and ``#`` comment lines, rejects malformed rows
with a line number and reason, and returns an immutable store together with a
:class:`ParseReport`. Only a handful of conditions are fatal (an unreadable file,
a duplicate entity/page key); everything else is skip-and-count.
"""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterator, Mapping

LANGUAGE_RE = re.compile(r"[a-z]{2}(_[a-z]+)?")
KB_PREFIX = "kb:"


class IngestError(Exception):
    """Fatal input problem (unreadable file, duplicate key)."""


class EntityType(str, enum.Enum):
    PERSON = "PERSON"
    LOCATION = "LOCATION"
    ORGANIZATION = "ORGANIZATION"
    MISC = "MISC"


@dataclass
class ParseReport:
    """Accepted/rejected line tallies for one parsed file.

    ``counters`` breaks rejections down by reason (``malformed``,
    ``self_loop``, ``dangling``, ...), ``rejected_lines`` keeps
    ``(line_number, reason)`` pairs for reporting.
    """

    path: str
    accepted: int = 0
    rejected: int = 0
    rejected_lines: list[tuple[int, str]] = field(default_factory=list)
    counters: Counter = field(default_factory=Counter)

    @property
    def total(self) -> int:
        return self.accepted + self.rejected

    def accept(self) -> None:
        self.accepted += 1

    def reject(self, lineno: int, reason: str) -> None:
        self.rejected += 1
        self.rejected_lines.append((lineno, reason))
        self.counters[reason] += 1

    def count(self, reason: str) -> int:
        return self.counters.get(reason, 0)


@dataclass(frozen=True)
class EntityRecord:
    kb_id: str
    language: str
    page_id: int
    title: str
    entity_type: EntityType = EntityType.MISC


@dataclass(frozen=True, eq=False)
class EntityCatalog:
    """All per-language entity records, cross-indexed by kb_id.

    One kb_id may carry at most one record per language; the same kb_id in
    several languages is one entity seen through several pages.
    """

    entries: tuple[EntityRecord, ...]
    by_kb_id: Mapping[str, tuple[EntityRecord, ...]]
    by_page: Mapping[tuple[str, int], EntityRecord]

    @classmethod
    def from_records(cls, records) -> "EntityCatalog":
        by_kb: dict[str, list[EntityRecord]] = {}
        by_page: dict[tuple[str, int], EntityRecord] = {}
        seen_kb_lang: set[tuple[str, str]] = set()
        for rec in records:
            _validate_record(rec)
            if (rec.kb_id, rec.language) in seen_kb_lang:
                raise IngestError(f"duplicate kb_id {rec.kb_id!r} for language {rec.language!r}")
            if (rec.language, rec.page_id) in by_page:
                raise IngestError(f"duplicate page id {rec.page_id} for language {rec.language!r}")
            seen_kb_lang.add((rec.kb_id, rec.language))
            by_page[(rec.language, rec.page_id)] = rec
            by_kb.setdefault(rec.kb_id, []).append(rec)
        entries = tuple(sorted(by_page.values(), key=lambda r: (r.kb_id, r.language)))
        frozen_kb = {k: tuple(sorted(v, key=lambda r: r.language)) for k, v in sorted(by_kb.items())}
        return cls(entries, MappingProxyType(frozen_kb), MappingProxyType(by_page))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EntityCatalog):
            return NotImplemented
        return self.entries == other.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[EntityRecord]:
        return iter(self.entries)

    @property
    def kb_ids(self) -> list[str]:
        return list(self.by_kb_id)

    @property
    def languages(self) -> list[str]:
        return sorted({r.language for r in self.entries})

    def get(self, kb_id: str, language: str) -> EntityRecord | None:
        for rec in self.by_kb_id.get(kb_id, ()):
            if rec.language == language:
                return rec
        return None

    def page(self, language: str, page_id: int) -> EntityRecord | None:
        return self.by_page.get((language, page_id))

    def records_for(self, language: str) -> list[EntityRecord]:
        return sorted((r for r in self.entries if r.language == language), key=lambda r: r.page_id)


def _validate_record(rec: EntityRecord) -> None:
    if not rec.kb_id:
        raise IngestError("empty kb_id")
    if not LANGUAGE_RE.fullmatch(rec.language):
        raise IngestError(f"bad language code {rec.language!r}")
    if rec.page_id < 0:
        raise IngestError(f"negative page id {rec.page_id}")


@dataclass(frozen=True)
class LinkEdgeList:
    """Per-language page-link edges after dropping dangling endpoints and self-loops."""

    edges: Mapping[str, tuple[tuple[int, int], ...]]
    self_loop_count: int = 0
    dangling_count: int = 0

    def for_language(self, language: str) -> tuple[tuple[int, int], ...]:
        return self.edges.get(language, ())


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    obj: str
    obj_is_entity: bool


@dataclass(frozen=True)
class TripleStore:
    triples: tuple[Triple, ...]

    def __len__(self) -> int:
        return len(self.triples)


def _read_rows(path) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line_number, columns)`` for every non-blank, non-comment line."""
    try:
        with open(path, encoding="utf-8", newline="\n") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n").rstrip("\r")
                if not line.strip() or line.startswith("#"):
                    continue
                yield lineno, line.split("\t")
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc


def _parse_nonneg_int(text: str) -> int | None:
    text = text.strip()
    if not text.isdigit():
        return None
    return int(text)


def parse_pages(path) -> tuple[EntityCatalog, ParseReport]:
    """Parse ``kb_id, language, page_id, title[, entity_type]`` rows.

    Raises:
        IngestError: the file is unreadable, or a (kb_id, language) or
            (language, page_id) pair repeats.
    """
    report = ParseReport(str(path))
    records: list[EntityRecord] = []
    for lineno, cols in _read_rows(path):
        if len(cols) not in (4, 5):
            report.reject(lineno, "malformed")
            continue
        kb_id, language, page_text, title = (c.strip() for c in cols[:4])
        type_text = cols[4].strip().upper() if len(cols) == 5 else ""
        page_id = _parse_nonneg_int(page_text)
        if not kb_id or page_id is None or not LANGUAGE_RE.fullmatch(language):
            report.reject(lineno, "malformed")
            continue
        try:
            etype = EntityType(type_text) if type_text else EntityType.MISC
        except ValueError:
            report.reject(lineno, "malformed")
            continue
        records.append(EntityRecord(kb_id, language, page_id, title, etype))
        report.accept()
    return EntityCatalog.from_records(records), report


def parse_links(path, catalog: EntityCatalog) -> tuple[LinkEdgeList, ParseReport]:
    report = ParseReport(str(path))
    edges: dict[str, list[tuple[int, int]]] = {}
    for lineno, cols in _read_rows(path):
        if len(cols) != 3:
            report.reject(lineno, "malformed")
            continue
        language = cols[0].strip()
        src, dst = _parse_nonneg_int(cols[1]), _parse_nonneg_int(cols[2])
        if src is None or dst is None or not LANGUAGE_RE.fullmatch(language):
            report.reject(lineno, "malformed")
            continue
        if src == dst:
            report.reject(lineno, "self_loop")
            continue
        if catalog.page(language, src) is None or catalog.page(language, dst) is None:
            report.reject(lineno, "dangling")
            continue
        edges.setdefault(language, []).append((src, dst))
        report.accept()
    store = LinkEdgeList(
        MappingProxyType({lang: tuple(e) for lang, e in sorted(edges.items())}),
        self_loop_count=report.count("self_loop"),
        dangling_count=report.count("dangling"),
    )
    return store, report


def parse_categories(path, catalog: EntityCatalog):
    """Map ``(language, page_id)`` to the frozenset of its category names."""
    report = ParseReport(str(path))
    cats: dict[tuple[str, int], set[str]] = {}
    for lineno, cols in _read_rows(path):
        if len(cols) != 3:
            report.reject(lineno, "malformed")
            continue
        language, page_text, name = cols[0].strip(), cols[1], cols[2].strip()
        page_id = _parse_nonneg_int(page_text)
        if page_id is None or not name or not LANGUAGE_RE.fullmatch(language):
            report.reject(lineno, "malformed")
            continue
        if catalog.page(language, page_id) is None:
            report.reject(lineno, "dangling")
            continue
        cats.setdefault((language, page_id), set()).add(name)
        report.accept()
    frozen = {k: frozenset(v) for k, v in sorted(cats.items())}
    return MappingProxyType(frozen), report


def parse_triples(path) -> tuple[TripleStore, ParseReport]:
    report = ParseReport(str(path))
    triples: list[Triple] = []
    for lineno, cols in _read_rows(path):
        if len(cols) != 3 or not all(c.strip() for c in cols):
            report.reject(lineno, "malformed")
            continue
        subject, predicate, obj = (c.strip() for c in cols)
        if obj.startswith(KB_PREFIX):
            target = obj[len(KB_PREFIX):]
            if not target:
                report.reject(lineno, "malformed")
                continue
            triples.append(Triple(subject, predicate, target, True))
        else:
            triples.append(Triple(subject, predicate, obj, False))
        report.accept()
    return TripleStore(tuple(triples)), report


def _parse_scored(path, lo, hi, parse_value, known=None):
    report = ParseReport(str(path))
    out: dict = {}
    for lineno, cols in _read_rows(path):
        if len(cols) != 2 or not cols[0].strip():
            report.reject(lineno, "malformed")
            continue
        key = cols[0].strip()
        try:
            value = parse_value(cols[1].strip())
        except ValueError:
            report.reject(lineno, "malformed")
            continue
        if not lo <= value <= hi:
            report.reject(lineno, "out_of_range")
            continue
        if known is not None and key not in known:
            report.reject(lineno, "unknown_kb_id")
            continue
        if key in out:
            report.reject(lineno, "duplicate")
            continue
        out[key] = value
        report.accept()
    return MappingProxyType(dict(sorted(out.items()))), report


def _finite_float(text: str) -> float:
    value = float(text)
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError(text)
    return value


def parse_labels(path, catalog: EntityCatalog):
    """Read ``kb_id, label`` rows; labels must be integers in [1, 5]."""
    return _parse_scored(path, 1, 5, int, known=catalog.by_kb_id)


def parse_external_scores(path):
    """Read ``social_id, score`` rows with scores in [0, 100]."""
    return _parse_scored(path, 0.0, 100.0, _finite_float)


# -- serialization -----------------------------------------------------------
# Stores are written back in the input formats, in canonical order, so the
# same parsers read them and repeated runs produce identical bytes.


def format_real(value: float) -> str:
    return f"{value:.17g}"


def _write_lines(path, lines, header: str | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        for line in lines:
            fh.write(line + "\n")


def write_pages(path, catalog: EntityCatalog, header=None) -> None:
    _write_lines(
        path,
        (f"{r.kb_id}\t{r.language}\t{r.page_id}\t{r.title}\t{r.entity_type.value}" for r in catalog),
        header,
    )


def write_links(path, links: LinkEdgeList, header=None) -> None:
    lines = (
        f"{lang}\t{s}\t{d}"
        for lang, edges in sorted(links.edges.items())
        for s, d in sorted(edges)
    )
    _write_lines(path, lines, header)


def write_categories(path, categories, header=None) -> None:
    lines = (
        f"{lang}\t{pid}\t{name}"
        for (lang, pid), names in sorted(categories.items())
        for name in sorted(names)
    )
    _write_lines(path, lines, header)


def write_triples(path, store: TripleStore, header=None) -> None:
    def fmt(t: Triple) -> str:
        obj = KB_PREFIX + t.obj if t.obj_is_entity else t.obj
        return f"{t.subject}\t{t.predicate}\t{obj}"

    _write_lines(path, sorted(fmt(t) for t in store.triples), header)


def write_labels(path, labels, header=None) -> None:
    _write_lines(path, (f"{k}\t{v}" for k, v in sorted(labels.items())), header)


def write_scores(path, scores, header=None) -> None:
    _write_lines(path, (f"{k}\t{format_real(v)}" for k, v in sorted(scores.items())), header)
