"""Append-only triple store with growable name/id vocabularies.

The knowledge base is a journal of (Triple, Provenance) records plus a set
index for O(1) membership. Triples are deduplicated on insert: the journal
only ever grows and never holds the same fact twice, so it doubles as the
ordered set of distinct facts. Entities and relations are interned into a
Vocabulary that assigns dense integer ids in registration order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import FormatError, IntegrityError, TripleParseError, ValidationError

KB_MAGIC = "KGKB"
KB_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Triple:
    """One (head, relation, tail) fact, all fields dense integer ids."""

    head: int
    relation: int
    tail: int


class Source(str, Enum):
    """How a fact entered the knowledge base."""

    IMPORTED = "imported"
    PREDICTED_CONFIRMED = "predicted-confirmed"
    HUMAN_CORRECTED = "human-corrected"


@dataclass(frozen=True)
class Provenance:
    source: Source
    session: int
    timestamp: int


def _check_name(name: str, kind: str) -> None:
    if not isinstance(name, str) or not name:
        raise ValidationError(f"{kind} name must be a non-empty string")
    if "\t" in name or "\n" in name or "\r" in name:
        raise ValidationError(f"{kind} name {name!r} contains a tab or newline")


class Vocabulary:
    """Bidirectional maps between names and dense integer ids.

    Ids are assigned in registration order, never reused, never removed.
    Names are case-sensitive opaque tokens; the only constraint is that
    they are non-empty and free of tabs and newlines (the journal and the
    triple file format rely on that).
    """

    def __init__(self) -> None:
        self._entity_ids: dict[str, int] = {}
        self._entity_names: list[str] = []
        self._relation_ids: dict[str, int] = {}
        self._relation_names: list[str] = []

    @property
    def num_entities(self) -> int:
        return len(self._entity_names)

    @property
    def num_relations(self) -> int:
        return len(self._relation_names)

    def register_entity(self, name: str) -> int:
        """Return the id for ``name``, assigning the next dense id if unseen."""
        _check_name(name, "entity")
        eid = self._entity_ids.get(name)
        if eid is None:
            eid = len(self._entity_names)
            self._entity_ids[name] = eid
            self._entity_names.append(name)
        return eid

    def register_relation(self, name: str) -> int:
        _check_name(name, "relation")
        rid = self._relation_ids.get(name)
        if rid is None:
            rid = len(self._relation_names)
            self._relation_ids[name] = rid
            self._relation_names.append(name)
        return rid

    def entity_id(self, name: str) -> int:
        return self._entity_ids[name]

    def relation_id(self, name: str) -> int:
        return self._relation_ids[name]

    def has_entity(self, name: str) -> bool:
        return name in self._entity_ids

    def has_relation(self, name: str) -> bool:
        return name in self._relation_ids

    def entity_name(self, eid: int) -> str:
        if not 0 <= eid < len(self._entity_names):
            raise IntegrityError(f"entity id {eid} not registered")
        return self._entity_names[eid]

    def relation_name(self, rid: int) -> str:
        if not 0 <= rid < len(self._relation_names):
            raise IntegrityError(f"relation id {rid} not registered")
        return self._relation_names[rid]

    def entity_names(self) -> tuple[str, ...]:
        return tuple(self._entity_names)

    def relation_names(self) -> tuple[str, ...]:
        return tuple(self._relation_names)

    def snapshot(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        """Value copy of both tables, safe to hand to another thread."""
        return tuple(self._entity_names), tuple(self._relation_names)


class KnowledgeBase:
    """Journal of facts with provenance plus a membership index.

    Concurrency: single writer, multiple readers. All mutating calls must be
    serialized by the caller (the engine funnels them through one lock);
    reads may run concurrently with other reads.
    """

    def __init__(self, vocabulary: Vocabulary | None = None) -> None:
        self.vocabulary = vocabulary if vocabulary is not None else Vocabulary()
        self._journal: list[tuple[Triple, Provenance]] = []
        self._index: set[Triple] = set()
        self._tails: dict[tuple[int, int], set[int]] = {}
        self._heads: dict[tuple[int, int], set[int]] = {}
        self._counter = 0

    def __len__(self) -> int:
        return len(self._journal)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._index

    @property
    def journal(self) -> list[tuple[Triple, Provenance]]:
        """The append-only journal. Treat as read-only."""
        return self._journal

    @property
    def positives(self) -> set[Triple]:
        """Set of distinct journaled triples. Treat as read-only."""
        return self._index

    def contains(self, triple: Triple) -> bool:
        return triple in self._index

    def _check_triple(self, triple: Triple) -> None:
        v = self.vocabulary
        if not 0 <= triple.head < v.num_entities:
            raise IntegrityError(f"head id {triple.head} not registered")
        if not 0 <= triple.tail < v.num_entities:
            raise IntegrityError(f"tail id {triple.tail} not registered")
        if not 0 <= triple.relation < v.num_relations:
            raise IntegrityError(f"relation id {triple.relation} not registered")

    def add(self, triple: Triple, source: Source, session: int = 0) -> bool:
        """Append a fact; returns False without touching the journal if known.

        Provenance of the first insertion wins; re-adding an existing fact is
        a no-op by design (the store is a set of true facts).
        """
        self._check_triple(triple)
        if triple in self._index:
            return False
        prov = Provenance(source=Source(source), session=session, timestamp=self._counter)
        self._counter += 1
        self._journal.append((triple, prov))
        self._index.add(triple)
        self._tails.setdefault((triple.head, triple.relation), set()).add(triple.tail)
        self._heads.setdefault((triple.relation, triple.tail), set()).add(triple.head)
        return True

    def tails_for(self, head: int, relation: int) -> set[int]:
        """Known true tails of (head, relation, ?). Empty set when none."""
        return self._tails.get((head, relation), set())

    def heads_for(self, relation: int, tail: int) -> set[int]:
        """Known true heads of (?, relation, tail). Empty set when none."""
        return self._heads.get((relation, tail), set())

    def triples(self) -> list[Triple]:
        """Distinct triples in journal order."""
        return [t for t, _ in self._journal]

    def triples_touching(self, entity: int) -> list[tuple[Triple, Provenance]]:
        return [(t, p) for t, p in self._journal if entity in (t.head, t.tail)]

    def stats(self) -> dict[str, int]:
        """Value snapshot of the counters, safe to hand across threads."""
        return {
            "entities": self.vocabulary.num_entities,
            "relations": self.vocabulary.num_relations,
            "triples": len(self._journal),
        }

    # ------------------------------------------------------------------
    # Triple text files: head<TAB>relation<TAB>tail, one per line, UTF-8.
    # Lines starting with '#' and blank lines are ignored.
    # ------------------------------------------------------------------

    def import_triples(self, path: str | Path, session: int = 0) -> int:
        """Load a triple file, registering unseen names.

        The whole file is parsed before anything is committed, so a malformed
        line leaves the knowledge base untouched. Returns the number of
        newly added (non-duplicate) facts.
        """
        rows = read_triple_file(path)
        added = 0
        for head, relation, tail in rows:
            h = self.vocabulary.register_entity(head)
            r = self.vocabulary.register_relation(relation)
            t = self.vocabulary.register_entity(tail)
            if self.add(Triple(h, r, t), Source.IMPORTED, session=session):
                added += 1
        return added

    def export_triples(self, path: str | Path) -> int:
        """Write the distinct facts as a triple file; returns the line count."""
        v = self.vocabulary
        lines = []
        for t, _ in self._journal:
            lines.append(f"{v.entity_name(t.head)}\t{v.relation_name(t.relation)}\t{v.entity_name(t.tail)}")
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        return len(lines)

    # ------------------------------------------------------------------
    # Snapshot container: magic, version, vocabulary tables, journal.
    # ------------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        out = [f"{KB_MAGIC} {KB_FORMAT_VERSION}"]
        ents, rels = self.vocabulary.snapshot()
        out.append(f"entities {len(ents)}")
        out.extend(ents)
        out.append(f"relations {len(rels)}")
        out.extend(rels)
        out.append(f"journal {len(self._journal)}")
        for t, p in self._journal:
            out.append(f"{t.head}\t{t.relation}\t{t.tail}\t{p.source.value}\t{p.session}\t{p.timestamp}")
        Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeBase":
        text = Path(path).read_text(encoding="utf-8")
        lines = text.split("\n")
        pos = 0

        def next_line() -> str:
            nonlocal pos
            if pos >= len(lines):
                raise FormatError(f"{path}: truncated snapshot")
            line = lines[pos]
            pos += 1
            return line

        header = next_line().split(" ")
        if len(header) != 2 or header[0] != KB_MAGIC:
            raise FormatError(f"{path}: not a knowledge base snapshot (bad magic)")
        if header[1] != str(KB_FORMAT_VERSION):
            raise FormatError(f"{path}: unsupported snapshot version {header[1]}")

        def read_section(tag: str) -> int:
            parts = next_line().split(" ")
            if len(parts) != 2 or parts[0] != tag or not parts[1].isdigit():
                raise FormatError(f"{path}: corrupt snapshot ({tag} header)")
            return int(parts[1])

        kb = cls()
        for _ in range(read_section("entities")):
            kb.vocabulary.register_entity(next_line())
        for _ in range(read_section("relations")):
            kb.vocabulary.register_relation(next_line())
        n_journal = read_section("journal")
        max_ts = -1
        for _ in range(n_journal):
            fields = next_line().split("\t")
            if len(fields) != 6:
                raise FormatError(f"{path}: corrupt journal record")
            try:
                triple = Triple(int(fields[0]), int(fields[1]), int(fields[2]))
                prov = Provenance(Source(fields[3]), int(fields[4]), int(fields[5]))
            except ValueError as exc:
                raise FormatError(f"{path}: corrupt journal record ({exc})") from exc
            kb._check_triple(triple)
            if triple in kb._index:
                raise FormatError(f"{path}: duplicate triple in journal")
            kb._journal.append((triple, prov))
            kb._index.add(triple)
            kb._tails.setdefault((triple.head, triple.relation), set()).add(triple.tail)
            kb._heads.setdefault((triple.relation, triple.tail), set()).add(triple.head)
            max_ts = max(max_ts, prov.timestamp)
        kb._counter = max_ts + 1
        return kb


def read_triple_file(path: str | Path) -> list[tuple[str, str, str]]:
    """Parse a triple file into (head, relation, tail) name rows.

    Raises TripleParseError listing every malformed line number. Comment
    lines (leading '#') and blank lines are skipped.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read triple file {path}: {exc}") from exc
    rows: list[tuple[str, str, str]] = []
    bad: list[int] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip("\r")
        if not stripped.strip() or stripped.lstrip().startswith("#"):
            continue
        fields = stripped.split("\t")
        if len(fields) != 3 or not all(f.strip() for f in fields):
            bad.append(lineno)
            continue
        rows.append((fields[0], fields[1], fields[2]))
    if bad:
        raise TripleParseError(str(path), bad)
    return rows


def write_triple_file(path: str | Path, rows: list[tuple[str, str, str]]) -> None:
    lines = [f"{h}\t{r}\t{t}" for h, r, t in rows]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
