"""Link-prediction evaluation: exhaustive candidate ranking, MRR, Hits@k.

Ranking is pessimistic about ties: every competitor scoring at least as high
as the true entity counts as ranked ahead of it, so an untrained constant
model lands at the bottom instead of looking artificially good. The filtered
protocol drops candidates that would form a different known-true fact.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Protocol

import numpy as np

from .errors import ValidationError
from .kb import Triple
from .model import AnalogyParams, score_all_heads, score_all_tails


class CorruptSide(str, Enum):
    HEAD = "head"
    TAIL = "tail"


@dataclass(frozen=True)
class RankQuery:
    triple: Triple
    corrupt_side: CorruptSide


class PositiveLookup(Protocol):
    """Anything that can answer 'which entities complete this pattern'."""

    def tails_for(self, head: int, relation: int) -> set[int]: ...

    def heads_for(self, relation: int, tail: int) -> set[int]: ...


class FilterIndex:
    """PositiveLookup over a plain triple collection."""

    def __init__(self, triples: Iterable[Triple]):
        self._tails: dict[tuple[int, int], set[int]] = {}
        self._heads: dict[tuple[int, int], set[int]] = {}
        for t in triples:
            self._tails.setdefault((t.head, t.relation), set()).add(t.tail)
            self._heads.setdefault((t.relation, t.tail), set()).add(t.head)

    def tails_for(self, head: int, relation: int) -> set[int]:
        return self._tails.get((head, relation), set())

    def heads_for(self, relation: int, tail: int) -> set[int]:
        return self._heads.get((relation, tail), set())


def as_lookup(positives) -> PositiveLookup:
    """Coerce a KnowledgeBase, lookup, or triple iterable into a PositiveLookup."""
    if positives is None:
        return FilterIndex(())
    if hasattr(positives, "tails_for") and hasattr(positives, "heads_for"):
        return positives
    return FilterIndex(positives)


def rank_of(
    params: AnalogyParams,
    query: RankQuery,
    positives: PositiveLookup | Iterable[Triple] | None = None,
    filtered: bool = False,
) -> int:
    """Pessimistic rank (>= 1) of the true entity among all candidates.

    Candidates are every entity row; in filtered mode, candidates that form
    a known positive other than the query triple itself are removed from the
    competition first.
    """
    if params.num_entities == 0:
        raise ValidationError("cannot rank with an empty entity table")
    t = query.triple
    if query.corrupt_side is CorruptSide.TAIL:
        scores = score_all_tails(params, t.head, t.relation)
        true_id = t.tail
    else:
        scores = score_all_heads(params, t.relation, t.tail)
        true_id = t.head

    competitor = np.ones(params.num_entities, dtype=bool)
    competitor[true_id] = False
    if filtered:
        lookup = as_lookup(positives)
        if query.corrupt_side is CorruptSide.TAIL:
            known = lookup.tails_for(t.head, t.relation)
        else:
            known = lookup.heads_for(t.relation, t.tail)
        for eid in known:
            if eid != true_id and eid < params.num_entities:
                competitor[eid] = False

    true_score = scores[true_id]
    return 1 + int(np.count_nonzero(scores[competitor] >= true_score))


def mrr(ranks: list[int]) -> float:
    """Mean reciprocal rank; each rank must be a positive integer."""
    if not ranks:
        raise ValidationError("mrr of an empty rank list is undefined")
    if any(r < 1 for r in ranks):
        raise ValidationError("ranks must be >= 1")
    return float(np.mean([1.0 / r for r in ranks]))


def hits_at_k(ranks: list[int], k: int = 10) -> float:
    """Fraction of ranks within the top k (normalized by the query count)."""
    if not ranks:
        raise ValidationError("hits@k of an empty rank list is undefined")
    if k < 1:
        raise ValidationError("k must be >= 1")
    if any(r < 1 for r in ranks):
        raise ValidationError("ranks must be >= 1")
    return float(np.mean([1.0 if r <= k else 0.0 for r in ranks]))


@dataclass(frozen=True)
class SplitMetrics:
    mrr: float
    hits10: float


def split_ranks(
    params: AnalogyParams,
    split: list[Triple],
    positives: PositiveLookup | Iterable[Triple] | None = None,
    filtered: bool = True,
) -> list[int]:
    """Ranks for both corruption sides of every triple in the split."""
    if not split:
        raise ValidationError("cannot evaluate an empty split")
    lookup = as_lookup(positives) if filtered else None
    ranks: list[int] = []
    for t in split:
        ranks.append(rank_of(params, RankQuery(t, CorruptSide.TAIL), lookup, filtered))
        ranks.append(rank_of(params, RankQuery(t, CorruptSide.HEAD), lookup, filtered))
    return ranks


def evaluate_split(
    params: AnalogyParams,
    split: list[Triple],
    positives: PositiveLookup | Iterable[Triple] | None = None,
    filtered: bool = True,
) -> SplitMetrics:
    """MRR and Hits@10 over head- and tail-corruption queries of a split."""
    ranks = split_ranks(params, split, positives, filtered)
    return SplitMetrics(mrr=mrr(ranks), hits10=hits_at_k(ranks, 10))


@dataclass
class EvalMatrix:
    """Lower-triangular per-session evaluation grid.

    Row i is filled right after training session i and maps each evaluated
    split index j <= i to its metrics. Cells above the diagonal were never
    evaluated and export as ``absent``.
    """

    protocol: str = "filtered"
    rows: list[dict[int, SplitMetrics]] = field(default_factory=list)

    def add_row(self, cells: dict[int, SplitMetrics]) -> None:
        expected = set(range(len(self.rows) + 1))
        if set(cells) != expected:
            raise ValidationError(
                f"row {len(self.rows)} must cover splits {sorted(expected)}, got {sorted(cells)}"
            )
        self.rows.append(dict(cells))

    def cell(self, train_session: int, eval_split: int) -> SplitMetrics:
        return self.rows[train_session][eval_split]

    def to_grid_csv(self, metric: str) -> str:
        """Grid layout, one row per training session, ``absent`` off-triangle."""
        if metric not in ("mrr", "hits10"):
            raise ValidationError(f"unknown metric {metric!r}")
        n = len(self.rows)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["train_session"] + [f"eval_{j}" for j in range(n)])
        for i, row in enumerate(self.rows):
            cells = []
            for j in range(n):
                if j in row:
                    cells.append(f"{getattr(row[j], metric):.6f}")
                else:
                    cells.append("absent")
            writer.writerow([i] + cells)
        return buf.getvalue()

    def to_report_csv(self) -> str:
        """Long form: train_session,eval_split,metric,protocol,value."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["train_session", "eval_split", "metric", "protocol", "value"])
        for i, row in enumerate(self.rows):
            for j in sorted(row):
                writer.writerow([i, j, "mrr", self.protocol, f"{row[j].mrr:.6f}"])
                writer.writerow([i, j, "hits@10", self.protocol, f"{row[j].hits10:.6f}"])
        return buf.getvalue()
