"""Human-validated knowledge acquisition.

A detected object label turns into predicted facts (phase A: pick relations
at random, predict the tail by ranking), each rendered as a plain-English
question (phase B). The verdict either confirms the prediction or supplies
the correct tail, and either way a true fact lands in the knowledge base
(phase C), acknowledged back to the asker. A simulated oracle backed by a
ground-truth knowledge base stands in for the human in automated runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ProtocolError, ValidationError
from .kb import KnowledgeBase, Source, Triple, Vocabulary
from .model import AnalogyParams, grow, score_all_tails

GENERIC_QUESTION = "Is it true that {head} {relation} {tail}?"
GENERIC_CORRECTION = "What is the correct value for {head} {relation}?"

DEFAULT_TEMPLATES = {
    "objInLoc": ("Is the {head} in the {tail}?", "Where is the {head}?"),
    "hasMaterial": ("Is the {head} made of {tail}?", "What is the {head} made of?"),
    "hasColor": ("Is the {head} {tail}?", "What color is the {head}?"),
    "canContain": ("Can the {head} contain the {tail}?", "What can the {head} contain?"),
    "nearTo": ("Is the {head} near the {tail}?", "What is the {head} near?"),
}


class QuestionState(str, Enum):
    PENDING = "pending"
    ANSWERED_YES = "answered-yes"
    AWAITING_CORRECTION = "answered-no-awaiting-correction"
    CLOSED = "closed"


_FORWARD = {
    QuestionState.PENDING: {QuestionState.ANSWERED_YES, QuestionState.AWAITING_CORRECTION, QuestionState.CLOSED},
    QuestionState.ANSWERED_YES: {QuestionState.CLOSED},
    QuestionState.AWAITING_CORRECTION: {QuestionState.CLOSED},
    QuestionState.CLOSED: set(),
}


@dataclass
class Question:
    question_id: int
    triple: Triple
    text: str
    created_at: int
    state: QuestionState = QuestionState.PENDING

    def advance(self, new_state: QuestionState) -> None:
        if new_state not in _FORWARD[self.state]:
            raise ProtocolError(f"question {self.question_id}: cannot go {self.state.value} -> {new_state.value}")
        self.state = new_state


@dataclass(frozen=True)
class Verdict:
    question_id: int
    answer: str  # "yes" | "no"
    correction: str | None = None

    def __post_init__(self) -> None:
        if self.answer not in ("yes", "no"):
            raise ValidationError(f"answer must be 'yes' or 'no', got {self.answer!r}")
        if self.answer == "no" and not (self.correction and self.correction.strip()):
            raise ValidationError("a 'no' verdict requires a correction")
        if self.answer == "yes" and self.correction is not None:
            raise ValidationError("a 'yes' verdict must not carry a correction")


class TemplateRegistry:
    """Relation-specific question wording with a generic fallback."""

    def __init__(self, templates: dict[str, tuple[str, str]] | None = None):
        self._templates = dict(DEFAULT_TEMPLATES if templates is None else templates)

    def question_for(self, relation: str) -> str:
        return self._templates.get(relation, (GENERIC_QUESTION, GENERIC_CORRECTION))[0]

    def correction_prompt_for(self, relation: str) -> str:
        return self._templates.get(relation, (GENERIC_QUESTION, GENERIC_CORRECTION))[1]

    @classmethod
    def from_file(cls, path: str | Path) -> "TemplateRegistry":
        """Load ``relation<TAB>question<TAB>correction-prompt`` lines."""
        templates = dict(DEFAULT_TEMPLATES)
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 3 tab-separated fields")
            templates[fields[0]] = (fields[1], fields[2])
        return cls(templates)


def render_question(registry: TemplateRegistry, vocab: Vocabulary, triple: Triple) -> str:
    relation = vocab.relation_name(triple.relation)
    template = registry.question_for(relation)
    return template.format(
        head=vocab.entity_name(triple.head),
        relation=relation,
        tail=vocab.entity_name(triple.tail),
    )


def ensure_capacity(params: AnalogyParams, vocab: Vocabulary, seed: int | list[int]) -> AnalogyParams:
    """Grow the parameter table until it covers every registered id."""
    extra_e = vocab.num_entities - params.num_entities
    extra_r = vocab.num_relations - params.num_relations
    if extra_e < 0 or extra_r < 0:
        raise ValidationError("parameter table is larger than the vocabulary")
    if extra_e or extra_r:
        params = grow(params, extra_e, extra_r, seed)
    return params


def phase_a(
    params: AnalogyParams,
    kb: KnowledgeBase,
    label: str,
    rng: np.random.Generator,
    questions_per_detection: int = 2,
    id_start: int = 0,
    created_at: int = 0,
    registry: TemplateRegistry | None = None,
    grow_seed: int | list[int] = 0,
) -> tuple[AnalogyParams, list[Question]]:
    """Turn a detection into pending questions about predicted facts.

    The label is registered (growing the parameter table if needed), then up
    to ``questions_per_detection`` distinct relations are drawn uniformly;
    for each, the predicted tail is the top-scoring entity other than the
    detected object itself. With no relations or no other entities the
    detection is recorded in the vocabulary and no questions are produced.
    """
    if questions_per_detection < 1:
        raise ValidationError("questions per detection must be >= 1")
    registry = registry or TemplateRegistry()
    head = kb.vocabulary.register_entity(label)
    params = ensure_capacity(params, kb.vocabulary, grow_seed)

    n_rel = kb.vocabulary.num_relations
    if n_rel == 0 or kb.vocabulary.num_entities < 2:
        return params, []

    count = min(questions_per_detection, n_rel)
    rel_ids = rng.choice(n_rel, size=count, replace=False)
    questions = []
    for offset, rid in enumerate(sorted(int(r) for r in rel_ids)):
        scores = score_all_tails(params, head, rid)
        scores[head] = -np.inf
        tail = int(np.argmax(scores))
        triple = Triple(head, rid, tail)
        questions.append(
            Question(
                question_id=id_start + offset,
                triple=triple,
                text=render_question(registry, kb.vocabulary, triple),
                created_at=created_at,
            )
        )
    return params, questions


def phase_c(
    kb: KnowledgeBase,
    question: Question,
    verdict: Verdict,
    session: int = 0,
    on_ack: Callable[[Triple, bool], None] | None = None,
) -> tuple[Triple, bool]:
    """Commit the true fact a verdict establishes; closes the question.

    A positive answer confirms the predicted triple; a negative one commits
    (head, relation, correction) instead, registering the corrected tail
    entity if it is new. Returns the committed triple and whether it was new
    to the knowledge base. The acknowledgment callback fires either way.
    """
    if verdict.question_id != question.question_id:
        raise ValidationError("verdict does not reference this question")
    if question.state is not QuestionState.PENDING:
        raise ProtocolError(f"question {question.question_id} already {question.state.value}")

    if verdict.answer == "yes":
        question.advance(QuestionState.ANSWERED_YES)
        committed = question.triple
        source = Source.PREDICTED_CONFIRMED
    else:
        question.advance(QuestionState.AWAITING_CORRECTION)
        tail = kb.vocabulary.register_entity(verdict.correction.strip())
        committed = Triple(question.triple.head, question.triple.relation, tail)
        source = Source.HUMAN_CORRECTED

    added = kb.add(committed, source, session=session)
    question.advance(QuestionState.CLOSED)
    if on_ack is not None:
        on_ack(committed, added)
    return committed, added


def simulated_oracle(
    truth: KnowledgeBase,
    question: Question,
    vocab: Vocabulary,
    rng: np.random.Generator,
) -> Verdict | None:
    """Answer a question from a ground-truth knowledge base.

    Yes when the asked fact is true; otherwise a correction sampled
    uniformly from the true tails of (head, relation). Returns None when the
    ground truth holds no tail at all for the pair, in which case the
    question should be discarded rather than answered arbitrarily.
    """
    head_name = vocab.entity_name(question.triple.head)
    rel_name = vocab.relation_name(question.triple.relation)
    tail_name = vocab.entity_name(question.triple.tail)
    tv = truth.vocabulary
    if not tv.has_entity(head_name) or not tv.has_relation(rel_name):
        return None
    h = tv.entity_id(head_name)
    r = tv.relation_id(rel_name)
    true_tails = sorted(truth.tails_for(h, r))
    if not true_tails:
        return None
    if tv.has_entity(tail_name) and tv.entity_id(tail_name) in true_tails:
        return Verdict(question_id=question.question_id, answer="yes")
    pick = true_tails[int(rng.integers(len(true_tails)))]
    return Verdict(question_id=question.question_id, answer="no", correction=tv.entity_name(pick))
