"""Single mutation-serialized handle over KB, parameters, queue, scheduler.

Everything the CLI, the long-run driver and the HTTP service do goes through
this object, so the same scenario produces the same journal no matter which
surface drove it. Mutations take one re-entrant lock and bump a revision
counter; reads return value snapshots.

Training is deferred, never inline: commits and ticks only mark training as
due, and `maybe_train` runs it once the question queue has drained. That
keeps the exploring/training exclusivity visible in one place, guarded by an
assertion counter that end-to-end tests pin at zero.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .acquisition import (
    Question,
    QuestionState,
    TemplateRegistry,
    Verdict,
    ensure_capacity,
    phase_a,
    phase_c,
)
from .errors import ProtocolError, ValidationError
from .evaluation import SplitMetrics, evaluate_split
from .kb import KnowledgeBase, Triple
from .model import AnalogyParams, init_params
from .scheduler import Action, Condition, Event, Mode, SchedulerState, step
from .training import ReplayPool, SessionDataset, TrainConfig, TrainReport, train_session

_TAG_ENGINE_GROW = 11
_TAG_ENGINE_DEV = 12


@dataclass
class SessionRecord:
    """What the dashboard shows about one completed learning session."""

    session_index: int
    triples_trained: int
    kb_triples: int
    best_epoch: int
    stopped_epoch: int
    best_dev_mrr: float
    metrics: dict[str, float] = field(default_factory=dict)


class Engine:
    """Mutable run state with serialized mutations and a revision counter."""

    def __init__(
        self,
        kb: KnowledgeBase | None = None,
        train_config: TrainConfig | None = None,
        condition: Condition | None = None,
        registry: TemplateRegistry | None = None,
        questions_per_detection: int = 2,
        seed: int = 0,
    ) -> None:
        self._lock = threading.RLock()
        self.kb = kb if kb is not None else KnowledgeBase()
        self.config = train_config if train_config is not None else TrainConfig(seed=seed)
        self.registry = registry or TemplateRegistry()
        self.questions_per_detection = questions_per_detection
        self.seed = seed
        self.params: AnalogyParams = init_params(
            self.kb.vocabulary.num_entities,
            self.kb.vocabulary.num_relations,
            self.config.dim,
            self.config.block_pairs,
            seed=seed,
        )
        self.scheduler = SchedulerState(condition=condition or Condition())
        self.revision = 0
        self.questions: dict[int, Question] = {}
        self._question_order: list[int] = []
        self._next_question_id = 0
        self._created_counter = 0
        self._grow_counter = 0
        self._rng_relations = np.random.default_rng([seed, 7])
        self.replay_pool = ReplayPool()
        self.acquired: list[Triple] = []
        self.session_index = 0
        self.training_due = False
        self.reports: list[TrainReport] = []
        self.session_records: list[SessionRecord] = []
        self.acks: list[str] = []
        # must stay 0: counts training attempts made while the mode says exploring
        self.train_steps_while_exploring = 0

    # ------------------------------------------------------------------
    # internals
    # ------------------------------------------------------------------

    def _bump(self) -> None:
        self.revision += 1

    def _grow_seed(self) -> list[int]:
        self._grow_counter += 1
        return [self.seed, _TAG_ENGINE_GROW, self._grow_counter]

    def _feed(self, event: Event) -> Action:
        self.scheduler, action = step(self.scheduler, event)
        if action in (Action.START_TRAINING, Action.DOCK):
            self.training_due = True
        return action

    # ------------------------------------------------------------------
    # mutations
    # ------------------------------------------------------------------

    def import_triples(self, path) -> int:
        """A-priori knowledge: facts enter the KB but not the training buffer."""
        with self._lock:
            added = self.kb.import_triples(path, session=self.session_index)
            self.params = ensure_capacity(self.params, self.kb.vocabulary, self._grow_seed())
            self._bump()
            return added

    def register_relations(self, names: list[str]) -> None:
        """Seed the relation vocabulary (relations never come from verdicts)."""
        with self._lock:
            for name in names:
                self.kb.vocabulary.register_relation(name)
            self.params = ensure_capacity(self.params, self.kb.vocabulary, self._grow_seed())
            self._bump()

    def inject_detection(self, label: str) -> list[Question]:
        with self._lock:
            self.params, questions = phase_a(
                self.params,
                self.kb,
                label,
                rng=self._rng_relations,
                questions_per_detection=self.questions_per_detection,
                id_start=self._next_question_id,
                created_at=self._created_counter,
                registry=self.registry,
                grow_seed=self._grow_seed(),
            )
            self._created_counter += 1
            for q in questions:
                self.questions[q.question_id] = q
                self._question_order.append(q.question_id)
            self._next_question_id += len(questions)
            self._bump()
            return questions

    def next_question(self) -> Question | None:
        with self._lock:
            for qid in self._question_order:
                if self.questions[qid].state is QuestionState.PENDING:
                    return self.questions[qid]
            return None

    def answer_question(self, question_id: int, answer: str, correction: str | None = None) -> tuple[Triple, bool]:
        """Apply a verdict; commits the resulting fact and may queue training."""
        with self._lock:
            if question_id not in self.questions:
                raise KeyError(f"unknown question id {question_id}")
            question = self.questions[question_id]
            verdict = Verdict(question_id=question_id, answer=answer, correction=correction)
            committed, added = phase_c(
                self.kb, question, verdict, session=self.session_index, on_ack=self._record_ack
            )
            self.params = ensure_capacity(self.params, self.kb.vocabulary, self._grow_seed())
            if added:
                self.acquired.append(committed)
                self._feed(Event.DETECTION_ACQUIRED)
            self._bump()
            return committed, added

    def discard_question(self, question_id: int) -> None:
        with self._lock:
            question = self.questions[question_id]
            if question.state is not QuestionState.PENDING:
                raise ProtocolError(f"question {question_id} already {question.state.value}")
            question.advance(QuestionState.CLOSED)
            self._bump()

    def _record_ack(self, triple: Triple, added: bool) -> None:
        v = self.kb.vocabulary
        text = f"({v.entity_name(triple.head)}, {v.relation_name(triple.relation)}, {v.entity_name(triple.tail)})"
        self.acks.append(f"added {text}" if added else f"already knew {text}")

    def tick(self) -> Action:
        with self._lock:
            action = self._feed(Event.TICK)
            self._bump()
            return action

    def pending_count(self) -> int:
        with self._lock:
            return sum(1 for q in self.questions.values() if q.state is QuestionState.PENDING)

    def maybe_train(self) -> TrainReport | None:
        """Run the due training session once the question queue is drained."""
        with self._lock:
            if not self.training_due or self.pending_count() > 0:
                return None
            return self.run_training()

    def run_training(self) -> TrainReport | None:
        """Train on the triples acquired since the last session.

        Skips (but still completes the scheduler handshake) when nothing new
        was acquired, which can happen on a time-window boundary.
        """
        with self._lock:
            if self.scheduler.mode is Mode.EXPLORING:
                self.train_steps_while_exploring += 1
                raise ProtocolError("refusing to train while exploring")
            self.training_due = False
            if not self.acquired:
                self._feed(Event.TRAINING_FINISHED)
                self._bump()
                return None
            triples = list(self.acquired)
            rng = np.random.default_rng([self.seed, self.session_index, _TAG_ENGINE_DEV])
            n_dev = max(1, len(triples) // 10) if len(triples) >= 3 else 0
            order = rng.permutation(len(triples))
            dev = [triples[i] for i in order[:n_dev]]
            train = [triples[i] for i in order[n_dev:]]
            dataset = SessionDataset(session_index=self.session_index, train=train, dev=dev, test=[])
            self.params, report = train_session(
                self.params, dataset, self.replay_pool, self.config, known_positives=self.kb.positives
            )
            self.replay_pool.extend(train)
            self.acquired = []
            self.reports.append(report)
            self.session_records.append(
                SessionRecord(
                    session_index=self.session_index,
                    triples_trained=len(triples),
                    kb_triples=len(self.kb),
                    best_epoch=report.best_epoch,
                    stopped_epoch=report.stopped_epoch,
                    best_dev_mrr=report.dev_mrr_curve[report.best_epoch],
                )
            )
            self.session_index += 1
            self._feed(Event.TRAINING_FINISHED)
            self._bump()
            return report

    # ------------------------------------------------------------------
    # reads
    # ------------------------------------------------------------------

    def stats(self) -> dict:
        with self._lock:
            out = self.kb.stats()
            out["sessions_completed"] = self.session_index
            out["pending_questions"] = self.pending_count()
            return out

    def training_status(self) -> dict:
        with self._lock:
            return {
                "mode": self.scheduler.mode.value,
                "battery": self.scheduler.battery,
                "clock": self.scheduler.clock,
                "acquired_since_last_train": len(self.acquired),
                "sessions_completed": self.session_index,
                "training_due": self.training_due,
            }

    def evaluate_heldout(self, names: list[tuple[str, str, str]]) -> SplitMetrics:
        """Metrics on a fixed name-level query set, unknown names ranked last.

        Queries whose entities or relation the engine has never met count as
        worst-possible ranks, so the metric stays comparable while coverage
        grows.
        """
        with self._lock:
            if not names:
                raise ValidationError("empty held-out set")
            v = self.kb.vocabulary
            known: list[Triple] = []
            unknown = 0
            for h, r, t in names:
                if v.has_entity(h) and v.has_relation(r) and v.has_entity(t):
                    known.append(Triple(v.entity_id(h), v.relation_id(r), v.entity_id(t)))
                else:
                    unknown += 1
            worst = max(1, self.params.num_entities)
            ranks: list[int] = [worst] * (2 * unknown)
            if known:
                from .evaluation import split_ranks

                ranks += split_ranks(self.params, known, self.kb, filtered=True)
            from .evaluation import hits_at_k, mrr

            return SplitMetrics(mrr=mrr(ranks), hits10=hits_at_k(ranks, 10))
