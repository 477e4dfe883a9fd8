"""Long-run driver: detection stream, simulated oracle, explore/train loop.

One run drops an engine with an empty knowledge base (plus the relation
schema) into a generated world and alternates exploration and training per
the configured trigger condition. A fixed slice of the world is held out of
the oracle's ground truth and evaluated after every training session, so the
timeline tracks how well the embedding generalizes to facts nobody ever
told the robot.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .acquisition import simulated_oracle
from .engine import Engine
from .errors import ConfigError, SamplingError
from .evaluation import SplitMetrics
from .kb import KnowledgeBase, Source, Triple
from .scheduler import Condition, ConditionKind, Mode
from .training import TrainConfig
from .world import RELATION_SCHEMA, World

_MAX_DETECTIONS_PER_CYCLE = 10_000


@dataclass(frozen=True)
class LongrunConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    condition: Condition = field(default_factory=lambda: Condition(kind=ConditionKind.QUOTA, quota=10))
    questions_per_detection: int = 2
    heldout_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.heldout_fraction < 1.0:
            raise ConfigError("held-out fraction must lie strictly inside (0, 1)")
        if self.questions_per_detection < 1:
            raise ConfigError("questions per detection must be >= 1")


@dataclass
class CycleMetrics:
    cycle: int
    kb_triples: int
    heldout: SplitMetrics


@dataclass
class LongrunResult:
    engine: Engine
    heldout: list[tuple[str, str, str]]
    timeline: list[CycleMetrics]

    def timeline_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["cycle", "metric", "value"])
        for m in self.timeline:
            writer.writerow([m.cycle, "kb_triples", m.kb_triples])
            writer.writerow([m.cycle, "heldout_mrr", f"{m.heldout.mrr:.6f}"])
            writer.writerow([m.cycle, "heldout_hits10", f"{m.heldout.hits10:.6f}"])
        return buf.getvalue()


class DetectionStream:
    """Object labels, without replacement until exhausted, then uniform."""

    def __init__(self, labels: list[str], rng: np.random.Generator):
        if not labels:
            raise SamplingError("world has no detectable objects")
        self._labels = list(labels)
        self._rng = rng
        self._fresh = list(rng.permutation(len(labels)))

    def next(self) -> str:
        if self._fresh:
            return self._labels[self._fresh.pop()]
        return self._labels[int(self._rng.integers(len(self._labels)))]


def split_heldout(
    world: World, fraction: float, rng: np.random.Generator
) -> tuple[list[tuple[str, str, str]], KnowledgeBase]:
    """Name-level (heldout, oracle-truth) partition of the world's facts.

    Held-out facts are removed from what the oracle may reveal, so they stay
    genuinely unseen for the whole run.
    """
    triples = world.triples()
    vocab = world.kb.vocabulary
    n_held = max(1, int(round(len(triples) * fraction)))
    held_idx = {int(i) for i in rng.choice(len(triples), size=n_held, replace=False)}
    heldout: list[tuple[str, str, str]] = []
    truth = KnowledgeBase()
    for i, t in enumerate(triples):
        names = (vocab.entity_name(t.head), vocab.relation_name(t.relation), vocab.entity_name(t.tail))
        if i in held_idx:
            heldout.append(names)
        else:
            triple = Triple(
                truth.vocabulary.register_entity(names[0]),
                truth.vocabulary.register_relation(names[1]),
                truth.vocabulary.register_entity(names[2]),
            )
            truth.add(triple, Source.IMPORTED)
    return heldout, truth


def run_longrun(
    world: World,
    config: LongrunConfig,
    cycles: int,
    engine: Engine | None = None,
) -> LongrunResult:
    """Explore and train until ``cycles`` training sessions have completed.

    Each loop iteration is one simulated minute: one scheduler tick and, while
    exploring, one detection whose questions the oracle answers immediately.
    Questions the oracle cannot ground are discarded. After every completed
    training session the held-out slice is evaluated and appended to the
    timeline.
    """
    if cycles < 1:
        raise ConfigError("need at least one cycle")
    rng_run = np.random.default_rng([config.seed, 1])
    rng_oracle = np.random.default_rng([config.seed, 2])
    heldout, truth = split_heldout(world, config.heldout_fraction, np.random.default_rng([config.seed, 3]))

    if engine is None:
        engine = Engine(
            train_config=config.train,
            condition=config.condition,
            questions_per_detection=config.questions_per_detection,
            seed=config.seed,
        )
    engine.register_relations(list(RELATION_SCHEMA))
    stream = DetectionStream(world.object_labels, rng_run)

    timeline: list[CycleMetrics] = []
    detections_this_cycle = 0

    def settle() -> None:
        nonlocal detections_this_cycle
        if engine.training_due:
            engine.maybe_train()
        while engine.session_index > len(timeline):
            timeline.append(
                CycleMetrics(
                    cycle=len(timeline) + 1,
                    kb_triples=len(engine.kb),
                    heldout=engine.evaluate_heldout(heldout),
                )
            )
            detections_this_cycle = 0

    while len(timeline) < cycles:
        engine.tick()
        settle()
        if len(timeline) >= cycles:
            break
        if engine.scheduler.mode is not Mode.EXPLORING or engine.training_due:
            continue

        detections_this_cycle += 1
        if detections_this_cycle > _MAX_DETECTIONS_PER_CYCLE:
            raise SamplingError("exploration cannot reach the training trigger; the world looks saturated")
        for q in engine.inject_detection(stream.next()):
            verdict = simulated_oracle(truth, q, engine.kb.vocabulary, rng_oracle)
            if verdict is None:
                engine.discard_question(q.question_id)
            else:
                engine.answer_question(q.question_id, verdict.answer, verdict.correction)
        settle()

    result = LongrunResult(engine=engine, heldout=heldout, timeline=timeline)
    for record, metrics in zip(engine.session_records, timeline):
        record.metrics = {"heldout_mrr": metrics.heldout.mrr, "heldout_hits10": metrics.heldout.hits10}
    return result
