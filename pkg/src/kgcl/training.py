"""Session training: negative sampling, adaptive-gradient updates, replay.

One learning session consumes one SessionDataset. Each epoch shuffles the
session's train triples (plus, in continual mode, a replayed sample of
earlier sessions' triples), pairs every positive with sampled corruptions,
and applies per-parameter adaptive-learning-rate updates batch by batch.
Dev MRR is tracked every epoch for early stopping; the returned parameters
are the snapshot from the best dev epoch.

`run_curriculum` chains sessions chronologically in one of two contexts:
``classical`` finetunes on each session alone, ``continual`` rehearses a
uniform sample of all earlier train triples alongside the new ones.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, SamplingError, ValidationError
from .evaluation import EvalMatrix, FilterIndex, SplitMetrics, evaluate_split
from .kb import Triple
from .model import (
    AnalogyParams,
    apply_relation,
    apply_relation_transpose,
    grow,
    init_params,
    logistic_loss,
    relation_gradient,
)

ADAGRAD_EPS = 1e-8

# rng stream tags so every consumer of the seed gets an independent stream
_TAG_GROW = 1
_TAG_SHUFFLE = 2
_TAG_NEGATIVES = 3
_TAG_REPLAY = 4
_TAG_SPLIT = 5


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 32
    num_block_pairs: int | None = None  # defaults to dim // 4
    learning_rate: float = 0.1
    negatives_per_positive: int = 6
    batch_size: int = 512
    max_epochs: int = 500
    patience: int = 50
    replay_fraction: float = 0.3
    reg_weight: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if self.negatives_per_positive < 1:
            raise ConfigError("need at least one negative per positive")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ConfigError("batch size, max epochs and patience must be >= 1")
        if not 0.0 <= self.replay_fraction <= 1.0:
            raise ConfigError("replay fraction must lie in [0, 1]")
        if self.reg_weight < 0:
            raise ConfigError("regularization weight must be non-negative")

    @property
    def block_pairs(self) -> int:
        return self.dim // 4 if self.num_block_pairs is None else self.num_block_pairs


@dataclass
class SessionDataset:
    """Train/dev/test triples of one learning session."""

    session_index: int
    train: list[Triple]
    dev: list[Triple]
    test: list[Triple]

    def validate_disjoint(self) -> None:
        a, b, c = set(self.train), set(self.dev), set(self.test)
        if a & b or a & c or b & c:
            raise ValidationError(f"session {self.session_index}: splits overlap")

    def all_triples(self) -> list[Triple]:
        return self.train + self.dev + self.test


@dataclass
class TrainReport:
    """Per-epoch curves for one session. Index 0 is the pre-training state."""

    session_index: int
    loss_curve: list[float]
    dev_mrr_curve: list[float]
    stopped_epoch: int
    best_epoch: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["epoch", "loss", "dev_mrr"])
        for epoch, (loss, dev) in enumerate(zip(self.loss_curve, self.dev_mrr_curve)):
            writer.writerow([epoch, f"{loss:.6f}", f"{dev:.6f}"])
        return buf.getvalue()


class ReplayPool:
    """Rehearsal memory over earlier sessions' train triples.

    Every draw is counted, which lets tests assert that the classical
    context never touches old data.
    """

    def __init__(self) -> None:
        self._triples: list[Triple] = []
        self.access_count = 0

    def __len__(self) -> int:
        return len(self._triples)

    def extend(self, triples: list[Triple]) -> None:
        self._triples.extend(triples)

    def draw(self, k: int, rng: np.random.Generator) -> list[Triple]:
        if k <= 0 or not self._triples:
            return []
        self.access_count += 1
        idx = rng.choice(len(self._triples), size=k, replace=k > len(self._triples))
        return [self._triples[i] for i in idx]


def sample_negatives(
    triple: Triple,
    num_entities: int,
    positives,
    count: int,
    rng: np.random.Generator,
    max_tries: int = 100,
) -> list[Triple]:
    """Corrupt one side of a positive ``count`` times (labels are all -1).

    Each corruption flips a fair coin for the side and replaces that entity
    with a uniformly random different one. Corruptions that collide with a
    known positive are resampled up to ``max_tries`` times, then kept so a
    saturated toy world cannot spin forever.
    """
    if count < 1:
        raise ConfigError("negative count must be >= 1")
    if num_entities < 2:
        raise SamplingError("negative sampling needs at least two entities")
    contains = positives.__contains__ if positives is not None else lambda _t: False
    out: list[Triple] = []
    for _ in range(count):
        candidate = triple
        for _ in range(max_tries):
            corrupt_head = bool(rng.integers(2))
            original = triple.head if corrupt_head else triple.tail
            eid = int(rng.integers(num_entities - 1))
            if eid >= original:
                eid += 1
            if corrupt_head:
                candidate = Triple(eid, triple.relation, triple.tail)
            else:
                candidate = Triple(triple.head, triple.relation, eid)
            if not contains(candidate):
                break
        out.append(candidate)
    return out


def _batch_update(
    params: AnalogyParams,
    heads: np.ndarray,
    rels: np.ndarray,
    tails: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
) -> float:
    """Accumulate gradients for one example batch and apply adagrad rows.

    Returns the mean pre-update logistic loss of the batch. All math runs in
    float64; the float32 parameter rows are the single source of truth.
    """
    m = params.num_block_pairs
    ent64 = params.entities.astype(np.float64)
    rel64 = params.relations.astype(np.float64)
    h_rows = ent64[heads]
    t_rows = ent64[tails]
    r_rows = rel64[rels]

    w = apply_relation(r_rows, t_rows, m)  # d phi / d v_h
    phi = np.sum(h_rows * w, axis=-1)
    loss = float(np.mean(logistic_loss(phi, labels)))

    y = labels.astype(np.float64)
    coef = (-y * 0.5 * (1.0 + np.tanh(0.5 * (-y * phi))))[:, None]
    grad_e = np.zeros_like(ent64)
    np.add.at(grad_e, heads, coef * w)
    np.add.at(grad_e, tails, coef * apply_relation_transpose(r_rows, h_rows, m))
    grad_r = np.zeros_like(rel64)
    np.add.at(grad_r, rels, coef * relation_gradient(h_rows, t_rows, m))

    touched_e = np.unique(np.concatenate([heads, tails]))
    touched_r = np.unique(rels)
    lam = config.reg_weight
    if lam:
        grad_e[touched_e] += lam * ent64[touched_e]
        grad_r[touched_r] += lam * rel64[touched_r]

    for storage, accum, g, touched in (
        (params.entities, params.entity_accum, grad_e, touched_e),
        (params.relations, params.relation_accum, grad_r, touched_r),
    ):
        g_rows = g[touched]
        acc = accum[touched].astype(np.float64) + g_rows**2
        accum[touched] = acc.astype(storage.dtype)
        step = config.learning_rate * g_rows / (np.sqrt(acc) + ADAGRAD_EPS)
        storage[touched] = (storage[touched].astype(np.float64) - step).astype(storage.dtype)
    return loss


def _epoch_examples(
    positives: list[Triple],
    num_entities: int,
    known_positives,
    config: TrainConfig,
    rng_neg: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    heads, rels, tails, labels = [], [], [], []
    for pos in positives:
        heads.append(pos.head)
        rels.append(pos.relation)
        tails.append(pos.tail)
        labels.append(1)
        for neg in sample_negatives(pos, num_entities, known_positives, config.negatives_per_positive, rng_neg):
            heads.append(neg.head)
            rels.append(neg.relation)
            tails.append(neg.tail)
            labels.append(-1)
    return (
        np.asarray(heads, dtype=np.int64),
        np.asarray(rels, dtype=np.int64),
        np.asarray(tails, dtype=np.int64),
        np.asarray(labels, dtype=np.int64),
    )


def _epoch_loss_only(params, heads, rels, tails, labels) -> float:
    m = params.num_block_pairs
    h_rows = params.entities.astype(np.float64)[heads]
    t_rows = params.entities.astype(np.float64)[tails]
    r_rows = params.relations.astype(np.float64)[rels]
    phi = np.sum(h_rows * apply_relation(r_rows, t_rows, m), axis=-1)
    return float(np.mean(logistic_loss(phi, labels)))


def train_session(
    params: AnalogyParams,
    dataset: SessionDataset,
    replay_pool: ReplayPool | None,
    config: TrainConfig,
    known_positives=None,
) -> tuple[AnalogyParams, TrainReport]:
    """Train on one session's data, returning the best-dev-epoch snapshot.

    ``known_positives`` (anything supporting ``in``) filters negative
    corruptions; it defaults to the session's own train set. Replay only
    happens when ``replay_fraction`` > 0 and the pool is non-empty, so a
    classical run never reads it. Dev MRR uses the raw protocol; when the
    dev split is empty the negated train loss is monitored instead.
    """
    if not dataset.train:
        raise ValidationError(f"session {dataset.session_index}: empty train split")
    params = params.copy()
    sess = dataset.session_index
    rng_shuffle = np.random.default_rng([config.seed, sess, _TAG_SHUFFLE])
    rng_neg = np.random.default_rng([config.seed, sess, _TAG_NEGATIVES])
    rng_replay = np.random.default_rng([config.seed, sess, _TAG_REPLAY])
    if known_positives is None:
        known_positives = set(dataset.train)

    replay_count = 0
    if config.replay_fraction > 0 and replay_pool is not None and len(replay_pool) > 0:
        replay_count = int(np.ceil(config.replay_fraction * len(dataset.train)))

    def monitor() -> float:
        if dataset.dev:
            return evaluate_split(params, dataset.dev, filtered=False).mrr
        return -last_loss

    # Baseline entry: loss and dev metric before any update this session.
    arrays0 = _epoch_examples(dataset.train, params.num_entities, known_positives, config, rng_neg)
    last_loss = _epoch_loss_only(params, *arrays0)
    loss_curve = [last_loss]
    dev_curve = [monitor()]
    best_metric = dev_curve[0]
    best_epoch = 0
    best_state = params.copy()

    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        epoch_triples = list(dataset.train)
        if replay_count:
            epoch_triples += replay_pool.draw(replay_count, rng_replay)
        order = rng_shuffle.permutation(len(epoch_triples))
        epoch_positives = [epoch_triples[i] for i in order]

        heads, rels, tails, labels = _epoch_examples(
            epoch_positives, params.num_entities, known_positives, config, rng_neg
        )
        group = 1 + config.negatives_per_positive
        batch_losses = []
        batch_sizes = []
        for start in range(0, len(epoch_positives), config.batch_size):
            sl = slice(start * group, (start + config.batch_size) * group)
            batch_losses.append(_batch_update(params, heads[sl], rels[sl], tails[sl], labels[sl], config))
            batch_sizes.append(len(labels[sl]))
        last_loss = float(np.average(batch_losses, weights=batch_sizes))
        loss_curve.append(last_loss)
        metric = monitor()
        dev_curve.append(metric)
        if metric > best_metric:
            best_metric = metric
            best_epoch = epoch
            best_state = params.copy()
        if epoch - best_epoch >= config.patience:
            break

    report = TrainReport(
        session_index=sess,
        loss_curve=loss_curve,
        dev_mrr_curve=dev_curve,
        stopped_epoch=epoch,
        best_epoch=best_epoch,
    )
    return best_state, report


def _required_rows(datasets: list[SessionDataset], upto: int) -> tuple[int, int]:
    max_e = -1
    max_r = -1
    for ds in datasets[: upto + 1]:
        for t in ds.all_triples():
            max_e = max(max_e, t.head, t.tail)
            max_r = max(max_r, t.relation)
    return max_e + 1, max_r + 1


def run_curriculum(
    datasets: list[SessionDataset],
    mode: str,
    config: TrainConfig,
) -> tuple[AnalogyParams, EvalMatrix, list[TrainReport]]:
    """Process sessions chronologically in the classical or continual context.

    Before each session the parameter table grows to cover any new ids.
    After each session every dev split seen so far is evaluated with the
    filtered protocol (filter = all triples of the sessions seen so far),
    filling one row of the lower-triangular evaluation matrix.
    """
    if mode not in ("classical", "continual"):
        raise ConfigError(f"mode must be 'classical' or 'continual', got {mode!r}")
    if not datasets:
        raise ValidationError("need at least one session")
    for ds in datasets:
        ds.validate_disjoint()
    if mode == "classical":
        config = replace(config, replay_fraction=0.0)

    params = init_params(0, 0, config.dim, config.block_pairs, seed=config.seed)
    pool = ReplayPool()
    matrix = EvalMatrix(protocol="filtered")
    reports: list[TrainReport] = []
    train_positives: set[Triple] = set()
    seen_triples: set[Triple] = set()

    for i, ds in enumerate(datasets):
        need_e, need_r = _required_rows(datasets, i)
        params = grow(
            params,
            max(0, need_e - params.num_entities),
            max(0, need_r - params.num_relations),
            seed=[config.seed, ds.session_index, _TAG_GROW],
        )
        train_positives.update(ds.train)
        params, report = train_session(params, ds, pool, config, known_positives=train_positives)
        reports.append(report)
        pool.extend(ds.train)
        seen_triples.update(ds.all_triples())

        lookup = FilterIndex(seen_triples)
        row: dict[int, SplitMetrics] = {}
        for j in range(i + 1):
            row[j] = evaluate_split(params, datasets[j].dev, lookup, filtered=True)
        matrix.add_row(row)

    if mode == "classical" and pool.access_count != 0:
        raise AssertionError("classical context read the replay pool")
    return params, matrix, reports
