"""Bilinear triple scoring with block-structured relation operators.

A triple (h, r, t) is scored as v_h . (W_r v_t) where every W_r is
block-diagonal: m two-by-two blocks [[a, -b], [b, a]] followed by d - 2m
scalar diagonal entries. All such matrices are normal and commute with each
other by construction, which is exactly what makes the family well behaved
for analogy-style reasoning; with every b = 0 the score degenerates to the
plain diagonal bilinear form. The blocks are never materialized during
scoring or training; `materialize_relation` exists so tests can check the
structural claims against dense linear algebra.

Parameters are stored as float32 (matching the checkpoint layout) and all
arithmetic runs in float64 after an exact upcast, so scores survive a
save/load round trip bit-for-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, IntegrityError, ValidationError
from .kb import Triple

CHECKPOINT_MAGIC = b"KGE1"
CHECKPOINT_VERSION = 1

PARAM_DTYPE = np.float32


@dataclass
class AnalogyParams:
    """Entity vectors, relation operator coefficients, and optimizer sums.

    ``relations[r]`` packs the operator of relation r as m (a_i, b_i) pairs
    in the first 2m slots followed by d - 2m scalar diagonal entries. The
    ``*_accum`` arrays hold per-parameter accumulated squared gradients for
    the adaptive learning rate; they grow and persist together with the
    parameters themselves.
    """

    dim: int
    num_block_pairs: int
    entities: np.ndarray
    relations: np.ndarray
    entity_accum: np.ndarray
    relation_accum: np.ndarray

    @property
    def num_entities(self) -> int:
        return self.entities.shape[0]

    @property
    def num_relations(self) -> int:
        return self.relations.shape[0]

    def copy(self) -> "AnalogyParams":
        return AnalogyParams(
            dim=self.dim,
            num_block_pairs=self.num_block_pairs,
            entities=self.entities.copy(),
            relations=self.relations.copy(),
            entity_accum=self.entity_accum.copy(),
            relation_accum=self.relation_accum.copy(),
        )

    def check_entity(self, eid: int) -> None:
        if not 0 <= eid < self.num_entities:
            raise IntegrityError(f"entity id {eid} out of range (have {self.num_entities} rows)")

    def check_relation(self, rid: int) -> None:
        if not 0 <= rid < self.num_relations:
            raise IntegrityError(f"relation id {rid} out of range (have {self.num_relations} rows)")


def _validate_shape(dim: int, num_block_pairs: int) -> None:
    if dim <= 0 or dim % 2 != 0:
        raise ConfigError(f"embedding dimension must be a positive even integer, got {dim}")
    if num_block_pairs < 0 or 2 * num_block_pairs > dim:
        raise ConfigError(f"need 0 <= 2*num_block_pairs <= dim, got m={num_block_pairs}, d={dim}")


def init_bound(dim: int) -> float:
    """Half-width of the uniform init interval, 6/sqrt(d)."""
    return 6.0 / float(np.sqrt(dim))


def init_params(
    num_entities: int,
    num_relations: int,
    dim: int,
    num_block_pairs: int | None = None,
    seed: int | list[int] = 0,
) -> AnalogyParams:
    """Fresh parameters with entries i.i.d. uniform on [-6/sqrt(d), 6/sqrt(d)].

    The default block count m = d // 4 puts half the coordinates in paired
    blocks and leaves half as plain scalars. The draw is fully determined by
    ``seed``.
    """
    if num_block_pairs is None:
        num_block_pairs = dim // 4
    _validate_shape(dim, num_block_pairs)
    if num_entities < 0 or num_relations < 0:
        raise ConfigError("row counts must be non-negative")
    rng = np.random.default_rng(seed)
    bound = init_bound(dim)
    entities = rng.uniform(-bound, bound, size=(num_entities, dim)).astype(PARAM_DTYPE)
    relations = rng.uniform(-bound, bound, size=(num_relations, dim)).astype(PARAM_DTYPE)
    return AnalogyParams(
        dim=dim,
        num_block_pairs=num_block_pairs,
        entities=entities,
        relations=relations,
        entity_accum=np.zeros((num_entities, dim), dtype=PARAM_DTYPE),
        relation_accum=np.zeros((num_relations, dim), dtype=PARAM_DTYPE),
    )


def grow(
    params: AnalogyParams,
    new_entities: int,
    new_relations: int,
    seed: int | list[int] = 0,
) -> AnalogyParams:
    """Append freshly initialized rows; existing rows are copied bit-exactly.

    Optimizer accumulators for the new rows start at zero so the adaptive
    step size treats them as never updated.
    """
    if new_entities < 0 or new_relations < 0:
        raise ConfigError("growth counts must be non-negative")
    if new_entities == 0 and new_relations == 0:
        return params.copy()
    fresh = init_params(new_entities, new_relations, params.dim, params.num_block_pairs, seed)
    return AnalogyParams(
        dim=params.dim,
        num_block_pairs=params.num_block_pairs,
        entities=np.vstack([params.entities, fresh.entities]),
        relations=np.vstack([params.relations, fresh.relations]),
        entity_accum=np.vstack([params.entity_accum, fresh.entity_accum]),
        relation_accum=np.vstack([params.relation_accum, fresh.relation_accum]),
    )


# ----------------------------------------------------------------------
# Block kernels. All take float64 arrays of shape (..., d) and are batched
# over leading dimensions. `m` is the number of (a, b) pairs.
# ----------------------------------------------------------------------

def apply_relation(rel: np.ndarray, vec: np.ndarray, m: int) -> np.ndarray:
    """W_r @ vec without materializing W_r."""
    out = np.empty(np.broadcast_shapes(rel.shape, vec.shape), dtype=np.float64)
    k = 2 * m
    if m:
        a = rel[..., 0:k:2]
        b = rel[..., 1:k:2]
        v1 = vec[..., 0:k:2]
        v2 = vec[..., 1:k:2]
        out[..., 0:k:2] = a * v1 - b * v2
        out[..., 1:k:2] = b * v1 + a * v2
    out[..., k:] = rel[..., k:] * vec[..., k:]
    return out


def apply_relation_transpose(rel: np.ndarray, vec: np.ndarray, m: int) -> np.ndarray:
    """W_r^T @ vec without materializing W_r."""
    out = np.empty(np.broadcast_shapes(rel.shape, vec.shape), dtype=np.float64)
    k = 2 * m
    if m:
        a = rel[..., 0:k:2]
        b = rel[..., 1:k:2]
        v1 = vec[..., 0:k:2]
        v2 = vec[..., 1:k:2]
        out[..., 0:k:2] = a * v1 + b * v2
        out[..., 1:k:2] = -b * v1 + a * v2
    out[..., k:] = rel[..., k:] * vec[..., k:]
    return out


def relation_gradient(head: np.ndarray, tail: np.ndarray, m: int) -> np.ndarray:
    """d score / d relation-coefficients for fixed head and tail rows."""
    out = np.empty(np.broadcast_shapes(head.shape, tail.shape), dtype=np.float64)
    k = 2 * m
    if m:
        h1 = head[..., 0:k:2]
        h2 = head[..., 1:k:2]
        t1 = tail[..., 0:k:2]
        t2 = tail[..., 1:k:2]
        out[..., 0:k:2] = h1 * t1 + h2 * t2
        out[..., 1:k:2] = h2 * t1 - h1 * t2
    out[..., k:] = head[..., k:] * tail[..., k:]
    return out


def score_rows(head: np.ndarray, rel: np.ndarray, tail: np.ndarray, m: int) -> np.ndarray:
    """Score v_h . (W_r v_t) for float64 rows, batched over leading dims."""
    return np.sum(head * apply_relation(rel, tail, m), axis=-1)


def _sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    # tanh form is stable for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def logistic_loss(phi: np.ndarray | float, label: np.ndarray | int) -> np.ndarray | float:
    """log(1 + exp(-y * phi)), elementwise and overflow-safe."""
    return np.logaddexp(0.0, -np.asarray(label, dtype=np.float64) * np.asarray(phi, dtype=np.float64))


# ----------------------------------------------------------------------
# Public scoring surface
# ----------------------------------------------------------------------

def score(params: AnalogyParams, head: int, relation: int, tail: int) -> float:
    """Score one triple. Equals v_h^T (dense W_r) v_t up to float64 rounding."""
    params.check_entity(head)
    params.check_entity(tail)
    params.check_relation(relation)
    h = params.entities[head].astype(np.float64)
    t = params.entities[tail].astype(np.float64)
    r = params.relations[relation].astype(np.float64)
    return float(score_rows(h, r, t, params.num_block_pairs))


def score_all_tails(params: AnalogyParams, head: int, relation: int) -> np.ndarray:
    """Scores of (head, relation, e) for every entity e, as one float64 vector."""
    params.check_entity(head)
    params.check_relation(relation)
    h = params.entities[head].astype(np.float64)
    r = params.relations[relation].astype(np.float64)
    u = apply_relation_transpose(r, h, params.num_block_pairs)
    return params.entities.astype(np.float64) @ u


def score_all_heads(params: AnalogyParams, relation: int, tail: int) -> np.ndarray:
    """Scores of (e, relation, tail) for every entity e, as one float64 vector."""
    params.check_entity(tail)
    params.check_relation(relation)
    t = params.entities[tail].astype(np.float64)
    r = params.relations[relation].astype(np.float64)
    w = apply_relation(r, t, params.num_block_pairs)
    return params.entities.astype(np.float64) @ w


def score_gradients(
    params: AnalogyParams, triple: Triple, label: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of the logistic loss on one labeled triple.

    Returns (d loss / d v_h, d loss / d v_t, d loss / d w_r) as float64 rows;
    every other parameter row has zero gradient. When head == tail the two
    entity slices must be summed by the caller.
    """
    if label not in (1, -1):
        raise ValidationError(f"label must be +1 or -1, got {label}")
    params.check_entity(triple.head)
    params.check_entity(triple.tail)
    params.check_relation(triple.relation)
    m = params.num_block_pairs
    h = params.entities[triple.head].astype(np.float64)
    t = params.entities[triple.tail].astype(np.float64)
    r = params.relations[triple.relation].astype(np.float64)
    phi = float(score_rows(h, r, t, m))
    coef = -label * float(_sigmoid(-label * phi))
    grad_h = coef * apply_relation(r, t, m)
    grad_t = coef * apply_relation_transpose(r, h, m)
    grad_r = coef * relation_gradient(h, t, m)
    return grad_h, grad_t, grad_r


def materialize_relation(params: AnalogyParams, relation: int) -> np.ndarray:
    """Dense d x d matrix of one relation operator (testing aid)."""
    params.check_relation(relation)
    d, m = params.dim, params.num_block_pairs
    r = params.relations[relation].astype(np.float64)
    mat = np.zeros((d, d), dtype=np.float64)
    for i in range(m):
        a, b = r[2 * i], r[2 * i + 1]
        mat[2 * i, 2 * i] = a
        mat[2 * i, 2 * i + 1] = -b
        mat[2 * i + 1, 2 * i] = b
        mat[2 * i + 1, 2 * i + 1] = a
    for j in range(2 * m, d):
        mat[j, j] = r[j]
    return mat


# ----------------------------------------------------------------------
# Checkpoints: magic, version, shape header, then the four arrays as
# little-endian float32 in row-major order.
# ----------------------------------------------------------------------

_HEADER = struct.Struct("<4sIIIII")


def save_params(params: AnalogyParams, path: str | Path) -> None:
    header = _HEADER.pack(
        CHECKPOINT_MAGIC,
        CHECKPOINT_VERSION,
        params.dim,
        params.num_block_pairs,
        params.num_entities,
        params.num_relations,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in (params.entities, params.relations, params.entity_accum, params.relation_accum):
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_params(path: str | Path) -> AnalogyParams:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated checkpoint")
    magic, version, dim, m, n_e, n_r = _HEADER.unpack_from(raw, 0)
    if magic != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a parameter checkpoint (bad magic)")
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    _validate_shape(dim, m)
    counts = (n_e, n_r, n_e, n_r)
    expected = _HEADER.size + sum(c * dim * 4 for c in counts)
    if len(raw) != expected:
        raise FormatError(f"{path}: checkpoint size mismatch (corrupt file)")
    offset = _HEADER.size
    arrays = []
    for count in counts:
        n_bytes = count * dim * 4
        arr = np.frombuffer(raw, dtype="<f4", count=count * dim, offset=offset)
        arrays.append(arr.reshape(count, dim).astype(PARAM_DTYPE))
        offset += n_bytes
    return AnalogyParams(
        dim=dim,
        num_block_pairs=m,
        entities=arrays[0],
        relations=arrays[1],
        entity_accum=arrays[2],
        relation_accum=arrays[3],
    )
