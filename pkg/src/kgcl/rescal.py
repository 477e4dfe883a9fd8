"""Tensor-factorization baseline: X_k ~ A R_k A^T per relation slice.

Kept deliberately small: dense tensors, full-gradient descent, intended for
demos and tests with at most a few dozen entities. The block-structured
model in `model.py` is the production path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, IntegrityError


@dataclass
class RescalFactors:
    """Binary relation tensor and its low-rank factorization state."""

    tensor: np.ndarray  # (n, n, K), entries in {0, 1}
    factor: np.ndarray  # (n, rank)
    relation_mats: np.ndarray  # (K, rank, rank)
    reg_weight: float

    def __post_init__(self) -> None:
        if self.tensor.ndim != 3 or self.tensor.shape[0] != self.tensor.shape[1]:
            raise ConfigError(f"tensor must be (n, n, K), got {self.tensor.shape}")
        if not np.isin(self.tensor, (0, 1)).all():
            raise IntegrityError("tensor entries must be 0 or 1")
        n, _, k = self.tensor.shape
        rank = self.factor.shape[1]
        if self.factor.shape != (n, rank):
            raise ConfigError(f"factor must be ({n}, rank), got {self.factor.shape}")
        if self.relation_mats.shape != (k, rank, rank):
            raise ConfigError(
                f"relation matrices must be ({k}, {rank}, {rank}), got {self.relation_mats.shape}"
            )
        if self.reg_weight < 0:
            raise ConfigError("regularization weight must be non-negative")


def init_rescal(tensor: np.ndarray, rank: int, reg_weight: float = 0.1, seed: int = 0) -> RescalFactors:
    rng = np.random.default_rng(seed)
    n, _, k = tensor.shape
    return RescalFactors(
        tensor=np.asarray(tensor, dtype=np.float64),
        factor=rng.uniform(-0.5, 0.5, size=(n, rank)),
        relation_mats=rng.uniform(-0.5, 0.5, size=(k, rank, rank)),
        reg_weight=reg_weight,
    )


def _residuals(factors: RescalFactors) -> np.ndarray:
    a = factors.factor
    recon = np.einsum("ip,kpq,jq->ijk", a, factors.relation_mats, a)
    return factors.tensor - recon


def rescal_loss(factors: RescalFactors) -> float:
    """Half the reconstruction error plus half the Frobenius penalties."""
    err = _residuals(factors)
    lam = factors.reg_weight
    reg = lam * (np.sum(factors.factor**2) + np.sum(factors.relation_mats**2))
    return 0.5 * float(np.sum(err**2) + reg)


def rescal_step(factors: RescalFactors, learning_rate: float) -> RescalFactors:
    """One full-gradient descent update on both factor matrices."""
    if learning_rate <= 0:
        raise ConfigError("learning rate must be positive")
    a = factors.factor
    lam = factors.reg_weight
    err = _residuals(factors)  # (n, n, K)
    # d/dA of 0.5*sum_k ||X_k - A R_k A^T||^2 = -sum_k (E_k A R_k^T + E_k^T A R_k)
    grad_a = -(
        np.einsum("ijk,jq,kpq->ip", err, a, factors.relation_mats)
        + np.einsum("jik,jq,kqp->ip", err, a, factors.relation_mats)
    ) + lam * a
    grad_r = -np.einsum("ip,ijk,jq->kpq", a, err, a) + lam * factors.relation_mats
    return RescalFactors(
        tensor=factors.tensor,
        factor=a - learning_rate * grad_a,
        relation_mats=factors.relation_mats - learning_rate * grad_r,
        reg_weight=lam,
    )


def triples_to_tensor(num_entities: int, num_relations: int, triples) -> np.ndarray:
    """Dense binary tensor with X[h, t, r] = 1 for each (h, r, t)."""
    x = np.zeros((num_entities, num_entities, num_relations), dtype=np.float64)
    for t in triples:
        x[t.head, t.tail, t.relation] = 1.0
    return x
