"""Training objectives with analytic gradients.

All losses operate on embedding batches (N, E) and return the scalar
value together with exact gradients w.r.t. both embedding sets. Softmax
terms use dot products (not cosine) and are stabilized with a per-row
max shift, so values stay finite for any realistic magnitudes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn_core import ShapeError


@dataclass
class LossResult:
    """Scalar loss plus gradients w.r.t. the two embedding arguments.

    For the directed losses grad_anchors/grad_positives match the
    (anchors, positives) arguments; for the composite objectives they are
    the gradients w.r.t. (context_emb, item_emb) in that order.
    """

    value: float
    grad_anchors: np.ndarray
    grad_positives: np.ndarray


def _check_batch(a: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if a.ndim != 2 or p.ndim != 2 or a.shape != p.shape:
        raise ShapeError(f"embedding batches must share shape (N, E); got {a.shape} vs {p.shape}")
    if a.shape[0] < 1:
        raise ShapeError("empty batch")
    if not (np.isfinite(a).all() and np.isfinite(p).all()):
        raise ValueError("non-finite embeddings")
    return a, p


def _row_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def npairs_loss(anchors: np.ndarray, positives: np.ndarray) -> LossResult:
    """Softmax cross-entropy over one positive and N-1 in-batch negatives.

    value = (1/N) sum_i -log( exp(a_i.p_i) / sum_j exp(a_i.p_j) )
    """
    a, p = _check_batch(anchors, positives)
    n = a.shape[0]
    logits = a @ p.T
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    value = -log_probs.diagonal().mean()
    # dL/dlogits = (softmax - I) / N
    g = (_row_softmax(logits) - np.eye(n)) / n
    return LossResult(value=float(value), grad_anchors=g @ p, grad_positives=g.T @ a)


def _check_groups(groups: list, n: int) -> list[np.ndarray]:
    if len(groups) != n:
        raise ValueError(f"groups length {len(groups)} != batch size {n}")
    sets = [frozenset(g) for g in groups]
    for i, s in enumerate(sets):
        if i not in s:
            raise ValueError(f"group {i} does not contain its own index")
        for j in s:
            if not 0 <= j < n:
                raise ValueError(f"group index {j} out of range")
            if sets[j] != s:
                raise ValueError("groups are not consistent equivalence classes")
    return [np.fromiter(sorted(s), dtype=np.intp) for s in sets]


def relaxed_npairs_loss(
    anchors: np.ndarray, positives: np.ndarray, groups: list
) -> LossResult:
    """N-pairs generalization where same-content rows are joint positives.

    groups[i] is the index set of rows sharing row i's content (including
    i). With all-singleton groups this reduces exactly to npairs_loss;
    with a single all-encompassing group the loss is zero.
    """
    a, p = _check_batch(anchors, positives)
    n = a.shape[0]
    idx_sets = _check_groups(groups, n)
    logits = a @ p.T

    member = np.zeros((n, n))
    inv_size = np.empty(n)
    for i, s in enumerate(idx_sets):
        member[i, s] = 1.0
        inv_size[i] = 1.0 / len(s)
    # P'_i as a ratio of shifted-exponential sums; when a group spans the
    # whole batch the numerator and denominator are identical, so the
    # row's loss and gradient vanish exactly
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    den = e.sum(axis=1)
    num = (e * member).sum(axis=1)
    soft = e / den[:, None]
    q = num / den
    value = float(np.mean(-inv_size * np.log(q)))
    # d(-log q_i)/dlogit_ij = soft_ij - member_ij * soft_ij / q_i
    g = (inv_size / n)[:, None] * (soft - member * soft / q[:, None])
    return LossResult(value=value, grad_anchors=g @ p, grad_positives=g.T @ a)


def l2_reg(anchors: np.ndarray, positives: np.ndarray, lam: float) -> LossResult:
    """Embedding-magnitude penalty: lam * sum_i (|a_i|^2 + |p_i|^2)."""
    a, p = _check_batch(anchors, positives)
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    value = lam * float((a * a).sum() + (p * p).sum())
    return LossResult(value=value, grad_anchors=2.0 * lam * a, grad_positives=2.0 * lam * p)


def jcce_objective(
    context_emb: np.ndarray, item_emb: np.ndarray, lam: float
) -> LossResult:
    """Two-way N-pairs loss plus the magnitude regularizer.

    Both softmax directions are included (items as anchors and contexts
    as anchors); gradients are returned w.r.t. (context_emb, item_emb).
    """
    c, it = _check_batch(context_emb, item_emb)
    fwd = npairs_loss(it, c)  # item anchors, context positives
    rev = npairs_loss(c, it)
    reg = l2_reg(c, it, lam)
    return LossResult(
        value=fwd.value + rev.value + reg.value,
        grad_anchors=fwd.grad_positives + rev.grad_anchors + reg.grad_anchors,
        grad_positives=fwd.grad_anchors + rev.grad_positives + reg.grad_positives,
    )


def rjcce_objective(
    context_emb: np.ndarray, item_emb: np.ndarray, groups: list, lam: float
) -> LossResult:
    """Two-way relaxed N-pairs loss plus the magnitude regularizer.

    The same groups apply in both directions since they are defined by
    content identity.
    """
    c, it = _check_batch(context_emb, item_emb)
    fwd = relaxed_npairs_loss(it, c, groups)
    rev = relaxed_npairs_loss(c, it, groups)
    reg = l2_reg(c, it, lam)
    return LossResult(
        value=fwd.value + rev.value + reg.value,
        grad_anchors=fwd.grad_positives + rev.grad_anchors + reg.grad_anchors,
        grad_positives=fwd.grad_anchors + rev.grad_positives + reg.grad_positives,
    )


def _softplus(z: np.ndarray) -> np.ndarray:
    # log(1 + e^z) without overflow
    return np.logaddexp(0.0, z)


def bpr_loss(
    context_emb: np.ndarray,
    item_emb: np.ndarray,
    negative_index_per_row: np.ndarray,
    lam: float,
) -> LossResult:
    """Pairwise log-sigmoid ranking loss over in-batch negatives.

    value = sum_i -log sigmoid(S(i,i) - S(i,j_i)) + l2_reg, where
    S(x, y) = context_x . item_y and j_i is a batch row whose item is not
    observed with context i.
    """
    c, it = _check_batch(context_emb, item_emb)
    n = c.shape[0]
    neg = np.asarray(negative_index_per_row, dtype=np.intp)
    if neg.shape != (n,):
        raise ShapeError("need one negative index per row")
    if np.any(neg == np.arange(n)):
        raise ValueError("a negative index equals its own positive row")
    if np.any((neg < 0) | (neg >= n)):
        raise ValueError("negative index out of range")

    z = np.einsum("ie,ie->i", c, it) - np.einsum("ie,ie->i", c, it[neg])
    reg = l2_reg(c, it, lam)
    value = float(_softplus(-z).sum()) + reg.value

    # d(-log sigmoid(z_i))/dz_i = -sigmoid(-z_i), computed overflow-free
    dz = -np.exp(-_softplus(z))
    grad_c = dz[:, None] * (it - it[neg]) + reg.grad_anchors
    grad_it = dz[:, None] * c + reg.grad_positives
    np.subtract.at(grad_it, neg, dz[:, None] * c)
    return LossResult(value=value, grad_anchors=grad_c, grad_positives=grad_it)
