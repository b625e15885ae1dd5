"""Multi-task objective: classification plus weighted coordinate regression.

The regression penalty is the smooth-l1 (Huber) loss, quadratic below the
transition width and linear above it, summed over the two coordinates; a
mean-squared variant is available for ablations. Missing supervision points
(NaN) contribute zero to the regression term. For multi-label batches the
per-sample regression term is the mean of per-present-class losses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonPositiveBeta, ShapeMismatch


def smooth_l1(u, beta: float):
    """Smooth-l1 of a residual 2-vector: (scalar loss, gradient wrt u).

    Per coordinate: 0.5 d^2 / beta for |d| < beta, |d| - 0.5 beta otherwise;
    the coordinates are summed. The gradient is d / beta inside the quadratic
    zone and sign(d) outside.
    """
    if beta <= 0:
        raise NonPositiveBeta(f"beta {beta} must be > 0")
    d = np.asarray(u, dtype=np.float64)
    inner = np.abs(d) < beta
    loss = np.where(inner, 0.5 * d * d / beta, np.abs(d) - 0.5 * beta)
    grad = np.where(inner, d / beta, np.sign(d))
    return float(loss.sum()), grad


def _smooth_l1_elementwise(d: np.ndarray, beta: float):
    inner = np.abs(d) < beta
    loss = np.where(inner, 0.5 * d * d / beta, np.abs(d) - 0.5 * beta)
    grad = np.where(inner, d / beta, np.sign(d))
    return loss, grad


def _mse_elementwise(d: np.ndarray, _beta: float):
    return d * d, 2.0 * d


_REGRESSION = {"smooth_l1": _smooth_l1_elementwise, "mse": _mse_elementwise}


def softmax_cross_entropy(scores: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch; returns (loss, dscores)."""
    n = scores.shape[0]
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    loss = -np.log(probs[np.arange(n), labels] + 1e-300).mean()
    dscores = probs.copy()
    dscores[np.arange(n), labels] -= 1.0
    return float(loss), dscores / n


def binary_cross_entropy(scores: np.ndarray, labels: np.ndarray):
    """Mean sigmoid BCE over batch and classes; returns (loss, dscores)."""
    z = scores
    y = labels.astype(np.float64)
    # log(1 + exp(-|z|)) form avoids overflow
    loss = np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))
    p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
    dscores = (p - y) / z.size
    return float(loss.mean()), dscores


@dataclass(frozen=True)
class LossParts:
    """total = classification + weight * regression, computed exactly that way."""

    total: float
    classification: float
    regression: float


def luab_loss(scores, point_pred, labels, points, *, weight: float, beta: float = 1.0,
              regression: str = "smooth_l1", label_mode: str = "single"):
    """Combined objective and its gradients.

    Returns (LossParts, dscores, dpoint_pred). `points` may contain NaN rows
    (or NaN per-class rows in multi-label mode); those samples contribute
    nothing to the regression term. The regression term is averaged over the
    full batch so the decomposition total = classification + weight *
    regression holds exactly.
    """
    if beta <= 0:
        raise NonPositiveBeta(f"beta {beta} must be > 0")
    if regression not in _REGRESSION:
        raise ValueError(f"regression must be one of {sorted(_REGRESSION)}")
    scores = np.asarray(scores, dtype=np.float64)
    point_pred = np.asarray(point_pred, dtype=np.float64)
    labels = np.asarray(labels)
    points = np.asarray(points, dtype=np.float64)
    n = scores.shape[0]
    elementwise = _REGRESSION[regression]

    if label_mode == "single":
        if labels.shape != (n,):
            raise ShapeMismatch(f"labels {labels.shape} for {n} samples")
        if point_pred.shape != (n, 2) or points.shape != (n, 2):
            raise ShapeMismatch(
                f"point_pred {point_pred.shape} / points {points.shape}, expected ({n}, 2)"
            )
        cls_loss, dscores = softmax_cross_entropy(scores, labels)
        has_z = ~np.isnan(points).any(axis=1)
        d = np.where(has_z[:, None], point_pred - np.nan_to_num(points), 0.0)
        loss_el, grad_el = elementwise(d, beta)
        loss_el = np.where(has_z[:, None], loss_el, 0.0)
        grad_el = np.where(has_z[:, None], grad_el, 0.0)
        reg_loss = float(loss_el.sum(axis=1).mean())
        dpoints = weight * grad_el / n
    else:
        if labels.shape != (n, scores.shape[1]):
            raise ShapeMismatch(f"labels {labels.shape} vs scores {scores.shape}")
        k = scores.shape[1]
        if point_pred.shape != (n, k, 2) or points.shape != (n, k, 2):
            raise ShapeMismatch(
                f"point_pred {point_pred.shape} / points {points.shape}, expected ({n}, {k}, 2)"
            )
        cls_loss, dscores = binary_cross_entropy(scores, labels)
        has_z = (labels > 0) & ~np.isnan(points).any(axis=2)
        d = np.where(has_z[..., None], point_pred - np.nan_to_num(points), 0.0)
        loss_el, grad_el = elementwise(d, beta)
        per_class = loss_el.sum(axis=2)  # coordinates summed
        counts = has_z.sum(axis=1)
        safe = np.maximum(counts, 1)
        per_sample = np.where(counts > 0, per_class.sum(axis=1) / safe, 0.0)
        reg_loss = float(per_sample.mean())
        dpoints = weight * grad_el / (safe[:, None, None] * n)
        dpoints = np.where(has_z[..., None], dpoints, 0.0)
    total = cls_loss + weight * reg_loss
    return LossParts(total, cls_loss, reg_loss), dscores, dpoints
