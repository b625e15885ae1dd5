"""Robustness evaluation: background gap, localization, co-occurrence reliance.

The background gap is the accuracy difference between a background-correlated
test set and a de-correlated one (positive means the model leans on the
background). Co-occurrence reliance is measured by erasing present classes
and watching another class's score drop: the average-case drop erases one
random other class, the worst case erases the other class that hurts most,
so the worst-case value dominates the average on every sample set. Lower is
better for both.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EmptyTestSet, NoCooccurrence
from .nn import PointRegressionNet, sigmoid
from .scenes import SceneArrays
from .train import forward_in_batches, localization_accuracy


@dataclass(frozen=True)
class RobustnessReport:
    accuracy_correlated: float
    accuracy_decorrelated: float
    bg_gap: float
    localization_accuracy: float
    mean_ap: float | None = None
    v_avg: float | None = None
    v_min: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def classification_accuracy(scores: np.ndarray, labels: np.ndarray) -> float:
    if labels.ndim == 1:
        return float((scores.argmax(axis=1) == labels).mean())
    return mean_average_precision(scores, labels)


def mean_average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """Class-averaged average precision for multi-label scores."""
    aps = []
    for c in range(scores.shape[1]):
        y = labels[:, c].astype(bool)
        if not y.any():
            continue
        order = np.argsort(-scores[:, c], kind="stable")
        hits = y[order]
        cum = np.cumsum(hits)
        precision = cum / np.arange(1, len(hits) + 1)
        aps.append(precision[hits].mean())
    return float(np.mean(aps))


def evaluate_robustness(
    model: PointRegressionNet,
    test_corr: SceneArrays,
    test_decorr: SceneArrays,
    v_set: SceneArrays | None = None,
    v_seed: int = 0,
) -> RobustnessReport:
    """Accuracies on both test sets, their gap, and localization accuracy.

    Localization is measured on the de-correlated set. In multi-label mode
    the accuracy fields hold mean average precision, and a `v_set` with
    stored backgrounds adds the class-erasure reliance scores.
    """
    if len(test_corr) == 0 or len(test_decorr) == 0:
        raise EmptyTestSet("both test sets must be non-empty")
    scores_corr, _ = forward_in_batches(model, test_corr.images)
    scores_dec, points_dec = forward_in_batches(model, test_decorr.images)
    acc_corr = classification_accuracy(scores_corr, test_corr.labels)
    acc_dec = classification_accuracy(scores_dec, test_decorr.labels)
    multi = test_corr.labels.ndim == 2
    v_avg = v_min = None
    if v_set is not None:
        v_avg, v_min = v_metrics(model, v_set, rng_seed=v_seed)
    return RobustnessReport(
        accuracy_correlated=acc_corr,
        accuracy_decorrelated=acc_dec,
        bg_gap=acc_corr - acc_dec,
        localization_accuracy=localization_accuracy(points_dec, test_decorr),
        mean_ap=acc_dec if multi else None,
        v_avg=v_avg,
        v_min=v_min,
    )


def _erase_region(images: np.ndarray, backgrounds: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Fill each image's box region with its stored background texture."""
    out = images.copy()
    size = images.shape[1]
    for i in range(images.shape[0]):
        x0, y0, x1, y1 = boxes[i]
        c0, r0 = int(np.floor(x0 * size)), int(np.floor(y0 * size))
        c1, r1 = int(np.ceil(x1 * size)), int(np.ceil(y1 * size))
        out[i, r0:r1, c0:c1, :] = backgrounds[i, r0:r1, c0:c1, :]
    return out


def v_metrics(
    model: PointRegressionNet, eval_set: SceneArrays, rng_seed: int = 0
) -> tuple[float, float]:
    """(average-case, worst-case) score drop from erasing co-occurring classes.

    For each sample and present class c, the drop is sigmoid-score(c) on the
    intact image minus the score after erasing another present class o; the
    average case picks o at random (seeded), the worst case maximizes the
    drop. Requires at least two present classes per sample and stored
    backgrounds for erasure.
    """
    if eval_set.backgrounds is None:
        raise ValueError("v_metrics needs an eval set materialized with backgrounds")
    labels = eval_set.labels
    if labels.ndim != 2:
        raise NoCooccurrence("v_metrics requires multi-label samples")
    present_counts = (labels > 0).sum(axis=1)
    if (present_counts < 2).any():
        bad = int(np.argmax(present_counts < 2))
        raise NoCooccurrence(f"sample {bad} has fewer than two classes")
    base_scores, _ = forward_in_batches(model, eval_set.images)
    base = sigmoid(base_scores)

    # score every (sample, erased class) variant in one batched pass
    variants = []
    variant_of: dict[tuple[int, int], int] = {}
    for i in range(len(eval_set)):
        for o in np.nonzero(labels[i] > 0)[0]:
            variant_of[(i, int(o))] = len(variants)
            variants.append(
                _erase_region(
                    eval_set.images[i : i + 1],
                    eval_set.backgrounds[i : i + 1],
                    eval_set.boxes[i : i + 1, int(o)],
                )[0]
            )
    erased_scores, _ = forward_in_batches(model, np.stack(variants))
    erased = sigmoid(erased_scores)

    rng = np.random.Generator(np.random.Philox(key=np.array([rng_seed, 0xE7A5], dtype=np.uint64)))
    avg_drops, min_drops = [], []
    for i in range(len(eval_set)):
        classes = [int(c) for c in np.nonzero(labels[i] > 0)[0]]
        for c in classes:
            others = [o for o in classes if o != c]
            drops = [base[i, c] - erased[variant_of[(i, o)], c] for o in others]
            avg_drops.append(drops[rng.integers(len(drops))])
            min_drops.append(max(drops))
    return float(np.mean(avg_drops)), float(np.mean(min_drops))
