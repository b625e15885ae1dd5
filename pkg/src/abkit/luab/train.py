"""Training loop for the multi-task point-regression objective.

Single-threaded and bitwise deterministic for a given seed: batch order comes
from a Philox stream keyed by (seed, epoch), parameters from a stream keyed
by (seed, init tag), and the random-point baseline's targets from a stream
keyed by (seed, baseline tag), drawn once per sample and fixed for every
epoch.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import DivergedTraining
from .losses import luab_loss
from .nn import ModelSpec, PointRegressionNet, SGD
from .scenes import SceneArrays, SceneData

SUPERVISION_MODES = ("byproduct", "random-point", "none")

_INIT_TAG = 0x1A17
_SHUFFLE_TAG = 0x5F07
_RANDOM_POINT_TAG = 0xBA5E


@dataclass(frozen=True)
class TrainConfig:
    """Objective weights, supervision source, and optimization settings."""

    weight: float = 10.0  # regression term weight; 0 disables point supervision
    beta: float = 1.0
    regression: str = "smooth_l1"  # smooth_l1 | mse
    supervision: str = "byproduct"  # byproduct | random-point | none
    epochs: int = 18
    batch_size: int = 128
    lr: float = 0.05
    momentum: float = 0.9
    seed: int = 0
    label_mode: str = "single"
    pooling: str = "gap"  # gap | attentive
    bandwidth: float = 0.15
    dim: int = 24
    patch: int = 4

    def __post_init__(self) -> None:
        if self.weight < 0:
            raise ValueError("weight must be >= 0")
        if self.supervision not in SUPERVISION_MODES:
            raise ValueError(f"supervision must be one of {SUPERVISION_MODES}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    model: PointRegressionNet
    config: TrainConfig
    curves: dict[str, list[float]]


def _stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, tag], dtype=np.uint64)))


def supervision_points(arrays: SceneArrays, cfg: TrainConfig) -> np.ndarray:
    """Regression targets per the configured supervision source."""
    shape = arrays.points.shape
    if cfg.supervision == "none" or cfg.weight == 0.0:
        return np.full(shape, np.nan)
    if cfg.supervision == "random-point":
        rng = _stream(cfg.seed, _RANDOM_POINT_TAG)
        uniform = rng.random(shape)
        # keep absent classes absent in multi-label mode
        return np.where(np.isnan(arrays.points), np.nan, uniform)
    return arrays.points.copy()


def localization_accuracy(point_pred: np.ndarray, arrays: SceneArrays) -> float:
    """Fraction of predicted points inside the matching ground-truth box."""
    boxes = arrays.boxes
    if boxes.ndim == 2:  # single-label: (N, 4)
        inside = (
            (point_pred[:, 0] >= boxes[:, 0])
            & (point_pred[:, 0] <= boxes[:, 2])
            & (point_pred[:, 1] >= boxes[:, 1])
            & (point_pred[:, 1] <= boxes[:, 3])
        )
        return float(inside.mean())
    present = ~np.isnan(boxes).any(axis=2)
    inside = (
        (point_pred[..., 0] >= boxes[..., 0])
        & (point_pred[..., 0] <= boxes[..., 2])
        & (point_pred[..., 1] >= boxes[..., 1])
        & (point_pred[..., 1] <= boxes[..., 3])
    )
    return float(inside[present].mean())


def forward_in_batches(model: PointRegressionNet, images: np.ndarray, batch_size: int = 512):
    scores, points = [], []
    for start in range(0, images.shape[0], batch_size):
        s, p = model.forward(images[start : start + batch_size].astype(np.float64))
        scores.append(s)
        points.append(p)
    return np.concatenate(scores), np.concatenate(points)


def train(data: SceneData, cfg: TrainConfig) -> TrainResult:
    """Train on data.train, tracking validation localization per epoch.

    Curves: classification loss and regression loss per epoch (training
    means), validation point-in-box accuracy per epoch.
    """
    arrays = data.train
    spec = ModelSpec(
        image_size=arrays.config.image_size,
        patch=cfg.patch,
        dim=cfg.dim,
        classes=arrays.config.classes,
        label_mode=cfg.label_mode,
        pooling=cfg.pooling,
        bandwidth=cfg.bandwidth,
    )
    model = PointRegressionNet(spec, _stream(cfg.seed, _INIT_TAG))
    optimizer = SGD(model.params, lr=cfg.lr, momentum=cfg.momentum)
    targets = supervision_points(arrays, cfg)
    n = len(arrays)
    shuffle_rng = _stream(cfg.seed, _SHUFFLE_TAG)
    curves: dict[str, list[float]] = {"cls_loss": [], "reg_loss": [], "val_loc_acc": []}
    for _epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        cls_sum = reg_sum = 0.0
        batches = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            x = arrays.images[idx].astype(np.float64)
            y = arrays.labels[idx]
            z = targets[idx]
            model.zero_grad()
            scores, point_pred = model.forward(x, points=z if cfg.pooling == "attentive" else None)
            parts, dscores, dpoints = luab_loss(
                scores,
                point_pred,
                y,
                z,
                weight=cfg.weight,
                beta=cfg.beta,
                regression=cfg.regression,
                label_mode=cfg.label_mode,
            )
            if not np.isfinite(parts.total):
                raise DivergedTraining(f"non-finite loss at epoch {_epoch}")
            model.backward(dscores, dpoints)
            optimizer.step()
            cls_sum += parts.classification
            reg_sum += parts.regression
            batches += 1
        curves["cls_loss"].append(cls_sum / batches)
        curves["reg_loss"].append(reg_sum / batches)
        _, val_points = forward_in_batches(model, data.val.images)
        curves["val_loc_acc"].append(localization_accuracy(val_points, data.val))
    return TrainResult(model=model, config=cfg, curves=curves)
