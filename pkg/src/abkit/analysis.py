"""Byproduct statistics: localization accuracy, image-agnostic click baselines,
trace-quantile curves, relative-position bias, action-sequence mining, and
recall-versus-size.

All operations are pure and read-only over record streams. Monte-Carlo
operations draw from per-image counter-based generators (Philox keyed by
(seed, image index)), so results are independent of iteration order or any
parallel schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateBox, EmptyInput, InvariantViolation, MissingGroundTruth
from .records import CocoRecord, ImageNetRecord, ProxyPoint, extract_final_click

SIZE_BIN_EDGES = (0.0, 0.2**2, 0.4**2, 0.6**2, 0.8**2, 1.0)

QUANTILE_MODES = ("lastN", "traceQuantile", "timeQuantile")


@dataclass(frozen=True)
class GtBox:
    """Axis-aligned ground-truth box in image-normalized coordinates."""

    image_id: str | int
    box: tuple[float, float, float, float]
    mask_ref: str | None = None

    def __post_init__(self) -> None:
        x0, y0, x1, y1 = self.box
        if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
            raise InvariantViolation("box", f"degenerate or out-of-range box {self.box}")

    def contains(self, x: float, y: float) -> bool:
        """Closed-box test: boundary points count as inside."""
        x0, y0, x1, y1 = self.box
        return x0 <= x <= x1 and y0 <= y <= y1

    def area(self) -> float:
        x0, y0, x1, y1 = self.box
        return (x1 - x0) * (y1 - y0)


BoxGroup = Sequence[GtBox]


def _in_any(boxes: BoxGroup, x: float, y: float) -> bool:
    return any(b.contains(x, y) for b in boxes)


@dataclass(frozen=True)
class SweepConfig:
    """Image-agnostic click sweep: Gaussian widths, samples per image, seed.

    Widths are in units of the image's shorter side; math.inf selects the
    uniform-over-image click distribution.
    """

    sigmas: tuple[float, ...]
    samples_per_image: int = 10_000
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if any(s < 0 for s in self.sigmas):
            raise InvariantViolation("sigmas", "widths must be >= 0")
        if list(self.sigmas) != sorted(self.sigmas):
            raise InvariantViolation("sigmas", "widths must be sorted ascending")


@dataclass(frozen=True)
class QuantileCurve:
    mode: str
    bins: int
    accuracy: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.accuracy) != self.bins:
            raise InvariantViolation("accuracy", "one accuracy value per bin required")


# ---------------------------------------------------------------------------
# Click localization


def click_localization_accuracy(
    pairs: Iterable[tuple[ProxyPoint, GtBox | BoxGroup]],
) -> float:
    """Fraction of proxy points inside (or on the boundary of) their box.

    A pair may carry several instance boxes for the same image; landing in any
    of them counts as correct.
    """
    total = 0
    hits = 0
    for point, boxes in pairs:
        group = (boxes,) if isinstance(boxes, GtBox) else tuple(boxes)
        total += 1
        hits += _in_any(group, point.x, point.y)
    if total == 0:
        raise EmptyInput("no (point, box) pairs")
    return hits / total


def _image_rng(seed: int, image_index: int) -> np.random.Generator:
    key = np.array([seed, image_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def gaussian_click_sweep(
    boxes: Sequence[GtBox | BoxGroup], cfg: SweepConfig
) -> dict[float, float]:
    """Localization accuracy of image-agnostic random clicks per width.

    Clicks are drawn from an isotropic Gaussian at the image centre, clamped
    to the image; width 0 is evaluated exactly (the centre point), width inf
    means uniform over the image. Returns {sigma: accuracy}.
    """
    groups = [(b,) if isinstance(b, GtBox) else tuple(b) for b in boxes]
    if not groups:
        raise EmptyInput("no boxes")
    out: dict[float, float] = {}
    for sigma in cfg.sigmas:
        if sigma == 0.0:
            out[sigma] = sum(_in_any(g, 0.5, 0.5) for g in groups) / len(groups)
            continue
        per_image = np.empty(len(groups))
        for i, group in enumerate(groups):
            rng = _image_rng(cfg.rng_seed, i)
            n = cfg.samples_per_image
            if math.isinf(sigma):
                xy = rng.random((n, 2))
            else:
                xy = 0.5 + sigma * rng.standard_normal((n, 2))
                np.clip(xy, 0.0, 1.0, out=xy)
            inside = np.zeros(n, dtype=bool)
            for b in group:
                x0, y0, x1, y1 = b.box
                inside |= (
                    (xy[:, 0] >= x0) & (xy[:, 0] <= x1) & (xy[:, 1] >= y0) & (xy[:, 1] <= y1)
                )
            per_image[i] = inside.mean()
        out[sigma] = float(per_image.mean())
    return out


# ---------------------------------------------------------------------------
# Mouse-trace accuracy along the approach to the click


def _click_trace(record: ImageNetRecord):
    """Trace from image entry to the final click, click guaranteed last."""
    click = extract_final_click(record)
    if click is None or not record.mouseTracking:
        return None
    click_t = record.selectedRecord[-1].t
    trace = [(p.x, p.y, p.t) for p in record.mouseTracking if p.t <= click_t]
    if not trace:
        return None
    if (trace[-1][0], trace[-1][1]) != (click.x, click.y):
        trace.append((click.x, click.y, click_t))
    return trace


def trace_quantile_accuracy(
    records: Iterable[ImageNetRecord],
    boxes: Mapping[str, GtBox | BoxGroup],
    mode: str,
    bins: int,
) -> QuantileCurve:
    """Localization accuracy of the mouse trace at sampled positions.

    traceQuantile samples each trace at `bins` evenly spaced indices between
    image entry and click; timeQuantile samples at evenly spaced times; lastN
    bin i holds the i-th trace point before the click (bin 0 is the click).
    Accuracy per bin is the fraction of sampled points inside the ground-truth
    box group of the record's image. The final traceQuantile bin is exactly
    the click, so it matches click_localization_accuracy by construction.
    """
    if mode not in QUANTILE_MODES:
        raise ValueError(f"mode must be one of {QUANTILE_MODES}")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    hits = np.zeros(bins)
    totals = np.zeros(bins)
    seen = 0
    for record in records:
        trace = _click_trace(record)
        if trace is None:
            continue
        if record.image_id not in boxes:
            raise MissingGroundTruth(f"no boxes for image {record.image_id!r}")
        group = boxes[record.image_id]
        group = (group,) if isinstance(group, GtBox) else tuple(group)
        seen += 1
        length = len(trace)
        for i in range(bins):
            if mode == "lastN":
                if i >= length:
                    continue
                x, y, _ = trace[length - 1 - i]
            elif mode == "traceQuantile":
                q = 1.0 if bins == 1 else i / (bins - 1)
                x, y, _ = trace[round(q * (length - 1))]
            else:  # timeQuantile
                q = 1.0 if bins == 1 else i / (bins - 1)
                target = trace[0][2] + q * (trace[-1][2] - trace[0][2])
                idx = max(j for j in range(length) if trace[j][2] <= target)
                x, y, _ = trace[idx]
            totals[i] += 1
            hits[i] += _in_any(group, x, y)
    if seen == 0:
        raise EmptyInput("no selected records with mouse traces")
    with np.errstate(invalid="ignore"):
        acc = np.where(totals > 0, hits / np.maximum(totals, 1), 0.0)
    return QuantileCurve(mode=mode, bins=bins, accuracy=tuple(float(a) for a in acc))


# ---------------------------------------------------------------------------
# Relative click position inside the box frame


def relative_click_histogram(
    points: Sequence[ProxyPoint], boxes: Sequence[GtBox], grid_bins: int
) -> np.ndarray:
    """2-D histogram of clicks in box-normalized coordinates.

    Returns a (grid_bins + 2) sq. integer array: the inner grid covers the box
    frame [0, 1]^2 (rows are y, columns are x), the outermost ring collects
    out-of-box clicks clamped by overflow direction. Total mass equals the
    number of points.
    """
    if len(points) != len(boxes):
        raise ValueError("points and boxes must be parallel")
    if len(points) == 0:
        raise EmptyInput("no points")
    hist = np.zeros((grid_bins + 2, grid_bins + 2), dtype=np.int64)
    for point, gt in zip(points, boxes):
        x0, y0, x1, y1 = gt.box
        if (x1 - x0) * (y1 - y0) <= 0:
            raise DegenerateBox(f"zero-area box for image {gt.image_id!r}")
        u = (point.x - x0) / (x1 - x0)
        v = (point.y - y0) / (y1 - y0)
        hist[_ring_index(v, grid_bins), _ring_index(u, grid_bins)] += 1
    return hist


def _ring_index(u: float, grid_bins: int) -> int:
    if u < 0.0:
        return 0
    if u > 1.0:
        return grid_bins + 1
    return 1 + min(int(u * grid_bins), grid_bins - 1)


# ---------------------------------------------------------------------------
# Tagging-interface statistics


def action_sequence_histogram(records: Iterable[CocoRecord]) -> dict[str, int]:
    """Count per-category action-type sequences for icons live at the end.

    Keys look like "add" or "add-move"; the counts sum to the number of live
    icons across all records.
    """
    counts: dict[str, int] = {}
    for record in records:
        seqs: dict[str, list[str]] = {}
        live: set[str] = set()
        for act in record.actionHistories:
            seqs.setdefault(act.category, []).append(act.action)
            if act.action == "add":
                live.add(act.category)
            elif act.action == "remove":
                live.discard(act.category)
        for category in live:
            key = "-".join(seqs[category])
            counts[key] = counts.get(key, 0) + 1
    return counts


def size_bin(area_fraction: float) -> int:
    """Bin index of a box-area fraction on the fixed square-root-spaced edges."""
    for i in range(len(SIZE_BIN_EDGES) - 1):
        if area_fraction <= SIZE_BIN_EDGES[i + 1]:
            return i
    return len(SIZE_BIN_EDGES) - 2


def recall_by_category_and_size(
    records: Iterable[CocoRecord],
    gt: Mapping[int, Mapping[str, BoxGroup]],
) -> dict[str, tuple[float, float]]:
    """Per-category (recall, mean size bin) over annotated images.

    Recall is the fraction of record'd images containing the category where
    the annotator left a live icon for it; sizes are instance box areas binned
    on SIZE_BIN_EDGES and averaged per category.
    """
    present: dict[str, int] = {}
    recalled: dict[str, int] = {}
    bins: dict[str, list[int]] = {}
    seen = 0
    for record in records:
        if record.image_id not in gt:
            raise MissingGroundTruth(f"no ground truth for image {record.image_id}")
        seen += 1
        image_gt = gt[record.image_id]
        live = _live_categories(record)
        for category, boxes in image_gt.items():
            present[category] = present.get(category, 0) + 1
            recalled[category] = recalled.get(category, 0) + (category in live)
            bins.setdefault(category, []).extend(size_bin(b.area()) for b in boxes)
    if seen == 0:
        raise EmptyInput("no records")
    return {
        c: (recalled[c] / present[c], float(np.mean(bins[c])) if bins[c] else 0.0)
        for c in sorted(present)
    }


def _live_categories(record: CocoRecord) -> set[str]:
    live: set[str] = set()
    for act in record.actionHistories:
        if act.action == "add":
            live.add(act.category)
        elif act.action == "remove":
            live.discard(act.category)
    return live
