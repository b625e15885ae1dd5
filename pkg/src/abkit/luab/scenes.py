"""Synthetic scenes with spurious background correlations.

Each scene is a small RGB image containing one textured foreground shape per
class (two for multi-label scenes) over a class-correlated background. The
foreground carries the class signal (outline geometry plus an
orientation-tuned interior grating); the background is a flat colour field
whose kind matches the class-paired kind with probability rho, making it an
easy shortcut feature. Ground truth records the shape centroid and bounding
box so point supervision and erasure regions are exact.

Generation is counter-based: sample i of a dataset draws from a Philox stream
keyed by (seed, i), so materialization order and parallel schedule do not
affect the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Kept close together on purpose: with the per-sample colour jitter the kinds
# overlap slightly, so the background alone cannot explain the labels and the
# classifier keeps some pressure toward foreground features.
BG_PALETTE = np.array(
    [
        [0.46, 0.26, 0.26],
        [0.26, 0.44, 0.26],
        [0.26, 0.28, 0.46],
        [0.44, 0.41, 0.23],
        [0.41, 0.24, 0.44],
        [0.23, 0.41, 0.41],
        [0.37, 0.32, 0.27],
        [0.29, 0.32, 0.37],
    ]
)

LAYOUTS = ("center-biased", "uniform")


def _shape_mask(kind: int, size: int, cx: float, cy: float, s: float) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    dx = xx - cx
    dy = yy - cy
    if kind == 0:  # disk
        return dx * dx + dy * dy <= s * s
    if kind == 1:  # square
        return (np.abs(dx) <= 0.9 * s) & (np.abs(dy) <= 0.9 * s)
    if kind == 2:  # diamond
        return np.abs(dx) + np.abs(dy) <= 1.2 * s
    if kind == 3:  # ring
        r2 = dx * dx + dy * dy
        return (r2 <= s * s) & (r2 >= 0.3 * s * s)
    if kind == 4:  # plus
        return ((np.abs(dx) <= 0.38 * s) & (np.abs(dy) <= s)) | (
            (np.abs(dy) <= 0.38 * s) & (np.abs(dx) <= s)
        )
    if kind == 5:  # diagonal cross
        u = (dx + dy) / np.sqrt(2.0)
        v = (dx - dy) / np.sqrt(2.0)
        return ((np.abs(u) <= 0.38 * s) & (np.abs(v) <= s)) | (
            (np.abs(v) <= 0.38 * s) & (np.abs(u) <= s)
        )
    if kind == 6:  # upward triangle
        return (np.abs(dy) <= s) & (np.abs(dx) <= (dy + s) / 2.0)
    # two horizontal bars
    return (np.abs(dx) <= s) & (
        ((dy >= -s) & (dy <= -0.3 * s)) | ((dy >= 0.3 * s) & (dy <= s))
    )


# Per-class foreground tints; classes also differ by outline and grating.
FG_TINTS = np.array(
    [
        [1.00, 0.72, 0.72],
        [0.72, 1.00, 0.72],
        [0.72, 0.72, 1.00],
        [1.00, 1.00, 0.68],
        [1.00, 0.68, 1.00],
        [0.68, 1.00, 1.00],
        [1.00, 0.86, 0.62],
        [0.88, 0.88, 0.88],
    ]
)


def _foreground_texture(kind: int, size: int, rng: np.random.Generator) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    theta = np.pi * (kind % 4) / 4.0  # four well-separated orientations
    freq = 0.15 if kind < 4 else 0.45  # two frequency bands
    phase = rng.uniform(0, 2 * np.pi)
    grating = 0.5 + 0.5 * np.cos(2 * np.pi * freq * (xx * np.cos(theta) + yy * np.sin(theta)) + phase)
    luminance = 0.70 + 0.30 * grating  # bright, always above the background ceiling
    return luminance[..., None] * FG_TINTS[kind % len(FG_TINTS)][None, None, :]


@dataclass(frozen=True)
class SceneSample:
    """One generated scene; multi-label fields are stacked per class with NaN padding."""

    image: np.ndarray  # (H, W, 3) float32 in [0, 1]
    label: int | np.ndarray
    point: np.ndarray  # (2,) or (K, 2); normalized centroid(s), NaN when absent
    box: np.ndarray  # (4,) or (K, 4); normalized (x0, y0, x1, y1), NaN when absent
    bg_kind: int
    correlated: bool
    background: np.ndarray | None = None


@dataclass(frozen=True)
class SceneConfig:
    classes: int = 8
    bg_kinds: int = 8
    image_size: int = 32
    rho: float = 0.95
    layout: str = "uniform"
    label_mode: str = "single"
    cooccurrence: float = 0.9
    noise: float = 0.08

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho {self.rho} outside [0, 1]")
        if self.layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {LAYOUTS}")
        if self.bg_kinds > len(BG_PALETTE):
            raise ValueError(f"at most {len(BG_PALETTE)} background kinds supported")


def _draw_background(cfg: SceneConfig, bg_kind: int, rng) -> np.ndarray:
    size = cfg.image_size
    # per-sample colour jitter survives pooling; per-pixel noise does not
    base = BG_PALETTE[bg_kind] + rng.uniform(-0.12, 0.12, size=3)
    img = base[None, None, :] + rng.uniform(-cfg.noise, cfg.noise, size=(size, size, 3))
    return np.clip(img, 0.0, 0.62)


def _paint_shape(img: np.ndarray, cls: int, cx: float, cy: float, s: float, rng):
    """Draw class `cls` at (cx, cy); returns (point, box) normalized."""
    size = img.shape[0]
    mask = _shape_mask(cls, size, cx, cy, s)
    texture = _foreground_texture(cls, size, rng)
    img[mask] = texture[mask]
    ys, xs = np.nonzero(mask)
    point = np.array([(xs.mean() + 0.5) / size, (ys.mean() + 0.5) / size])
    box = np.array(
        [xs.min() / size, ys.min() / size, (xs.max() + 1) / size, (ys.max() + 1) / size]
    )
    return point, box


def _place(rng, cfg: SceneConfig, s: float, x_range=None, y_range=None) -> tuple[float, float]:
    size = cfg.image_size
    lo, hi = s + 1.0, size - s - 2.0
    xlo, xhi = (max(lo, x_range[0]), min(hi, x_range[1])) if x_range else (lo, hi)
    ylo, yhi = (max(lo, y_range[0]), min(hi, y_range[1])) if y_range else (lo, hi)
    if cfg.layout == "center-biased":
        cx = np.clip(size / 2.0 + 0.12 * size * rng.standard_normal(), xlo, xhi)
        cy = np.clip(size / 2.0 + 0.12 * size * rng.standard_normal(), ylo, yhi)
    else:
        cx = rng.uniform(xlo, xhi)
        cy = rng.uniform(ylo, yhi)
    return float(cx), float(cy)


def generate_scene(
    rng: np.random.Generator,
    rho: float | None = None,
    layout: str | None = None,
    *,
    config: SceneConfig = SceneConfig(),
    include_background: bool = False,
) -> SceneSample:
    """Draw one scene; rho/layout override the config when given."""
    cfg = config
    if rho is not None or layout is not None:
        cfg = SceneConfig(
            classes=config.classes,
            bg_kinds=config.bg_kinds,
            image_size=config.image_size,
            rho=config.rho if rho is None else rho,
            layout=config.layout if layout is None else layout,
            label_mode=config.label_mode,
            cooccurrence=config.cooccurrence,
            noise=config.noise,
        )
    if cfg.label_mode == "single":
        return _single_scene(rng, cfg, include_background)
    return _multi_scene(rng, cfg, include_background)


def _pick_bg_kind(rng, cfg: SceneConfig, paired: int) -> int:
    if rng.random() < cfg.rho:
        return paired
    others = [b for b in range(cfg.bg_kinds) if b != paired]
    return int(others[rng.integers(len(others))])


def _single_scene(rng, cfg: SceneConfig, include_background: bool) -> SceneSample:
    cls = int(rng.integers(cfg.classes))
    bg_kind = _pick_bg_kind(rng, cfg, cls % cfg.bg_kinds)
    background = _draw_background(cfg, bg_kind, rng)
    img = background.copy()
    s = rng.uniform(0.16, 0.25) * cfg.image_size
    cx, cy = _place(rng, cfg, s)
    point, box = _paint_shape(img, cls, cx, cy, s, rng)
    return SceneSample(
        image=img.astype(np.float32),
        label=cls,
        point=point,
        box=box,
        bg_kind=bg_kind,
        correlated=bg_kind == cls % cfg.bg_kinds,
        background=background.astype(np.float32) if include_background else None,
    )


def _multi_scene(rng, cfg: SceneConfig, include_background: bool) -> SceneSample:
    k = cfg.classes
    first = int(rng.integers(k))
    partner = first ^ 1
    if partner >= k or rng.random() >= cfg.cooccurrence:
        others = [c for c in range(k) if c != first and c != (first ^ 1)]
        partner = int(others[rng.integers(len(others))])
    classes = [first, partner]
    if rng.random() < 0.35:  # a third class so worst-case and average erasure differ
        rest = [c for c in range(k) if c not in classes]
        classes.append(int(rest[rng.integers(len(rest))]))
    bg_kind = int(rng.integers(cfg.bg_kinds))
    background = _draw_background(cfg, bg_kind, rng)
    img = background.copy()
    size = cfg.image_size
    label = np.zeros(k, dtype=np.int8)
    points = np.full((k, 2), np.nan)
    boxes = np.full((k, 4), np.nan)
    # one shape per quadrant keeps per-class boxes disjoint for clean erasure
    quadrants = [(0, 0), (0, 1), (1, 0), (1, 1)]
    slots = rng.permutation(4)[: len(classes)]
    half = size / 2.0
    for cls, slot in zip(classes, slots):
        qx, qy = quadrants[int(slot)]
        s = rng.uniform(0.11, 0.14) * size
        margin = 1.25 * s + 1.0
        x_range = (qx * half + margin, (qx + 1) * half - margin)
        y_range = (qy * half + margin, (qy + 1) * half - margin)
        cx, cy = _place(rng, cfg, s, x_range=x_range, y_range=y_range)
        point, box = _paint_shape(img, cls, cx, cy, s, rng)
        label[cls] = 1
        points[cls] = point
        boxes[cls] = box
    return SceneSample(
        image=img.astype(np.float32),
        label=label,
        point=points,
        box=boxes,
        bg_kind=bg_kind,
        correlated=partner == (first ^ 1),
        background=background.astype(np.float32) if include_background else None,
    )


@dataclass
class SceneArrays:
    """Materialized dataset arrays for batch training and evaluation."""

    config: SceneConfig
    seed: int
    images: np.ndarray  # (N, H, W, 3) float32
    labels: np.ndarray  # (N,) int64 or (N, K) int8
    points: np.ndarray  # (N, 2) or (N, K, 2) float64
    boxes: np.ndarray  # (N, 4) or (N, K, 4) float64
    bg_kinds: np.ndarray
    correlated: np.ndarray
    backgrounds: np.ndarray | None = None

    def __len__(self) -> int:
        return self.images.shape[0]


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def make_dataset(
    n: int,
    seed: int,
    config: SceneConfig = SceneConfig(),
    *,
    include_background: bool = False,
) -> SceneArrays:
    """Materialize n scenes from per-sample counter-based streams."""
    size = config.image_size
    k = config.classes
    multi = config.label_mode == "multi"
    images = np.empty((n, size, size, 3), dtype=np.float32)
    labels = np.zeros((n, k), dtype=np.int8) if multi else np.zeros(n, dtype=np.int64)
    points = np.full((n, k, 2) if multi else (n, 2), np.nan)
    boxes = np.full((n, k, 4) if multi else (n, 4), np.nan)
    bg_kinds = np.zeros(n, dtype=np.int64)
    correlated = np.zeros(n, dtype=bool)
    backgrounds = (
        np.empty((n, size, size, 3), dtype=np.float32) if include_background else None
    )
    for i in range(n):
        sample = generate_scene(
            sample_rng(seed, i), config=config, include_background=include_background
        )
        images[i] = sample.image
        labels[i] = sample.label
        points[i] = sample.point
        boxes[i] = sample.box
        bg_kinds[i] = sample.bg_kind
        correlated[i] = sample.correlated
        if include_background:
            backgrounds[i] = sample.background
    return SceneArrays(
        config=config,
        seed=seed,
        images=images,
        labels=labels,
        points=points,
        boxes=boxes,
        bg_kinds=bg_kinds,
        correlated=correlated,
        backgrounds=backgrounds,
    )


@dataclass
class SceneData:
    """Train/validation split used by the trainer."""

    train: SceneArrays
    val: SceneArrays
