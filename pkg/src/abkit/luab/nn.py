"""Minimal feed-forward network with hand-written backward passes.

Everything runs in float64 numpy. The network is a patch-embedding trunk
producing a spatial feature map, a classifier head over pooled features, and
a coordinate-regression head over the flattened map with a logistic squashing
so predictions stay in [0, 1]^2. Pooling is either global average or
point-guided attentive pooling (Gaussian weights around a supervision point).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonPositiveBandwidth


class Param:
    """A weight tensor with its accumulated gradient and per-layer lr scale."""

    __slots__ = ("value", "grad", "name", "lr_scale")

    def __init__(self, value: np.ndarray, name: str, lr_scale: float = 1.0):
        self.value = value
        self.grad = np.zeros_like(value)
        self.name = name
        self.lr_scale = lr_scale

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


def _he_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


class PatchEmbed:
    """Split the image into non-overlapping patches and project each linearly.

    (N, H, W, C) -> (N, G, G, D) with G = H // patch.
    """

    def __init__(self, rng, patch: int, in_channels: int, dim: int):
        self.patch = patch
        p_in = patch * patch * in_channels
        self.w = Param(_he_init(rng, p_in, (p_in, dim)), "embed.w")
        self.b = Param(np.zeros(dim), "embed.b")
        self._cache = None

    @property
    def params(self):
        return [self.w, self.b]

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, h, w, c = x.shape
        p = self.patch
        g = h // p
        patches = (
            x.reshape(n, g, p, g, p, c).transpose(0, 1, 3, 2, 4, 5).reshape(n, g, g, -1)
        )
        self._cache = patches
        return patches @ self.w.value + self.b.value

    def backward(self, dout: np.ndarray) -> None:
        patches = self._cache
        flat = patches.reshape(-1, patches.shape[-1])
        self.w.grad += flat.T @ dout.reshape(-1, dout.shape[-1])
        self.b.grad += dout.sum(axis=(0, 1, 2))


class Dense:
    """Affine map over the last axis."""

    def __init__(
        self,
        rng,
        dim_in: int,
        dim_out: int,
        name: str,
        init_scale: float = 1.0,
        lr_scale: float = 1.0,
    ):
        self.w = Param(init_scale * _he_init(rng, dim_in, (dim_in, dim_out)), f"{name}.w", lr_scale)
        self.b = Param(np.zeros(dim_out), f"{name}.b", lr_scale)
        self._cache = None

    @property
    def params(self):
        return [self.w, self.b]

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._cache = x
        return x @ self.w.value + self.b.value

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x = self._cache
        flat_x = x.reshape(-1, x.shape[-1])
        flat_d = dout.reshape(-1, dout.shape[-1])
        self.w.grad += flat_x.T @ flat_d
        self.b.grad += flat_d.sum(axis=0)
        return dout @ self.w.value.T


class ReLU:
    def __init__(self):
        self._mask = None

    params: list = []

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout * self._mask


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def attentive_pool_weights(grid: int, points: np.ndarray, bandwidth: float) -> np.ndarray:
    """Normalized Gaussian pooling weights over a grid x grid feature map.

    `points` is (N, 2) in [0, 1]^2; rows with NaN fall back to uniform
    weights (global average). Weights are non-negative and sum to 1 per
    sample.
    """
    if bandwidth <= 0:
        raise NonPositiveBandwidth(f"bandwidth {bandwidth} must be > 0")
    centers = (np.arange(grid) + 0.5) / grid
    cy, cx = np.meshgrid(centers, centers, indexing="ij")
    points = np.asarray(points, dtype=np.float64)
    d2 = (cx[None] - points[:, 0, None, None]) ** 2 + (cy[None] - points[:, 1, None, None]) ** 2
    # subtract the row max before exponentiation for stability at tiny bandwidths
    logits = -d2 / (2.0 * bandwidth * bandwidth)
    logits -= logits.max(axis=(1, 2), keepdims=True)
    w = np.exp(logits)
    w /= w.sum(axis=(1, 2), keepdims=True)
    missing = np.isnan(points).any(axis=1)
    if missing.any():
        w[missing] = 1.0 / (grid * grid)
    return w


def attentive_pool_forward(
    features: np.ndarray, point, bandwidth: float
) -> np.ndarray:
    """Pool a (G, G, D) or (N, G, G, D) feature map around a point.

    With no point (None or NaN) this is exactly global average pooling, the
    inference-time behaviour.
    """
    single = features.ndim == 3
    feats = features[None] if single else features
    n, g = feats.shape[0], feats.shape[1]
    if point is None:
        pts = np.full((n, 2), np.nan)
    else:
        pts = np.asarray(point, dtype=np.float64).reshape(-1, 2)
        if pts.shape[0] == 1 and n > 1:
            pts = np.repeat(pts, n, axis=0)
    w = attentive_pool_weights(g, pts, bandwidth)
    pooled = (feats * w[..., None]).sum(axis=(1, 2))
    return pooled[0] if single else pooled


@dataclass(frozen=True)
class ModelSpec:
    """Architecture and head configuration."""

    image_size: int = 32
    channels: int = 3
    patch: int = 4
    dim: int = 48
    classes: int = 8
    label_mode: str = "single"  # single | multi
    pooling: str = "gap"  # gap | attentive
    bandwidth: float = 0.15

    @property
    def grid(self) -> int:
        return self.image_size // self.patch

    @property
    def point_heads(self) -> int:
        return 1 if self.label_mode == "single" else self.classes


class PointRegressionNet:
    """Shared trunk with a classifier head and coordinate-regression head(s)."""

    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        self.spec = spec
        self.embed = PatchEmbed(rng, spec.patch, spec.channels, spec.dim)
        self.act1 = ReLU()
        self.mix = Dense(rng, spec.dim, spec.dim, "mix")
        self.act2 = ReLU()
        self.cls = Dense(rng, spec.dim, spec.classes, "cls")
        flat = spec.grid * spec.grid * spec.dim
        # small init keeps early predictions near the sigmoid midpoint; the
        # lr scale offsets the wide flattened input whose squared norm would
        # otherwise make logit steps grid^2 times larger than the other heads'
        self.reg = Dense(
            rng, flat, 2 * spec.point_heads, "reg", init_scale=0.05,
            lr_scale=1.0 / (spec.grid * spec.grid),
        )
        self._cache = None

    @property
    def params(self) -> list[Param]:
        return self.embed.params + self.mix.params + self.cls.params + self.reg.params

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def num_params(self) -> int:
        return sum(p.value.size for p in self.params)

    def forward(self, x: np.ndarray, points: np.ndarray | None = None):
        """Return (scores, point_pred); point_pred in [0, 1]^2 per head.

        `points` only matters for attentive pooling during training; at
        inference it is None and pooling falls back to global average.
        """
        n = x.shape[0]
        g = self.spec.grid
        feats = self.act2.forward(self.mix.forward(self.act1.forward(self.embed.forward(x))))
        if self.spec.pooling == "attentive" and points is not None:
            pts = points.reshape(n, -1, 2)[:, 0, :]  # first head's point guides pooling
            w = attentive_pool_weights(g, pts, self.spec.bandwidth)
        else:
            w = np.full((n, g, g), 1.0 / (g * g))
        pooled = (feats * w[..., None]).sum(axis=(1, 2))
        scores = self.cls.forward(pooled)
        z = self.reg.forward(feats.reshape(n, -1))
        point_pred = sigmoid(z).reshape(n, self.spec.point_heads, 2)
        if self.spec.label_mode == "single":
            point_pred = point_pred[:, 0, :]
        self._cache = (feats, w, z, n)
        return scores, point_pred

    def backward(self, dscores: np.ndarray, dpoints: np.ndarray) -> None:
        feats, w, z, n = self._cache
        g = self.spec.grid
        s = sigmoid(z)
        dz = dpoints.reshape(n, -1) * s * (1.0 - s)
        dfeats_flat = self.reg.backward(dz)
        dfeats = dfeats_flat.reshape(feats.shape)
        dpooled = self.cls.backward(dscores)
        dfeats += dpooled[:, None, None, :] * w[..., None]
        dmap = self.act1.backward(self.mix.backward(self.act2.backward(dfeats)))
        self.embed.backward(dmap)

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.value for p in self.params}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for p in self.params:
            p.value[...] = state[p.name]


class SGD:
    """Plain stochastic gradient descent with momentum."""

    def __init__(self, params: list[Param], lr: float, momentum: float = 0.9):
        self.params = params
        self.lr = lr
        self.momentum = momentum
        self._velocity = [np.zeros_like(p.value) for p in params]

    def step(self) -> None:
        for p, v in zip(self.params, self._velocity):
            v *= self.momentum
            v -= self.lr * p.lr_scale * p.grad
            p.value += v
