"""Synthetic evolving point clouds.

``barbell_tensor``
    Uniform samples ``D`` of the unit disc deformed from a horizontal barbell
    ``h(D)`` (first snapshot) through ``D`` (middle snapshot) to a vertical
    barbell ``v(D)`` (last snapshot), with linear interpolation in between,
    where ``h(x, y) = (x, y (1 - cos pi x))`` and ``v(x, y) = (x (1 - cos pi y), y)``.

``circle_tensor``
    Points on a uniform angular grid of a circle whose radius changes
    linearly in time, an isometric embedding of ``r(tau)^2 dtheta^2``.

Random draws use numpy's PCG64 bit generator (``numpy.random.Generator(
numpy.random.PCG64(seed))``). Disc samples come from rejection sampling: candidate
pairs are drawn uniformly on ``[-1, 1)^2`` in blocks of ``2 n`` (x then y,
interleaved per candidate) and accepted when ``x^2 + y^2 <= 1``, in draw order,
until ``n`` are accepted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_store import DataTensor

__all__ = ["BarbellConfig", "MetricFamily", "LABEL_NAMES", "sample_disc", "h_map", "v_map",
           "barbell_labels", "barbell_tensor", "circle_tensor"]

# class ids written to the labels sidecar
LABEL_NAMES = ("right-up", "right-down", "left-up", "left-down")


@dataclass(frozen=True)
class BarbellConfig:
    n: int = 2000
    m: int = 9
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.m < 3 or self.m % 2 == 0:
            raise ValueError(f"m must be odd and >= 3, got {self.m}")


@dataclass(frozen=True)
class MetricFamily:
    """Circle metric ``r(tau)^2 dtheta^2`` with ``r(tau) = r0 + rate * tau`` on ``[0, horizon]``."""

    r0: float = 1.0
    rate: float = 0.0
    horizon: float = 1.0
    kind: str = "circle"

    def __post_init__(self):
        if self.kind != "circle":
            raise ValueError(f"unsupported metric family {self.kind!r}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if not (self.r0 > 0 and self.radius(self.horizon) > 0):
            raise ValueError("radius must stay positive on [0, horizon]")

    def radius(self, tau):
        return self.r0 + self.rate * np.asarray(tau, dtype=float)


def sample_disc(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points uniform on the closed unit disc, by rejection."""
    out = np.empty((0, 2))
    while out.shape[0] < n:
        cand = rng.uniform(-1.0, 1.0, size=(2 * n, 2))
        cand = cand[np.einsum("ij,ij->i", cand, cand) <= 1.0]
        out = np.concatenate([out, cand])
    return out[:n]


def h_map(p: np.ndarray) -> np.ndarray:
    """Horizontal barbell."""
    x, y = p[:, 0], p[:, 1]
    return np.column_stack([x, y * (1.0 - np.cos(np.pi * x))])


def v_map(p: np.ndarray) -> np.ndarray:
    """Vertical barbell."""
    x, y = p[:, 0], p[:, 1]
    return np.column_stack([x * (1.0 - np.cos(np.pi * y)), y])


def barbell_labels(disc: np.ndarray) -> np.ndarray:
    """Class ids indexing :data:`LABEL_NAMES`: left/right from x, up/down from y."""
    left = disc[:, 0] < 0
    down = disc[:, 1] < 0
    return (2 * left + down).astype(np.int64)


def barbell_tensor(config: BarbellConfig) -> DataTensor:
    rng = np.random.Generator(np.random.PCG64(config.seed))
    disc = sample_disc(config.n, rng)
    first, last = h_map(disc), v_map(disc)
    mid = (config.m + 1) // 2
    data = np.empty((config.n, 2, config.m))
    for i in range(1, config.m + 1):
        if i <= mid:
            frac = (i - 1) / (mid - 1)
            data[:, :, i - 1] = (disc - first) * frac + first
        else:
            frac = (i - mid) / (config.m - mid)
            data[:, :, i - 1] = (last - disc) * frac + disc
    # anchors exactly, not through the interpolation arithmetic
    data[:, :, 0], data[:, :, mid - 1], data[:, :, -1] = first, disc, last
    return DataTensor.from_array(data, np.arange(1, config.m + 1, dtype=float), barbell_labels(disc))


def circle_tensor(family: MetricFamily, n: int, m: int, step: float = None) -> DataTensor:
    """Grid points ``r(tau_i) (cos theta_j, sin theta_j)`` with ``theta_j = 2 pi j / n``.

    Times are ``tau_i = i * step`` for ``i = 1..m``; ``step`` defaults to
    ``horizon / m``.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if step is None:
        step = family.horizon / m
    taus = step * np.arange(1, m + 1)
    if taus[-1] > family.horizon * (1 + 1e-12):
        raise ValueError(f"last time {taus[-1]} exceeds the horizon {family.horizon}")
    theta = 2.0 * np.pi * np.arange(n) / n
    unit = np.column_stack([np.cos(theta), np.sin(theta)])
    radii = family.radius(taus)
    data = unit[:, :, None] * radii[None, None, :]
    return DataTensor.from_array(data, taus)
