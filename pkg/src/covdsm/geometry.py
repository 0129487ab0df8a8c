"""Vectors, balls, point-set distances, Halton sampling, poll direction generation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INF = float("inf")


def as_point(x) -> np.ndarray:
    """Coerce to a 1-D float64 array without copying when possible."""
    p = np.asarray(x, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"point must be 1-D, got shape {p.shape}")
    return p


@dataclass(frozen=True)
class Ball:
    """Euclidean ball B_radius(center), open or closed."""

    center: np.ndarray
    radius: float
    closed: bool = True

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    def contains(self, x) -> bool:
        sq = float(np.dot(as_point(x) - self.center, as_point(x) - self.center))
        r2 = self.radius * self.radius
        return sq <= r2 if self.closed else sq < r2


def sqdist_to_points(x: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances from x to each row of pts.

    Accumulated coordinate by coordinate, matching the package's batched
    distance kernels bit for bit.
    """
    d = pts[:, 0] - x[0]
    sq = d * d
    for c in range(1, pts.shape[1]):
        d = pts[:, c] - x[c]
        sq += d * d
    return sq


def dist_point_set(x, pts) -> float:
    """Distance from a point to a finite point set; inf for the empty set."""
    x = as_point(x)
    pts = np.asarray(pts, dtype=np.float64)
    if pts.size == 0:
        return INF
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: point has n={x.shape[0]}, set has n={pts.shape[1]}")
    return math.sqrt(float(sqdist_to_points(x, pts).min()))


def primes(count: int) -> list[int]:
    """First `count` prime numbers."""
    if count < 1:
        return []
    out = [2]
    cand = 3
    while len(out) < count:
        if all(cand % p for p in out if p * p <= cand):
            out.append(cand)
        cand += 2
    return out


def halton(index: int, base: int) -> float:
    """Radical-inverse value of `index` in the given prime base, in [0, 1)."""
    if index < 1:
        raise ValueError("halton index must be >= 1")
    f = 1.0
    r = 0.0
    i = index
    while i > 0:
        f /= base
        r += f * (i % base)
        i //= base
    return r


def halton_point(index: int, bases: list[int]) -> np.ndarray:
    """One multidimensional Halton point, one prime base per coordinate."""
    return np.array([halton(index, b) for b in bases], dtype=np.float64)


def ball_sample(
    r: float,
    n: int,
    count: int,
    source: str = "halton",
    seed: int | None = None,
    start_index: int = 1,
) -> list[np.ndarray]:
    """Sample `count` points of cl(B_r) in R^n.

    Unit-cube points are scaled to [-r, r]^n and points of norm > r are
    rejected, which preserves determinism of the underlying sequence.
    `halton` uses the first n primes as bases starting at `start_index`;
    `uniform` draws from a generator seeded with `seed`.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if source == "seeded-uniform":
        source = "uniform"
    r2 = r * r
    out: list[np.ndarray] = []
    if source == "halton":
        bases = primes(n)
        idx = start_index
        while len(out) < count:
            u = halton_point(idx, bases)
            d = r * (2.0 * u - 1.0)
            if float(np.dot(d, d)) <= r2:
                out.append(d)
            idx += 1
    elif source == "uniform":
        rng = np.random.default_rng(seed)
        while len(out) < count:
            d = r * rng.uniform(-1.0, 1.0, size=n)
            if float(np.dot(d, d)) <= r2:
                out.append(d)
    else:
        raise ValueError(f"unknown sample source {source!r}")
    return out


def orthogonal_poll_directions(u, delta: float) -> list[np.ndarray]:
    """2n poll directions of norm delta from the Householder reflector of u.

    H = I - 2 u u^T / ||u||^2 is orthogonal, so its columns are a unit
    orthonormal basis; the scaled columns plus their negatives form a
    (maximal) positive basis of R^n.
    """
    u = as_point(u)
    nrm2 = float(np.dot(u, u))
    if nrm2 == 0.0:
        raise ValueError("poll seed direction must be nonzero")
    n = u.shape[0]
    h = np.eye(n) - (2.0 / nrm2) * np.outer(u, u)
    dirs = [delta * h[:, j] for j in range(n)]
    dirs += [-d for d in dirs]
    return dirs


def clip_into_ball(d: np.ndarray, r: float) -> np.ndarray:
    """Rescale d so that ||d|| <= r holds exactly in floating point."""
    sq = float(np.dot(d, d))
    r2 = r * r
    while sq > r2:
        d = d * (r / math.sqrt(sq))
        sq = float(np.dot(d, d))
        if sq > r2:
            d = d * (1.0 - 1e-15)
            sq = float(np.dot(d, d))
    return d
