"""Append-only evaluation cache with exact duplicate detection and distance queries."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import INF, as_point, sqdist_to_points

STEP_TAGS = ("initial", "covering", "search", "poll")


class ObjectiveError(RuntimeError):
    """The objective violated its contract (returned NaN)."""


@dataclass(frozen=True)
class EvalRecord:
    point: np.ndarray
    value: float
    iteration: int
    tag: str


class History:
    """Evaluated trial points with cached values and a uniform-grid spatial hash.

    Duplicate detection is by exact bit pattern: rounding onto the mesh makes
    exact re-proposals common, and tolerance-based merging would silently
    change covering-density measurements. Records are only appended. The
    spatial hash is an unbounded dict keyed by integer cells, so queries
    anywhere in space stay exact.
    """

    def __init__(self, cell_size: float = 0.01, n: int | None = None):
        if cell_size <= 0:
            raise ValueError("spatial hash cell size must be positive")
        self.cell_size = float(cell_size)
        self._n = n
        self._records: list[EvalRecord] = []
        self._by_key: dict[bytes, int] = {}
        self._cells: dict[tuple[int, ...], list[int]] = {}
        self._pts = np.empty((16 if n else 0, n or 0), dtype=np.float64)
        self._vals = np.empty(16 if n else 0, dtype=np.float64)
        self._count = 0
        self.unique_evaluations = 0

    def __len__(self) -> int:
        return self._count

    @property
    def records(self) -> list[EvalRecord]:
        return self._records

    def points_array(self) -> np.ndarray:
        """(m, n) view of all recorded points, in insertion order."""
        return self._pts[: self._count]

    def values_array(self) -> np.ndarray:
        return self._vals[: self._count]

    def _cell_of(self, p: np.ndarray) -> tuple[int, ...]:
        return tuple(int(math.floor(c / self.cell_size)) for c in p)

    def _append(self, p: np.ndarray, value: float, iteration: int, tag: str) -> None:
        if self._n is None:
            self._n = p.shape[0]
            self._pts = np.empty((16, self._n), dtype=np.float64)
            self._vals = np.empty(16, dtype=np.float64)
        elif p.shape[0] != self._n:
            raise ValueError(f"dimension mismatch: history has n={self._n}, point has n={p.shape[0]}")
        if self._count == self._pts.shape[0]:
            grown = np.empty((2 * self._count, self._n), dtype=np.float64)
            grown[: self._count] = self._pts[: self._count]
            self._pts = grown
            gv = np.empty(2 * self._count, dtype=np.float64)
            gv[: self._count] = self._vals[: self._count]
            self._vals = gv
        idx = self._count
        self._pts[idx] = p
        self._vals[idx] = value
        self._count += 1
        self._records.append(EvalRecord(point=p.copy(), value=value, iteration=iteration, tag=tag))
        self._by_key[p.tobytes()] = idx
        self._cells.setdefault(self._cell_of(p), []).append(idx)

    def lookup(self, x) -> float | None:
        idx = self._by_key.get(as_point(x).tobytes())
        return None if idx is None else float(self._vals[idx])

    def lookup_or_evaluate(self, x, f: Callable, iteration: int, tag: str) -> float:
        """Return the cached value for a bit-identical point, else call f once."""
        if tag not in STEP_TAGS:
            raise ValueError(f"unknown step tag {tag!r}")
        p = as_point(x)
        idx = self._by_key.get(p.tobytes())
        if idx is not None:
            return float(self._vals[idx])
        value = float(f(p))
        if math.isnan(value):
            raise ObjectiveError(f"objective returned NaN at {p.tolist()}")
        self.unique_evaluations += 1
        self._append(p, value, iteration, tag)
        return value

    # -- distance queries ---------------------------------------------------

    def min_sqdist_bruteforce(self, q) -> float:
        if self._count == 0:
            return INF
        return float(sqdist_to_points(as_point(q), self.points_array()).min())

    def min_dist(self, q) -> float:
        """Exact distance to the nearest recorded point, via the spatial hash.

        Expanding Chebyshev rings of cells are scanned until the ring lower
        bound (ring-1 cells of per-axis separation) exceeds the best distance
        found, which guarantees agreement with a full linear scan.
        """
        if self._count == 0:
            return INF
        q = as_point(q)
        center = self._cell_of(q)
        n = len(center)
        best = INF
        radius = 0
        max_radius = self._max_ring(center)
        while True:
            idxs = self._ring_indices(center, radius, n)
            if idxs:
                sq = sqdist_to_points(q, self._pts[idxs])
                m = float(sq.min())
                if m < best:
                    best = m
            bound = (radius) * self.cell_size  # next ring is >= radius cells away per axis
            if best < INF and bound * bound > best:
                break
            radius += 1
            if radius > max_radius and best < INF:
                break
            if radius > max_radius + 1:
                break
        return math.sqrt(best)

    def _max_ring(self, center: tuple[int, ...]) -> int:
        worst = 0
        for cell in self._cells:
            cheb = max(abs(a - b) for a, b in zip(cell, center))
            worst = max(worst, cheb)
        return worst

    def _ring_indices(self, center: tuple[int, ...], radius: int, n: int) -> list[int]:
        out: list[int] = []
        if radius == 0:
            got = self._cells.get(center)
            return list(got) if got else out
        for cell in self._iter_ring(center, radius, n):
            got = self._cells.get(cell)
            if got:
                out.extend(got)
        return out

    def _iter_ring(self, center: tuple[int, ...], radius: int, n: int):
        rng = range(-radius, radius + 1)
        if n == 1:
            yield (center[0] - radius,)
            yield (center[0] + radius,)
            return
        # faces of the Chebyshev sphere: first axis pinned, rest full range
        for rest in itertools.product(rng, repeat=n - 1):
            yield (center[0] - radius,) + tuple(center[1 + i] + rest[i] for i in range(n - 1))
            yield (center[0] + radius,) + tuple(center[1 + i] + rest[i] for i in range(n - 1))
        for first in range(-radius + 1, radius):
            for rest in self._iter_ring(center[1:], radius, n - 1):
                yield (center[0] + first,) + rest

    def points_within(self, center, radius: float) -> np.ndarray:
        """All recorded points p with ||p - center|| <= radius."""
        if self._count == 0:
            return np.empty((0, self._n or 0), dtype=np.float64)
        pts = self.points_array()
        sq = sqdist_to_points(as_point(center), pts)
        return pts[sq <= radius * radius]

    def max_dist_over_candidates(self, x, candidates) -> tuple[np.ndarray, float]:
        """Candidate d maximizing dist(x+d, history); first maximizer on ties."""
        cands = np.asarray(candidates, dtype=np.float64)
        if cands.ndim == 1:
            cands = cands.reshape(1, -1)
        if cands.shape[0] == 0:
            raise ValueError("candidate set is empty")
        if self._count == 0:
            raise ValueError("history is empty")
        x = as_point(x)
        trial = cands + x
        pts = self.points_array()
        diff = trial[:, None, :] - pts[None, :, :]
        sq = np.einsum("ijk,ijk->ij", diff, diff).min(axis=1)
        best = int(np.argmax(sq))
        return cands[best], math.sqrt(float(sq[best]))

    # -- serialization ------------------------------------------------------

    def to_jsonl(self) -> str:
        lines = []
        for rec in self._records:
            lines.append(
                json.dumps(
                    {"k": rec.iteration, "tag": rec.tag, "point": rec.point.tolist(), "value": rec.value}
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")
