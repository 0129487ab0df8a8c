"""Covering oracles, the revealing-step direction sequence, and certification tools."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import as_point, ball_sample, clip_into_ball, dist_point_set, sqdist_to_points
from .mesh import MeshSpec, mesh_points_in_ball

DIRECT_GRID_LIMIT = 400_000  # above this many grid points, use branch and bound

ExcludeFn = Callable[[np.ndarray], np.ndarray]  # trial points (m, n) -> forbidden mask


# ---------------------------------------------------------------------------
# exact farthest-point search over a uniform grid in cl(B_r)
# ---------------------------------------------------------------------------


def grid_scale(r: float, spacing: float) -> int:
    """Number of grid steps per radius; the effective spacing is r/K."""
    if spacing <= 0 or r <= 0:
        raise ValueError("radius and spacing must be positive")
    return max(1, round(r / spacing))


GRID_ENUMERATION_CAP = 2 * 10**7


def grid_directions(r: float, k: int, n: int) -> np.ndarray:
    """All d = (r/K) z with z in Z^n, z.z <= K^2, in lexicographic order."""
    if (2 * k + 1) ** n > GRID_ENUMERATION_CAP:
        raise ValueError(f"direction grid with {(2 * k + 1) ** n} nodes exceeds the enumeration cap")
    h = r / k
    axes = [np.arange(-k, k + 1, dtype=np.int64)] * n
    z = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    keep = np.einsum("ij,ij->i", z, z) <= k * k
    return z[keep].astype(np.float64) * h


def _min_sqdists(trial: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Squared distance from each trial row to the nearest row of pts.

    Coordinate-wise outer differences over history chunks keep the
    temporaries cache-sized; the arithmetic order matches the per-pair
    ((dx^2 + dy^2) + ...) sum, so results are bit-identical to a direct
    pairwise evaluation.
    """
    n = trial.shape[1]
    out = np.full(trial.shape[0], math.inf)
    for lo in range(0, pts.shape[0], 256):
        p = pts[lo : lo + 256]
        sq = (trial[:, 0, None] - p[None, :, 0]) ** 2
        for c in range(1, n):
            sq += (trial[:, c, None] - p[None, :, c]) ** 2
        np.minimum(out, sq.min(axis=1), out=out)
    return out


def _min_dists(trial: np.ndarray, pts: np.ndarray) -> np.ndarray:
    out = _min_sqdists(trial, pts)
    np.sqrt(out, out=out)
    return out


def _direct_grid_argmax(
    x: np.ndarray, pts: np.ndarray, r: float, k: int, exclude: Optional[ExcludeFn]
) -> tuple[np.ndarray, float]:
    cands = grid_directions(r, k, x.shape[0])
    trial = cands + x
    if exclude is not None:
        keep = ~np.asarray(exclude(trial), dtype=bool)
        cands, trial = cands[keep], trial[keep]
        if cands.shape[0] == 0:
            raise ValueError("exclusion filter removed every grid candidate")
    dists = _min_dists(trial, pts)
    best = int(np.argmax(dists))
    return cands[best], float(dists[best])


def _bnb_grid_argmax(
    x: np.ndarray, pts: np.ndarray, r: float, k: int, levels: int, exclude: Optional[ExcludeFn]
) -> tuple[np.ndarray, float]:
    """Exact coarse-to-fine argmax of dist(x+d, pts) over the K-grid in cl(B_r).

    Grid points are carried as integer vectors z (d = z*h). A point at level
    L (step s = 2^(levels-L)) bounds all its fine-grid descendants within
    sqrt(n)*h*(s-1), so cells whose value plus that radius stay below the
    incumbent maximum are discarded; every exact maximizer survives to the
    finest level, where the lexicographically smallest one is returned.
    """
    n = x.shape[0]
    h = r / k
    rootn = math.sqrt(n)
    k2 = k * k

    step = 1 << levels
    half = int(math.ceil((k + rootn * (step - 1)) / step))
    axes = [np.arange(-half * step, half * step + 1, step, dtype=np.int64)] * n
    z = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)

    offsets = np.stack(np.meshgrid(*([np.array([-1, 0, 1])] * n), indexing="ij"), axis=-1).reshape(-1, n)
    pack_base = 2 * (k + (1 << levels) * 8) + 1  # coordinate range bound for dedupe keys

    best_val = -math.inf
    for level in range(levels + 1):
        step = 1 << (levels - level)
        reach = rootn * h * (step - 1)
        zz = np.einsum("ij,ij->i", z, z)
        admit = zz.astype(np.float64) * (h * h) <= (r + reach) ** 2 + 1e-12
        z, zz = z[admit], zz[admit]
        if z.shape[0] == 0:
            raise ValueError("empty grid after admission filter")
        d = z.astype(np.float64) * h
        g = _min_dists(d + x, pts)
        eligible = zz <= k2
        if exclude is not None:
            eligible &= ~np.asarray(exclude(d + x), dtype=bool)
        if eligible.any():
            best_val = max(best_val, float(g[eligible].max()))
        if level == levels:
            if not eligible.any():
                raise ValueError("exclusion filter removed every grid candidate")
            attain = eligible & (g == best_val)
            zatt = z[attain]
            order = np.lexsort(_lex_keys(zatt))
            zbest = zatt[order[0]]
            return zbest.astype(np.float64) * h, best_val
        keep = (g + reach >= best_val) if best_val > -math.inf else np.ones(z.shape[0], dtype=bool)
        z = z[keep]
        child_step = 1 << (levels - level - 1)
        z = (z[:, None, :] + offsets[None, :, :] * child_step).reshape(-1, n)
        key = z[:, 0]
        for c in range(1, n):
            key = key * pack_base + z[:, c]
        _, first = np.unique(key, return_index=True)
        z = z[np.sort(first)]
    raise AssertionError("unreachable")


def _lex_keys(rows: np.ndarray) -> tuple:
    """Column key order so np.lexsort yields lexicographic row order."""
    return tuple(rows[:, j] for j in range(rows.shape[1] - 1, -1, -1))


_GRID_MEMO: dict = {}
_GRID_MEMO_CAP = 256


def max_min_dist_on_grid(
    x, pts, r: float, k: int, exclude: Optional[ExcludeFn] = None
) -> tuple[np.ndarray, float]:
    """Grid direction maximizing distance from x+d to pts, and the attained distance.

    Exact over the full grid; ties resolve to the lexicographically first
    direction. Large grids are searched by branch and bound, small ones
    directly; both paths return identical results. Recent results are
    memoized, since certification re-derives the same reference maxima for
    several oracles.
    """
    x = as_point(x)
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.shape[0] == 0:
        raise ValueError("point set is empty")
    key = None
    if exclude is None:
        key = (x.tobytes(), pts.tobytes(), r, k)
        hit = _GRID_MEMO.get(key)
        if hit is not None:
            return hit[0].copy(), hit[1]
    n = x.shape[0]
    approx_count = (2 * k + 1) ** n
    if approx_count <= DIRECT_GRID_LIMIT:
        out = _direct_grid_argmax(x, pts, r, k, exclude)
    else:
        levels = 0
        while levels < 3 and k % (1 << (levels + 1)) == 0 and k >> (levels + 1) >= 10:
            levels += 1
        if levels == 0:
            out = _direct_grid_argmax(x, pts, r, k, exclude)
        else:
            out = _bnb_grid_argmax(x, pts, r, k, levels, exclude)
    if key is not None:
        if len(_GRID_MEMO) >= _GRID_MEMO_CAP:
            _GRID_MEMO.pop(next(iter(_GRID_MEMO)))
        _GRID_MEMO[key] = (out[0].copy(), out[1])
    return out


# ---------------------------------------------------------------------------
# covering oracles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleSpec:
    """Pluggable covering oracle: map (x, history) -> directions in cl(B_r).

    kinds:
      exact-grid     argmax of dist(x+d, history) over a uniform grid
      exact-mesh     same argmax over the current mesh inside cl(B_r)
      alpha-sampled  best of `budget` low-discrepancy or uniform ball samples
      truncated      inner oracle applied to history ∩ cl(B_{r+delta_r}(x))
    """

    kind: str
    r: float
    spacing: float | None = None
    alpha: float | None = None
    sampler: str = "halton"
    budget: int | None = None
    inner: Optional["OracleSpec"] = None
    delta_r: float | None = None

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("covering radius must be positive")
        if self.kind == "exact-grid":
            if self.spacing is None:
                object.__setattr__(self, "spacing", self.r / 50.0)  # default solving resolution
            if self.spacing <= 0:
                raise ValueError("exact-grid oracle needs a positive spacing")
        elif self.kind == "alpha-sampled":
            if self.alpha is None or not (0 < self.alpha <= 1):
                raise ValueError("alpha must lie in (0, 1]")
            if self.budget is None or self.budget < 1:
                raise ValueError("alpha-sampled oracle needs a positive budget")
        elif self.kind == "truncated":
            if self.inner is None or self.delta_r is None or self.delta_r <= 0:
                raise ValueError("truncated oracle needs an inner oracle and delta_r > 0")
        elif self.kind != "exact-mesh":
            raise ValueError(f"unknown oracle kind {self.kind!r}")

    @property
    def declared_beta(self) -> float:
        if self.kind in ("exact-grid", "exact-mesh"):
            return 1.0
        if self.kind == "alpha-sampled":
            return self.alpha
        return self.inner.declared_beta * self.delta_r / (2 * self.r + self.delta_r)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "r": self.r}
        if self.spacing is not None:
            d["spacing"] = self.spacing
        if self.kind == "alpha-sampled":
            d.update(alpha=self.alpha, sampler=self.sampler, budget=self.budget)
        if self.kind == "truncated":
            d.update(inner=self.inner.to_dict(), delta_r=self.delta_r)
        return d

    @staticmethod
    def from_dict(d: dict) -> "OracleSpec":
        d = dict(d)
        if "inner" in d:
            d["inner"] = OracleSpec.from_dict(d["inner"])
        return OracleSpec(**d)


def _empty_history_direction(spec: OracleSpec, n: int) -> np.ndarray:
    # any direction maximizes the distance to the empty set; fix r*e1
    d = np.zeros(n)
    d[0] = spec.r
    return d


def oracle_directions(
    spec: OracleSpec,
    x,
    history,
    mesh: MeshSpec | None = None,
    nu: float | None = None,
    seed: int = 0,
    exclude: Optional[ExcludeFn] = None,
) -> list[np.ndarray]:
    """Directions chosen by the oracle; a singleton list, per iteration cost 1.

    `history` may be a History instance or an (m, n) point array; it may be
    empty. Deterministic given (spec, x, history, seed).
    """
    x = as_point(x)
    pts = history.points_array() if hasattr(history, "points_array") else np.asarray(history, dtype=np.float64)
    if pts.size == 0:
        return [_empty_history_direction(spec, x.shape[0])]
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)

    if spec.kind == "truncated":
        rad = spec.r + spec.delta_r
        near = pts[sqdist_to_points(x, pts) <= rad * rad]
        if near.shape[0] == 0:
            return [_empty_history_direction(spec, x.shape[0])]
        return oracle_directions(spec.inner, x, near, mesh=mesh, nu=nu, seed=seed, exclude=exclude)

    if spec.kind == "exact-grid":
        k = grid_scale(spec.r, spec.spacing)
        d, _ = max_min_dist_on_grid(x, pts, spec.r, k, exclude=exclude)
        return [d]

    if spec.kind == "exact-mesh":
        if mesh is None or nu is None:
            raise ValueError("exact-mesh oracle needs the current mesh and nu")
        cands = mesh_points_in_ball(mesh, nu, spec.r, x.shape[0])
        trial = cands + x
        if exclude is not None:
            keep = ~np.asarray(exclude(trial), dtype=bool)
            cands, trial = cands[keep], trial[keep]
            if cands.shape[0] == 0:
                raise ValueError("exclusion filter removed every mesh candidate")
        dists = _min_dists(trial, pts)
        return [cands[int(np.argmax(dists))]]

    # alpha-sampled
    samples = np.asarray(
        ball_sample(spec.r, x.shape[0], spec.budget, source=spec.sampler, seed=seed)
    )
    trial = samples + x
    if exclude is not None:
        keep = ~np.asarray(exclude(trial), dtype=bool)
        samples, trial = samples[keep], trial[keep]
        if samples.shape[0] == 0:
            raise ValueError("exclusion filter removed every sample")
    dists = _min_dists(trial, pts)
    return [samples[int(np.argmax(dists))]]


class GridOracleSession:
    """Incremental exact-grid oracle evaluation across the iterations of one run.

    Keeps, for a fixed incumbent, the minimum squared distance from every
    grid trial point to the history seen so far; new history points update
    the array cheaply, and a change of incumbent triggers a rebuild that
    truncates the history to the points that can influence the maximizer
    (points farther than r plus the attained maximum cannot). Outputs are
    bit-identical to the stateless oracle on the full history.
    """

    def __init__(self, spec: OracleSpec, n: int, exclude: Optional[ExcludeFn] = None):
        if spec.kind != "exact-grid":
            raise ValueError("session acceleration applies to exact-grid oracles")
        self.spec = spec
        self.n = n
        self.exclude = exclude
        self.cands = grid_directions(spec.r, grid_scale(spec.r, spec.spacing), n)
        self._x_key: bytes | None = None
        self._trial: np.ndarray | None = None
        self._sq: np.ndarray | None = None
        self._processed = 0
        self.last_attained: float | None = None  # distance achieved by the latest pick

    def _rebuild(self, x: np.ndarray, pts: np.ndarray) -> None:
        r = self.spec.r
        self._trial = self.cands + x
        dx = sqdist_to_points(x, pts)
        cut = 3.0 * r
        near = pts[dx <= cut * cut]
        while near.shape[0] == 0:
            cut *= 2.0
            near = pts[dx <= cut * cut]
        sq = _min_sqdists(self._trial, near)
        need = r + math.sqrt(float(sq.max()))
        if need > cut:
            near = pts[dx <= need * need]
            sq = _min_sqdists(self._trial, near)
        if self.exclude is not None:
            forbidden = np.asarray(self.exclude(self._trial), dtype=bool)
            if forbidden.all():
                raise ValueError("exclusion filter removed every grid candidate")
            sq[forbidden] = -math.inf  # never the argmax; stays put under min-updates
        self._sq = sq
        self._x_key = x.tobytes()

    def directions(self, x, history) -> list[np.ndarray]:
        x = as_point(x)
        pts = history.points_array() if hasattr(history, "points_array") else np.asarray(history)
        m = pts.shape[0]
        if m == 0:
            self.last_attained = None
            return [_empty_history_direction(self.spec, x.shape[0])]
        key = x.tobytes()
        if key != self._x_key:
            self._rebuild(x, pts)
        elif m > self._processed:
            fresh = _min_sqdists(self._trial, pts[self._processed : m])
            np.minimum(self._sq, fresh, out=self._sq)
        self._processed = m
        best = int(np.argmax(self._sq))
        self.last_attained = math.sqrt(max(0.0, float(self._sq[best])))
        return [self.cands[best]]


REFERENCE_GRID_SCALE = 200  # reference grid spacing is r/200


def verify_beta(
    spec: OracleSpec,
    trials: int,
    n: int,
    seed: int = 0,
    set_radius_factor: float = 2.0,
) -> tuple[float, list[dict]]:
    """Certify the oracle's distance-ratio guarantee on random instances.

    Each trial draws a random center x and a finite set S of 1..50 points in
    cl(B_{2r}(x)), measures the oracle's attained distance against the
    brute-force maximum over the reference grid of spacing r/200 in cl(B_r),
    and records the ratio. Returns the minimum ratio and per-trial rows.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    r = spec.r
    rng = np.random.default_rng(seed)
    rows = []
    min_ratio = math.inf
    for t in range(trials):
        x = rng.uniform(-2.0, 2.0, size=n)
        size = int(rng.integers(1, 51))
        pts = np.empty((size, n))
        got = 0
        while got < size:
            cand = rng.uniform(-set_radius_factor * r, set_radius_factor * r, size=n)
            if float(np.dot(cand, cand)) <= (set_radius_factor * r) ** 2:
                pts[got] = x + cand
                got += 1
        dirs = oracle_directions(spec, x, pts, seed=seed * 1_000_003 + t)
        num = max(dist_point_set(x + d, pts) for d in dirs)
        _, denom = max_min_dist_on_grid(x, pts, r, REFERENCE_GRID_SCALE)
        ratio = num / denom if denom > 0 else math.inf
        rows.append({"trial": t, "n": n, "numerator": num, "denominator": denom, "ratio": ratio})
        min_ratio = min(min_ratio, ratio)
    return min_ratio, rows


# ---------------------------------------------------------------------------
# revealing-step direction sequence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RevealingSequence:
    """Direction-set sequence (D_l) for the revealing-step baseline.

    `uniform-refinement` emits grids of spacing r/2^(floor(l/4)+1) in cl(B_r),
    whose union is dense in the ball. `example41-quadrants` emits one point
    per set on the bisector of the closed quadrant cycling (+,+), (-,+),
    (-,-), (+,-) with l, scaled into cl(B_r); 2-D only.
    """

    kind: str
    r: float

    def __post_init__(self):
        if self.kind not in ("uniform-refinement", "example41-quadrants"):
            raise ValueError(f"unknown revealing sequence kind {self.kind!r}")
        if self.r <= 0:
            raise ValueError("covering radius must be positive")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "r": self.r}

    @staticmethod
    def from_dict(d: dict) -> "RevealingSequence":
        return RevealingSequence(**d)


_QUADRANT_SIGNS = ((1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0))


def revealing_directions(seq: RevealingSequence, ell: int, n: int = 2) -> np.ndarray:
    """The finite direction set D_ell in cl(B_r)."""
    if ell < 0:
        raise ValueError("sequence index must be >= 0")
    if seq.kind == "uniform-refinement":
        k = 1 << (ell // 4 + 1)
        return grid_directions(seq.r, k, n)
    if n != 2:
        raise ValueError("quadrant-cycling sequence is 2-D only")
    signs = np.array(_QUADRANT_SIGNS[ell % 4])
    d = clip_into_ball(seq.r / math.sqrt(2.0) * signs, seq.r)
    return d.reshape(1, 2)


def revealing_index(delta_min_sequence) -> int:
    """Number of indices u < k with a strict decrease of the smallest radius.

    `delta_min_sequence` lists the smallest poll radius at iterations 0..k.
    """
    seq = list(delta_min_sequence)
    return sum(1 for a, b in zip(seq, seq[1:]) if b < a)


# ---------------------------------------------------------------------------
# exact 2-D Euclidean distance transform (two-phase, integer arithmetic)
# ---------------------------------------------------------------------------


def distance_transform_sq_int(occupied: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance, in cell units, to the nearest occupied cell.

    Two-phase scan: per-column 1-D distances, then per-row lower envelopes of
    the parabolas j -> (x-j)^2 + G[i,j]^2. All arithmetic is integral, so the
    result is exact.
    """
    occ = np.asarray(occupied, dtype=bool)
    if occ.ndim != 2:
        raise ValueError("occupancy grid must be 2-D")
    rows, cols = occ.shape
    if not occ.any():
        raise ValueError("occupancy grid has no occupied cell")
    big = rows * rows + cols * cols + 1

    # phase 1: vertical 1-D distances per column
    g = np.full((rows, cols), big, dtype=np.int64)
    g[occ] = 0
    for i in range(1, rows):
        np.minimum(g[i], g[i - 1] + 1, out=g[i])
    for i in range(rows - 2, -1, -1):
        np.minimum(g[i], g[i + 1] + 1, out=g[i])
    # columns with no occupied cell act as sentinels; square only true
    # distances (<= rows) so the sentinel never overflows
    g2 = np.where(g > rows, big, g * np.minimum(g, rows))

    # phase 2: row-wise lower envelope of parabolas
    out = np.empty((rows, cols), dtype=np.int64)
    for i in range(rows):
        f = g2[i]
        v = [0] * cols  # abscissa of the parabola owning each envelope piece
        zlo = [0.0] * (cols + 1)
        k = 0
        v[0] = 0
        zlo[0] = -math.inf
        zlo[1] = math.inf
        for q in range(1, cols):
            fq = int(f[q])
            while True:
                p = v[k]
                s = (fq + q * q - int(f[p]) - p * p) / (2.0 * (q - p))
                if s <= zlo[k]:
                    k -= 1
                else:
                    break
            k += 1
            v[k] = q
            zlo[k] = s
            zlo[k + 1] = math.inf
        k = 0
        for q in range(cols):
            while zlo[k + 1] < q:
                k += 1
            p = v[k]
            out[i, q] = (q - p) * (q - p) + int(f[p])
    return out


def distance_transform_2d(occupied: np.ndarray, spacing: float = 1.0) -> np.ndarray:
    """Exact Euclidean distance field from each cell center to the occupied set."""
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    return spacing * np.sqrt(distance_transform_sq_int(occupied).astype(np.float64))
