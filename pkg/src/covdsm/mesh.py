"""Mesh family, sufficient-decrease function, and rounding onto the mesh."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import as_point

ENUMERATION_CAP = 10**7


class MeshError(ValueError):
    """Raised on mesh/radius incompatibilities or enumeration blowups."""


@dataclass(frozen=True)
class MeshSpec:
    """Mesh family M(nu): an integer lattice scaled by min{nu, nu^2/delta0}, or all of R^n."""

    kind: str  # "lattice" | "continuous"
    delta0: float | None = None

    def __post_init__(self):
        if self.kind not in ("lattice", "continuous"):
            raise ValueError(f"unknown mesh kind {self.kind!r}")
        if self.kind == "lattice" and (self.delta0 is None or self.delta0 <= 0):
            raise ValueError("lattice mesh requires delta0 > 0")


@dataclass(frozen=True)
class DecreaseSpec:
    """Sufficient-decrease margin rho(nu): identically zero, or min{nu, nu^2/delta0}."""

    kind: str  # "zero" | "min-quadratic"
    delta0: float | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "min-quadratic"):
            raise ValueError(f"unknown decrease kind {self.kind!r}")
        if self.kind == "min-quadratic" and (self.delta0 is None or self.delta0 <= 0):
            raise ValueError("min-quadratic decrease requires delta0 > 0")


def mesh_cell(spec: MeshSpec, nu: float) -> float:
    """Lattice cell size at mesh parameter nu (0 for the continuous mesh)."""
    if nu <= 0:
        raise MeshError(f"mesh parameter must be positive, got {nu}")
    if spec.kind == "continuous":
        return 0.0
    return min(nu, nu * nu / spec.delta0)


def rho(spec: DecreaseSpec, nu: float) -> float:
    if nu <= 0:
        raise MeshError(f"decrease parameter must be positive, got {nu}")
    if spec.kind == "zero":
        return 0.0
    return min(nu, nu * nu / spec.delta0)


def _lattice_box(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Integer vectors z with lo <= z <= hi, in lexicographic order."""
    count = 1
    for a, b in zip(lo, hi):
        count *= int(b) - int(a) + 1
    if count > ENUMERATION_CAP:
        raise MeshError(f"lattice enumeration of {count} candidates exceeds cap {ENUMERATION_CAP}")
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack(grid, axis=-1).reshape(-1, len(axes)).astype(np.float64)


def lattice_points_in_ball(c: float, r: float, n: int) -> np.ndarray:
    """All points of cZ^n with norm <= r, in lexicographic coordinate order."""
    m = int(math.floor(r / c + 1e-12))
    z = _lattice_box(np.full(n, -m), np.full(n, m))
    pts = c * z
    keep = np.einsum("ij,ij->i", pts, pts) <= r * r
    return pts[keep]


def mesh_points_in_ball(spec: MeshSpec, nu: float, r: float, n: int) -> np.ndarray:
    """Enumerate M(nu) ∩ cl(B_r), lexicographically ordered. Lattice meshes only."""
    if spec.kind == "continuous":
        raise MeshError("cannot enumerate the continuous mesh")
    if r <= 0:
        raise MeshError("ball radius must be positive")
    c = mesh_cell(spec, nu)
    if c > r:
        raise MeshError(f"mesh cell {c} exceeds ball radius {r}")
    return lattice_points_in_ball(c, r, n)


def _repair_into_ball(d: np.ndarray, c: float, r: float) -> np.ndarray:
    """Nearest lattice point of cZ^n ∩ cl(B_r) to d, first in lex order on ties.

    The argmin lies within 1.5*c*sqrt(n) of d whenever an in-ball lattice
    point that close exists (shrink d radially by c*sqrt(n), round), so a
    small box around d suffices; otherwise fall back to full enumeration,
    which is cheap precisely when the cell is large relative to r.
    """
    n = d.shape[0]
    rootn = math.sqrt(n)
    nrm = math.sqrt(float(np.dot(d, d)))
    if c * rootn * 2.0 <= r and nrm > c * rootn:
        reach = 1.5 * c * rootn
        lo = np.floor((d - reach) / c).astype(np.int64)
        hi = np.ceil((d + reach) / c).astype(np.int64)
        cand = c * _lattice_box(lo, hi)
        keep = np.einsum("ij,ij->i", cand, cand) <= r * r
        cand = cand[keep]
        if cand.shape[0] > 0:
            diff = cand - d
            sq = np.einsum("ij,ij->i", diff, diff)
            # any in-ball candidate within `reach` proves the global argmin
            # (and all its ties) lives inside the enumerated box
            if float(sq.min()) <= reach * reach:
                return cand[int(np.argmin(sq))]
    cand = lattice_points_in_ball(c, r, n)
    if cand.shape[0] == 0:
        raise MeshError(f"no lattice point of cell {c} inside the radius-{r} ball")
    diff = cand - d
    sq = np.einsum("ij,ij->i", diff, diff)
    return cand[int(np.argmin(sq))]


def round_to_mesh(spec: MeshSpec, nu: float, d, r: float) -> np.ndarray:
    """Round a direction onto M(nu) ∩ cl(B_r).

    Coordinate-wise nearest lattice point (ties toward -inf); if that exits
    the closed ball, the nearest in-ball lattice point is returned instead,
    so the output always satisfies the covering-step containment exactly.
    """
    d = as_point(d)
    if spec.kind == "continuous":
        return d
    sq_d = float(np.dot(d, d))
    if sq_d > r * r * (1.0 + 1e-9):
        raise MeshError(f"direction norm {math.sqrt(sq_d)} exceeds ball radius {r}")
    c = mesh_cell(spec, nu)
    p = round_to_lattice(spec, nu, d)
    if float(np.dot(p, p)) <= r * r:
        return p
    return _repair_into_ball(d, c, r)


def round_to_lattice(spec: MeshSpec, nu: float, d) -> np.ndarray:
    """Coordinate-wise nearest lattice point, ties resolved toward -inf."""
    d = as_point(d)
    if spec.kind == "continuous":
        return d
    c = mesh_cell(spec, nu)
    q = d / c
    base = np.floor(q)
    z = base + (q - base > 0.5)
    return z * c
