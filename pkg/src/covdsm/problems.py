"""Built-in test objectives with analytic continuity-set metadata."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import INF, as_point


@dataclass(frozen=True)
class Problem:
    """Objective with a continuity-set classifier and known minimizer metadata.

    `classify` maps a point to the index of the continuity set containing it,
    with 0 reserved for points outside the domain (objective +inf). Branch
    predicates are exact comparisons, as the benchmark constructions rely on
    strict branching along the axes.
    """

    name: str
    n: int
    objective: Callable[[np.ndarray], float]
    classify: Callable[[np.ndarray], int]
    default_start: np.ndarray
    known_min: Optional[tuple[np.ndarray, float]] = None

    def __call__(self, x) -> float:
        return self.objective(as_point(x))


_BENCH_START = np.array([98.7654321, 12.3456789])


def ptest1() -> Problem:
    """Max-norm bowl with a jump of height 1 on the open half-plane x1 > 0."""

    def f(x):
        nrm = float(np.max(np.abs(x)))
        return nrm + 1.0 if x[0] > 0 else nrm

    def classify(x):
        return 1 if x[0] > 0 else 2

    return Problem(
        name="ptest1",
        n=2,
        objective=f,
        classify=classify,
        default_start=_BENCH_START.copy(),
        known_min=(np.zeros(2), 0.0),
    )


_A = np.array([-1.0, 1.0])


def _slab_parts(x):
    p = (float(x @ _A) / 2.0) * _A  # projection onto the line directed by (-1, 1)
    q = x - p
    return p, q


def ptest2() -> Problem:
    """Same jump as ptest1, but the low side is only defined on a thin slab.

    On x1 <= 0 the objective is finite only where the component along
    (-1, 1) is dominated by min(||q||^2, 1/100), q being the orthogonal
    remainder; elsewhere it is +inf (extreme barrier).
    """

    def f(x):
        if x[0] > 0:
            return float(np.max(np.abs(x))) + 1.0
        p, q = _slab_parts(x)
        pn = float(np.sqrt(p @ p))
        qn2 = float(q @ q)
        if pn <= min(qn2, 0.01):
            return float(np.max(np.abs(x)))
        return INF

    def classify(x):
        if x[0] > 0:
            return 1
        p, q = _slab_parts(x)
        return 2 if float(np.sqrt(p @ p)) <= min(float(q @ q), 0.01) else 0

    return Problem(
        name="ptest2",
        n=2,
        objective=f,
        classify=classify,
        default_start=_BENCH_START.copy(),
        known_min=(np.zeros(2), 0.0),
    )


def example41() -> Problem:
    """Plain max norm on R^2; every point on the unit square edge is a trap."""
    return Problem(
        name="example41",
        n=2,
        objective=lambda x: float(np.max(np.abs(x))),
        classify=lambda x: 1,
        default_start=np.array([-3.0, -3.0]),
        known_min=(np.zeros(2), 0.0),
    )


def prop73() -> Problem:
    """Counterexample objective whose better branch lives on a thin ray.

    The first piece covers the closed left half-plane plus the ray
    (0, inf) x {0}; its minimum -1 at (1, 0) is invisible to any method
    that never evaluates on the ray.
    """

    def on_thin_piece(x) -> bool:
        return x[0] <= 0 or (x[0] > 0 and x[1] == 0)

    def f(x):
        if on_thin_piece(x):
            return abs(float(x[0]) - 1.0) + abs(float(x[1])) - 1.0
        return abs(float(x[0])) + abs(float(x[1]))

    def classify(x):
        return 1 if on_thin_piece(x) else 2

    return Problem(
        name="prop73",
        n=2,
        objective=f,
        classify=classify,
        default_start=np.zeros(2),
        known_min=(np.array([1.0, 0.0]), -1.0),
    )


def smooth_norm2(n: int = 2) -> Problem:
    """Smooth convex smoke-test objective ||x||^2."""
    return Problem(
        name="smooth_norm2",
        n=n,
        objective=lambda x: float(x @ x),
        classify=lambda x: 1,
        default_start=np.ones(n),
        known_min=(np.zeros(n), 0.0),
    )


_REGISTRY: dict[str, Callable[[], Problem]] = {
    "ptest1": ptest1,
    "ptest2": ptest2,
    "example41": example41,
    "prop73": prop73,
    "smooth_norm2": smooth_norm2,
}


def problem_names() -> list[str]:
    return sorted(_REGISTRY)


def get_problem(name: str) -> Problem:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; available: {', '.join(problem_names())}") from None
