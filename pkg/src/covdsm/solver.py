"""Step implementations and iteration drivers for the covering direct search solvers."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .geometry import INF, as_point, halton_point, orthogonal_poll_directions, primes
from .history import History
from .mesh import DecreaseSpec, MeshSpec, rho, round_to_lattice, round_to_mesh
from .oracles import GridOracleSession, OracleSpec, RevealingSequence, oracle_directions, revealing_directions
from .problems import Problem


class ConfigError(ValueError):
    """Invalid solver configuration (bad pairing, infeasible start point, ...)."""


VARIANTS = ("mesh-based", "sufficient-decrease", "generic")

_VARIANT_MESH = {"mesh-based": "lattice", "sufficient-decrease": "continuous", "generic": "continuous"}
_VARIANT_DECREASE = {"mesh-based": "zero", "sufficient-decrease": "min-quadratic", "generic": "zero"}


# -- named strategies, so configs stay JSON round-trippable -------------------


def _momentum_search(ctx) -> list[np.ndarray]:
    if ctx.k < 1 or ctx.x_prev is None:
        return []
    return [3.0 * (ctx.x - ctx.x_prev)]


def _example41_search(ctx) -> list[np.ndarray]:
    if ctx.k % 3 != 0:
        return []
    q = ctx.k // 3
    target = ((-1.0) ** q) * (1.0 + 2.0 ** (-q)) * np.ones(2)
    return [target - ctx.x]


def _example41_poll(ctx) -> list[np.ndarray]:
    d = ctx.delta
    return [np.array([d, 0.0]), np.array([-d, 0.0]), np.array([0.0, d]), np.array([0.0, -d])]


SEARCH_STRATEGIES: dict[str, Callable] = {
    "momentum": _momentum_search,
    "example41": _example41_search,
}

POLL_STRATEGIES: dict[str, Callable] = {
    "example41-coordinate": _example41_poll,
}


def _avoid_positive_x_ray(pts: np.ndarray) -> np.ndarray:
    return (pts[:, 0] > 0) & (pts[:, 1] == 0)


AVOID_FILTERS: dict[str, Callable] = {
    "positive-x-ray": _avoid_positive_x_ray,
}


@dataclass
class SolverConfig:
    """Full run configuration; serializes losslessly for manifest round-trips.

    `variant` selects the driver and the default mesh/decrease pairing:
    mesh-based and sufficient-decrease run the radius-managed driver, generic
    runs the radius-free covering method. `mesh_kind`/`decrease_kind` may
    override the pairing (the benchmark preset pairs a continuous mesh with a
    zero margin).
    """

    variant: str
    r: float
    delta0: float = 1.0
    tau: float = 0.5
    expand_on_success: bool = True
    covering: Union[OracleSpec, RevealingSequence, None] = None
    search: Union[str, Callable, None] = None
    poll: Union[str, Callable, None] = "orthogonal"
    delta_min: float = 1e-8
    k_max: int = 300
    eval_max: Optional[int] = None
    seed: int = 0
    x0: Optional[np.ndarray] = None
    mesh_kind: Optional[str] = None
    decrease_kind: Optional[str] = None
    avoid: Optional[str] = None
    hash_cell: Optional[float] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if not (0.0 < self.tau < 1.0):
            raise ConfigError("tau must lie in (0, 1)")
        if self.r <= 0 or self.delta0 <= 0:
            raise ConfigError("r and delta0 must be positive")
        if self.poll is None and self.variant != "generic":
            raise ConfigError("the poll step may be disabled only in the generic variant")
        if isinstance(self.search, str) and self.search not in SEARCH_STRATEGIES:
            raise ConfigError(f"unknown search strategy {self.search!r}")
        if isinstance(self.poll, str) and self.poll not in ("orthogonal", *POLL_STRATEGIES):
            raise ConfigError(f"unknown poll strategy {self.poll!r}")
        if self.avoid is not None and self.avoid not in AVOID_FILTERS:
            raise ConfigError(f"unknown avoid filter {self.avoid!r}")
        if self.x0 is not None:
            self.x0 = as_point(self.x0)

    def mesh_spec(self) -> MeshSpec:
        kind = self.mesh_kind or _VARIANT_MESH[self.variant]
        return MeshSpec(kind=kind, delta0=self.delta0 if kind == "lattice" else None)

    def decrease_spec(self) -> DecreaseSpec:
        kind = self.decrease_kind or _VARIANT_DECREASE[self.variant]
        return DecreaseSpec(kind=kind, delta0=self.delta0 if kind == "min-quadratic" else None)

    def to_dict(self) -> dict:
        if callable(self.search) or callable(self.poll):
            raise ConfigError("configs with raw callables cannot be serialized; register a named strategy")
        cov = None
        if isinstance(self.covering, OracleSpec):
            cov = {"oracle": self.covering.to_dict()}
        elif isinstance(self.covering, RevealingSequence):
            cov = {"revealing": self.covering.to_dict()}
        return {
            "variant": self.variant,
            "r": self.r,
            "delta0": self.delta0,
            "tau": self.tau,
            "expand_on_success": self.expand_on_success,
            "covering": cov,
            "search": self.search,
            "poll": self.poll,
            "delta_min": self.delta_min,
            "k_max": self.k_max,
            "eval_max": self.eval_max,
            "seed": self.seed,
            "x0": None if self.x0 is None else self.x0.tolist(),
            "mesh_kind": self.mesh_kind,
            "decrease_kind": self.decrease_kind,
            "avoid": self.avoid,
            "hash_cell": self.hash_cell,
        }

    @staticmethod
    def from_dict(d: dict) -> "SolverConfig":
        d = dict(d)
        cov = d.get("covering")
        if cov is not None:
            if "oracle" in cov:
                d["covering"] = OracleSpec.from_dict(cov["oracle"])
            elif "revealing" in cov:
                d["covering"] = RevealingSequence.from_dict(cov["revealing"])
            else:
                raise ConfigError(f"unrecognized covering section {cov!r}")
        if d.get("x0") is not None:
            d["x0"] = np.asarray(d["x0"], dtype=np.float64)
        return SolverConfig(**d)


@dataclass
class StepOutcome:
    step: str
    executed: bool
    directions: list = field(default_factory=list)
    points: list = field(default_factory=list)
    values: list = field(default_factory=list)
    best_point: Optional[np.ndarray] = None
    best_value: float = INF
    success: bool = False

    @property
    def status(self) -> str:
        if not self.executed or not self.points:
            return "skipped"
        return "success" if self.success else "failed"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "directions": [d.tolist() for d in self.directions],
            "points": [p.tolist() for p in self.points],
            "values": list(self.values),
            "best_point": None if self.best_point is None else self.best_point.tolist(),
            "best_value": self.best_value,
        }


@dataclass
class IterationRecord:
    k: int
    x: np.ndarray
    f_x: float
    delta: Optional[float]
    delta_min_radius: Optional[float]
    margin: float
    outcomes: list
    success: bool
    success_step: Optional[str]
    x_next: np.ndarray
    f_next: float
    delta_next: Optional[float]
    delta_min_next: Optional[float]
    best_f: float
    unique_evals: int
    proposals: int

    def to_dict(self) -> dict:
        steps = {o.step: o.to_dict() for o in self.outcomes}
        return {
            "k": self.k,
            "x": self.x.tolist(),
            "f_x": self.f_x,
            "delta": self.delta,
            "delta_min": self.delta_min_radius,
            "margin": self.margin,
            "steps": steps,
            "success": self.success,
            "success_step": self.success_step,
            "t": self.x_next.tolist(),
            "f_t": self.f_next,
            "delta_next": self.delta_next,
            "delta_min_next": self.delta_min_next,
            "best_f": self.best_f,
            "unique_evals": self.unique_evals,
            "proposals": self.proposals,
        }


@dataclass
class RunResult:
    problem: str
    config: SolverConfig
    iterations: list
    history: History
    termination: str
    best_point: np.ndarray
    best_value: float
    final_x: np.ndarray
    final_f: float
    final_set: int
    wall_seconds: float
    covering_metadata: Optional[dict] = None

    @property
    def unique_evaluations(self) -> int:
        return self.history.unique_evaluations

    def trace_jsonl(self) -> str:
        # wall time stays out of the trace so that repeated seeds serialize
        # byte-identically
        return "\n".join(json.dumps(rec.to_dict()) for rec in self.iterations) + "\n"

    def summary_dict(self) -> dict:
        return {
            "problem": self.problem,
            "termination": self.termination,
            "iterations": len(self.iterations),
            "best_point": self.best_point.tolist(),
            "best_value": self.best_value,
            "final_x": self.final_x.tolist(),
            "final_f": self.final_f,
            "final_set": self.final_set,
            "unique_evaluations": self.unique_evaluations,
            "total_proposals": self.iterations[-1].proposals if self.iterations else 0,
            "wall_seconds": self.wall_seconds,
            "covering": self.covering_metadata,
            "config": self.config.to_dict(),
        }


@dataclass
class _StepContext:
    k: int
    x: np.ndarray
    x_prev: Optional[np.ndarray]
    delta: Optional[float]
    delta_min_radius: Optional[float]
    r: float


class _Driver:
    """Shared machinery for one solver run."""

    def __init__(self, problem: Problem, config: SolverConfig):
        self.problem = problem
        self.config = config
        self.mesh = config.mesh_spec()
        self.decrease = config.decrease_spec()
        self.generic = config.variant == "generic"
        self.exclude = AVOID_FILTERS[config.avoid] if config.avoid else None
        cell = config.hash_cell if config.hash_cell else config.r / 10.0
        self.history = History(cell_size=cell, n=problem.n)
        self.proposals = 0
        self.ell = 0  # strict decreases of the smallest radius so far
        self.session = None
        if isinstance(config.covering, OracleSpec) and config.covering.kind == "exact-grid":
            self.session = GridOracleSession(config.covering, problem.n, exclude=self.exclude)
        self.attained_covering: list = []
        self.poll_bases = primes(problem.n)

    # -- step executors -----------------------------------------------------

    def evaluate_step(self, name: str, dirs: list, ctx, f_x: float, margin: float, k: int) -> StepOutcome:
        if not dirs:
            return StepOutcome(step=name, executed=False)
        pts = [ctx.x + d for d in dirs]
        vals = [self.history.lookup_or_evaluate(p, self.problem.objective, k, name) for p in pts]
        self.proposals += len(pts)
        best = 0
        for i in range(1, len(vals)):
            if vals[i] < vals[best]:
                best = i
        success = vals[best] < f_x - margin
        return StepOutcome(
            step=name,
            executed=True,
            directions=dirs,
            points=pts,
            values=vals,
            best_point=pts[best],
            best_value=vals[best],
            success=success,
        )

    def covering_directions(self, ctx) -> list:
        cov = self.config.covering
        if isinstance(cov, RevealingSequence):
            raw = revealing_directions(cov, self.ell, self.problem.n)
            return [round_to_mesh(self.mesh, ctx.delta_min_radius, d, cov.r) for d in raw]
        if self.session is not None:
            raw = self.session.directions(ctx.x, self.history)
            self.attained_covering.append(self.session.last_attained)
        else:
            raw = oracle_directions(
                cov,
                ctx.x,
                self.history,
                mesh=self.mesh,
                nu=ctx.delta_min_radius,
                seed=self.config.seed,
                exclude=self.exclude,
            )
        if self.generic:
            return list(raw)
        return [round_to_mesh(self.mesh, ctx.delta_min_radius, d, cov.r) for d in raw]

    def search_directions(self, ctx) -> list:
        strat = self.config.search
        if strat is None:
            return []
        fn = SEARCH_STRATEGIES[strat] if isinstance(strat, str) else strat
        dirs = [as_point(d) for d in fn(ctx)]
        if self.mesh.kind == "lattice" and ctx.delta_min_radius is not None:
            dirs = [round_to_lattice(self.mesh, ctx.delta_min_radius, d) for d in dirs]
        return dirs

    def poll_directions(self, ctx) -> list:
        strat = self.config.poll
        if strat is None:
            return []
        scale = ctx.delta if ctx.delta is not None else self.config.delta0
        if strat == "orthogonal":
            index = ctx.k + 1 + self.config.seed * 1013
            u = 2.0 * halton_point(index, self.poll_bases) - 1.0
            if float(u @ u) < 1e-24:
                u = np.zeros(self.problem.n)
                u[0] = 1.0
            dirs = orthogonal_poll_directions(u, scale)
        else:
            fn = POLL_STRATEGIES[strat] if isinstance(strat, str) else strat
            poll_ctx = _StepContext(ctx.k, ctx.x, ctx.x_prev, scale, ctx.delta_min_radius, ctx.r)
            dirs = [as_point(d) for d in fn(poll_ctx)]
        if self.mesh.kind == "lattice" and ctx.delta_min_radius is not None:
            dirs = [round_to_mesh(self.mesh, ctx.delta_min_radius, d, scale) for d in dirs]
        if self.exclude is not None and dirs:
            trial = np.asarray([ctx.x + d for d in dirs])
            keep = ~np.asarray(self.exclude(trial), dtype=bool)
            dirs = [d for d, k_ in zip(dirs, keep) if k_]
        return dirs


def run(problem: Problem, config: SolverConfig) -> RunResult:
    """Execute one solver run and return the full iteration trace.

    Steps run with skip-on-success semantics. The radius-managed drivers
    evaluate the search step first and the covering step second: the
    covering step is a search-framework step, so this preserves every
    radius-management property, and it is the order under which the
    momentum strategy drives early progress instead of being starved by
    marginal covering successes (it is also the order the constructed
    two-trap replay requires). The generic variant evaluates its covering
    step first, manages no radii, and accepts any strict decrease.
    """
    t_start = time.perf_counter()
    drv = _Driver(problem, config)
    x = as_point(config.x0 if config.x0 is not None else problem.default_start)
    if x.shape[0] != problem.n:
        raise ConfigError(f"x0 has dimension {x.shape[0]}, problem needs {problem.n}")
    f_x = drv.history.lookup_or_evaluate(x, problem.objective, 0, "initial")
    drv.proposals += 1
    if f_x == INF:
        raise ConfigError("f(x0) is infinite: the start point lies outside the domain")

    order = ["covering", "search", "poll"] if drv.generic else ["search", "covering", "poll"]

    generic = drv.generic
    delta: Optional[float] = None if generic else config.delta0
    dmin: Optional[float] = None if generic else config.delta0
    x_prev: Optional[np.ndarray] = None
    best_f = f_x
    records: list[IterationRecord] = []
    termination = "k_max"

    for k in range(config.k_max):
        if not generic and delta < config.delta_min:
            termination = "delta_min"
            break
        if config.eval_max is not None and drv.history.unique_evaluations >= config.eval_max:
            termination = "eval_max"
            break
        ctx = _StepContext(k=k, x=x, x_prev=x_prev, delta=delta, delta_min_radius=dmin, r=config.r)
        margin = 0.0 if generic else rho(drv.decrease, dmin)

        outcomes: list[StepOutcome] = []
        success = False
        success_step = None
        t_point, f_t = x, f_x
        for name in order:
            if name == "covering":
                if config.covering is None:
                    outcomes.append(StepOutcome(step="covering", executed=False))
                    continue
                dirs = drv.covering_directions(ctx)
            elif name == "search":
                dirs = drv.search_directions(ctx)
            else:
                dirs = drv.poll_directions(ctx)
            out = drv.evaluate_step(name, dirs, ctx, f_x, margin, k)
            outcomes.append(out)
            if out.executed:
                best_f = min(best_f, out.best_value)
            if out.success:
                success = True
                success_step = name
                t_point, f_t = out.best_point, out.best_value
                for later in order[order.index(name) + 1 :]:
                    outcomes.append(StepOutcome(step=later, executed=False))
                break

        if generic:
            delta_next = dmin_next = None
        else:
            if success:
                delta_next = delta / config.tau if config.expand_on_success else delta
            else:
                delta_next = config.tau * delta
            dmin_next = min(dmin, delta_next)
            if dmin_next < dmin:
                drv.ell += 1

        records.append(
            IterationRecord(
                k=k,
                x=x,
                f_x=f_x,
                delta=delta,
                delta_min_radius=dmin,
                margin=margin,
                outcomes=outcomes,
                success=success,
                success_step=success_step,
                x_next=t_point,
                f_next=f_t,
                delta_next=delta_next,
                delta_min_next=dmin_next,
                best_f=best_f,
                unique_evals=drv.history.unique_evaluations,
                proposals=drv.proposals,
            )
        )

        x_prev = x
        x, f_x = t_point, f_t
        if not generic:
            delta, dmin = delta_next, dmin_next
            if delta < 1e-300:
                termination = "delta_underflow"
                break

    covering_meta = None
    if drv.session is not None:
        attained = [a for a in drv.attained_covering if a is not None and a > 0]
        spacing = config.covering.spacing
        diagonal = spacing * (problem.n**0.5)
        covering_meta = {
            "grid_spacing": spacing,
            "grid_diagonal": diagonal,
            "min_attained_distance": min(attained) if attained else None,
            # a finite solving grid makes the oracle formally approximate;
            # this is its certified fraction of the optimal farthest distance
            "effective_alpha_lower_bound": max(0.0, 1.0 - diagonal / min(attained)) if attained else None,
        }

    vals = drv.history.values_array()
    best_idx = int(np.argmin(vals))
    return RunResult(
        problem=problem.name,
        config=config,
        iterations=records,
        history=drv.history,
        termination=termination,
        best_point=drv.history.points_array()[best_idx].copy(),
        best_value=float(vals[best_idx]),
        final_x=x,
        final_f=f_x,
        final_set=problem.classify(x),
        wall_seconds=time.perf_counter() - t_start,
        covering_metadata=covering_meta,
    )


# -- shipped presets ---------------------------------------------------------


def benchmark_config(with_covering: bool, seed: int = 0) -> SolverConfig:
    """The benchmark configuration: continuous mesh, zero margin, r = delta0/10,
    momentum search, orthogonal poll, stop at delta < 1e-8 or 300 iterations."""
    covering = OracleSpec(kind="exact-grid", r=0.1, spacing=0.002) if with_covering else None
    return SolverConfig(
        variant="sufficient-decrease",
        decrease_kind="zero",
        r=0.1,
        delta0=1.0,
        tau=0.5,
        expand_on_success=True,
        covering=covering,
        search="momentum",
        poll="orthogonal",
        delta_min=1e-8,
        k_max=300,
        seed=seed,
    )


def example41_config() -> SolverConfig:
    """Exact replay configuration for the two-trap revealing baseline."""
    return SolverConfig(
        variant="mesh-based",
        r=1.0,
        delta0=1.0,
        tau=0.5,
        expand_on_success=False,
        covering=RevealingSequence(kind="example41-quadrants", r=1.0),
        search="example41",
        poll="example41-coordinate",
        delta_min=1e-12,
        k_max=33,
        seed=0,
        x0=np.array([-3.0, -3.0]),
    )


def prop73_config() -> SolverConfig:
    """Generic covering method on the thin-ray counterexample, ray avoided."""
    return SolverConfig(
        variant="generic",
        r=0.5,
        delta0=0.5,
        covering=OracleSpec(kind="exact-grid", r=0.5, spacing=0.01),
        search=None,
        poll="orthogonal",
        k_max=100,
        seed=0,
        avoid="positive-x-ray",
        x0=np.zeros(2),
    )
