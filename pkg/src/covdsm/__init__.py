"""Derivative-free direct search with a covering step, for discontinuous objectives."""

from .analysis import best_value_curve, detect_refined_points, fill_distance, success_ratio_curves
from .geometry import Ball, ball_sample, dist_point_set, halton, orthogonal_poll_directions
from .history import EvalRecord, History
from .mesh import DecreaseSpec, MeshSpec, mesh_cell, mesh_points_in_ball, rho, round_to_mesh
from .oracles import (
    OracleSpec,
    RevealingSequence,
    distance_transform_2d,
    oracle_directions,
    revealing_directions,
    revealing_index,
    verify_beta,
)
from .problems import Problem, get_problem, problem_names
from .solver import ConfigError, RunResult, SolverConfig, benchmark_config, example41_config, prop73_config, run

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "ConfigError",
    "DecreaseSpec",
    "EvalRecord",
    "History",
    "MeshSpec",
    "OracleSpec",
    "Problem",
    "RevealingSequence",
    "RunResult",
    "SolverConfig",
    "ball_sample",
    "benchmark_config",
    "best_value_curve",
    "detect_refined_points",
    "dist_point_set",
    "distance_transform_2d",
    "example41_config",
    "fill_distance",
    "get_problem",
    "halton",
    "mesh_cell",
    "mesh_points_in_ball",
    "oracle_directions",
    "orthogonal_poll_directions",
    "problem_names",
    "prop73_config",
    "revealing_directions",
    "revealing_index",
    "rho",
    "round_to_mesh",
    "run",
    "success_ratio_curves",
    "verify_beta",
]
