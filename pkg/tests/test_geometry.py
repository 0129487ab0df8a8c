from __future__ import annotations

import math

import numpy as np
import pytest

from covdsm.geometry import (
    Ball,
    ball_sample,
    clip_into_ball,
    dist_point_set,
    halton,
    halton_point,
    orthogonal_poll_directions,
    primes,
)


def test_dist_point_set_345():
    assert dist_point_set([0.0, 0.0], [[3.0, 4.0]]) == 5.0


def test_dist_point_set_member_is_zero():
    assert dist_point_set([1.0, 1.0], [[1.0, 1.0], [9.0, 9.0]]) == 0.0


def test_dist_point_set_empty_is_inf():
    assert dist_point_set([0.0, 0.0], np.empty((0, 2))) == math.inf


def test_dist_point_set_dimension_mismatch():
    with pytest.raises(ValueError):
        dist_point_set([0.0, 0.0], [[1.0, 2.0, 3.0]])


def test_dist_point_set_permutation_and_self_membership():
    rng = np.random.default_rng(3)
    for _ in range(50):
        x = rng.normal(size=3)
        pts = rng.normal(size=(7, 3))
        shuffled = pts[rng.permutation(7)]
        assert dist_point_set(x, pts) == dist_point_set(x, shuffled)
        with_self = np.vstack([pts, x])
        assert dist_point_set(x, with_self) == 0.0


def test_halton_radical_inverse_values():
    assert halton(1, 2) == 0.5
    assert halton(3, 2) == 0.75
    assert halton(2, 3) == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_halton_range_and_distinct():
    for base in (2, 3, 5):
        vals = [halton(i, base) for i in range(1, 201)]
        assert all(0.0 <= v < 1.0 for v in vals)
        assert len(set(vals)) == len(vals)


def test_halton_index_validation():
    with pytest.raises(ValueError):
        halton(0, 2)


def test_primes():
    assert primes(6) == [2, 3, 5, 7, 11, 13]
    assert primes(0) == []


def test_ball_sample_membership():
    for d in ball_sample(1.0, 2, 50, source="halton"):
        assert float(d @ d) <= 1.0


def test_ball_sample_first_halton_point_regression():
    # first unit-cube Halton point (0.5, 1/3) mapped into cl(B_0.1); locked
    (d,) = ball_sample(0.1, 2, 1, source="halton")
    assert d.tolist() == [0.0, -0.03333333333333334]


def test_ball_sample_uniform_deterministic():
    a = ball_sample(1.0, 2, 100, source="uniform", seed=7)
    b = ball_sample(1.0, 2, 100, source="uniform", seed=7)
    assert all(np.array_equal(p, q) for p, q in zip(a, b))


def test_ball_sample_rejects_unknown_source():
    with pytest.raises(ValueError):
        ball_sample(1.0, 2, 1, source="sobol")


def test_orthogonal_poll_directions_axis_reflector():
    dirs = {tuple(np.round(d, 12)) for d in orthogonal_poll_directions([1.0, 0.0], 1.0)}
    assert dirs == {(-1.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, -1.0)}


def test_orthogonal_poll_directions_norms():
    rng = np.random.default_rng(11)
    for _ in range(25):
        n = int(rng.integers(1, 6))
        u = rng.normal(size=n)
        delta = float(rng.uniform(0.01, 5.0))
        for d in orthogonal_poll_directions(u, delta):
            assert math.sqrt(float(d @ d)) == pytest.approx(delta, abs=1e-12)


def test_orthogonal_poll_directions_positive_spanning():
    # Monte-Carlo positive-spanning check: every random unit vector must have
    # positive inner product with some direction of the basis
    rng = np.random.default_rng(5)
    dirs = orthogonal_poll_directions(rng.normal(size=3), 1.0)
    for _ in range(1000):
        v = rng.normal(size=3)
        v /= math.sqrt(float(v @ v))
        assert max(float(v @ d) for d in dirs) > 0.0


def test_orthogonal_poll_directions_zero_seed_rejected():
    with pytest.raises(ValueError):
        orthogonal_poll_directions([0.0, 0.0], 1.0)


def test_halton_point_uses_one_base_per_coordinate():
    p = halton_point(1, [2, 3])
    assert p.tolist() == [0.5, pytest.approx(1.0 / 3.0, abs=1e-15)]


def test_ball():
    b = Ball(center=np.zeros(2), radius=1.0)
    assert b.contains([1.0, 0.0])
    assert not b.contains([1.0, 0.1])
    assert not Ball(center=np.zeros(2), radius=1.0, closed=False).contains([1.0, 0.0])
    with pytest.raises(ValueError):
        Ball(center=np.zeros(2), radius=0.0)


def test_clip_into_ball():
    d = clip_into_ball(np.array([1.0, 1.0]) / math.sqrt(2.0), 1.0)
    assert float(d @ d) <= 1.0
    same = clip_into_ball(np.array([0.25, 0.25]), 1.0)
    assert same.tolist() == [0.25, 0.25]
