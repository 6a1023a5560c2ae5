import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hquat import quat as Q
from hquat.elementary import exp_array
from hquat.errors import ConvergenceError, DomainError, PoleOnPath
from hquat.quat import I, J, K, L, ZERO, Quaternion
from hquat.paths import (
    Circle,
    Partition,
    Polyline,
    integral_dln,
    lift_log,
    lift_log_sequential,
    line_integral,
    path_from_json,
    steps_resolved,
    stieltjes_integral,
    total_variation,
)
from hquat.words import Factor, Phrase, Word, eval_phrase, left_form, primitive

TWO_PI = 2 * math.pi
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rq(rng, scale=1.0):
    return Q.random_quaternion(rng, scale)


def test_partition_invariants():
    p = Partition.uniform(8)
    assert p.values[0] == 0.0 and p.values[-1] == 1.0
    assert p.norm == pytest.approx(1 / 8)
    r = p.refine()
    assert len(r.values) == 17 and set(p.values) <= set(r.values)
    with pytest.raises(DomainError):
        Partition(np.array([0.0, 0.6, 0.4, 1.0]))


def test_circle_validation_and_closedness():
    with pytest.raises(DomainError):
        Circle(ZERO, 1.0, J + K, 1)
    with pytest.raises(DomainError):
        Circle(ZERO, 1.0, I, 1)
    with pytest.raises(DomainError):
        Circle(ZERO, -1.0, J, 1)
    assert Circle(ZERO, 1.0, J, 2).closed
    assert not Circle(ZERO, 1.0, J, 0.25).closed
    c = Circle(K, 2.0, J, 1)
    assert abs(c.start() - (K + 2)) <= 1e-15 and abs(c.end() - c.start()) <= 1e-12


def test_total_variation_examples():
    seg = Polyline([ZERO, I])
    for n in (1, 4, 32):
        assert total_variation(seg, Partition.uniform(n)) == pytest.approx(1.0)
    circle = Circle(ZERO, 1.0, L, 1)
    assert total_variation(circle, circle.partition(12)) == pytest.approx(TWO_PI, abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_total_variation_grows_under_refinement(seed):
    rng = np.random.default_rng(seed)
    path = Polyline([rq(rng) for _ in range(4)])
    prev = 0.0
    for level in range(5):
        v = total_variation(path, path.partition(level))
        assert v >= prev - 1e-12
        prev = v


@pytest.mark.parametrize("turns", [1, 2, 3])
def test_inverse_over_circles(turns):
    M = (J + K) * (1 / math.sqrt(2))
    res = line_integral(left_form({-1: I}), Circle(ZERO, 0.7, M, turns), tol=1e-10)
    assert res.converged
    assert abs(res.value - TWO_PI * turns * M) <= 1e-9
    assert res.error_estimate == res.trace[-1]["delta"]


def test_polynomial_over_closed_circle_vanishes():
    rng = np.random.default_rng(2)
    for _ in range(3):
        p = Phrase(rq(rng), (Word((Factor(rq(rng), 1), Factor(rq(rng), 2))), Word.monomial(rq(rng), 1)))
        circle = Circle(rq(rng), 1.3, Q.random_unit_imaginary(rng), 1)
        assert abs(line_integral(p, circle, tol=1e-10).value) <= 1e-8


def test_identity_over_closed_circle_vanishes():
    res = line_integral(left_form({1: I}), Circle(J, 2.0, K, 1), tol=1e-10)
    assert abs(res.value) <= 1e-9


def test_reversal_and_concatenation():
    rng = np.random.default_rng(3)
    p = Phrase(ZERO, (Word((Factor(rq(rng), 1), Factor(rq(rng), 1))), Word.monomial(rq(rng), 2)))
    a, b, c = rq(rng), rq(rng), rq(rng)
    first, second = Polyline([a, b]), Polyline([b, c])
    whole = line_integral(p, first.then(second), tol=1e-11).value
    parts = line_integral(p, first, tol=1e-11).value + line_integral(p, second, tol=1e-11).value
    assert abs(whole - parts) <= 1e-8
    back = line_integral(p, first.reversed(), tol=1e-11).value
    assert abs(back + line_integral(p, first, tol=1e-11).value) <= 1e-8


def test_left_linearity():
    rng = np.random.default_rng(4)
    f1 = Phrase(J, (Word((Factor(rq(rng), 1), Factor(rq(rng), 1))),))
    f2 = left_form({-2: rq(rng), 2: rq(rng)}, J)
    lam1, lam2 = rq(rng), rq(rng)
    path = Polyline([J + 1, J + 1 + K, J + 2 * L])
    combo = f1.scale_left(lam1) + f2.scale_left(lam2)
    lhs = line_integral(combo, path, tol=1e-11).value
    rhs = lam1 * line_integral(f1, path, tol=1e-11).value + lam2 * line_integral(f2, path, tol=1e-11).value
    assert abs(lhs - rhs) <= 1e-8


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_fundamental_theorem_on_open_polylines(seed):
    rng = np.random.default_rng(seed)
    center = rq(rng)
    p = Phrase(center, (
        Word((Factor(rq(rng), int(rng.integers(0, 3))), Factor(rq(rng), int(rng.integers(0, 3))))),
        Word.monomial(rq(rng), int(rng.choice([-3, -2, 0, 1, 2]))),
    ))
    start = center + 1.5 * I + rq(rng, 0.3)
    path = Polyline([start, start + rq(rng, 0.5), start + rq(rng, 0.5)])
    if path.distance_to(center) < 0.5:
        return
    g = primitive(p)
    res = line_integral(p, path, tol=1e-10)
    expected = eval_phrase(g, path.end()) - eval_phrase(g, path.start())
    assert abs(res.value - expected) <= 1e-8 * max(1.0, abs(expected))


def test_pole_on_path_rejected():
    with pytest.raises(PoleOnPath):
        line_integral(left_form({-1: I}), Polyline([-I, I]))


def test_budget_exhaustion_reports_best_estimate():
    with pytest.raises(ConvergenceError) as info:
        line_integral(left_form({-1: I}), Circle(ZERO, 1.0, J, 1), tol=1e-30, max_refine=3)
    assert info.value.best is not None
    assert abs(info.value.best.value - TWO_PI * J) <= 1e-3


def test_dln_examples():
    a = Quaternion(0.5, -1.0, 0.2, 0.0)
    assert abs(integral_dln(Circle(a, 0.4, J, 1), a).value - TWO_PI * J) <= 1e-9
    quarter = integral_dln(Circle(a, 0.4, K, 0.25), a).value
    assert abs(quarter - (math.pi / 2) * K) <= 1e-9
    far = integral_dln(Circle(a + 5, 0.4, L, 1), a).value
    assert abs(far) <= 1e-9


def test_dln_point_on_path_rejected():
    with pytest.raises(DomainError):
        integral_dln(Circle(ZERO, 1.0, J, 1), I)


def test_stieltjes_examples():
    rng = np.random.default_rng(6)
    p = Phrase(ZERO, (Word((Factor(rq(rng), 1), Factor(rq(rng), 1))),))
    path = Polyline([I + J, 2 * I - K, L])
    ident = stieltjes_integral(p, left_form({1: I}), path, tol=1e-11).value
    assert abs(ident - line_integral(p, path, tol=1e-11).value) <= 1e-8
    assert abs(stieltjes_integral(p, left_form({0: J}), path, tol=1e-11).value) <= 1e-14
    seg = Polyline([J, 2 * K + 1])
    tele = stieltjes_integral(left_form({0: I}), left_form({2: I}), seg, tol=1e-11).value
    assert abs(tele - ((2 * K + 1) ** 2 - J * J)) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_lifted_log_matches_sequential_reference(seed):
    rng = np.random.default_rng(seed)
    M0, M1 = Q.random_unit_imaginary(rng), Q.random_unit_imaginary(rng)
    s = np.linspace(0, 1, 400)
    axes = np.outer(1 - s, M0.to_array()) + np.outer(s, M1.to_array())
    norms = np.linalg.norm(axes, axis=1)
    if norms.min() < 0.2:
        return
    axes /= norms[:, None]
    radius = 0.5 + 0.4 * np.cos(3 * s)
    pts = radius[:, None] * exp_array(TWO_PI * 1.5 * s[:, None] * axes)
    assert steps_resolved(pts)
    assert np.allclose(lift_log(pts), lift_log_sequential(pts), atol=1e-12)
    assert np.allclose(exp_array(lift_log(pts)), pts, atol=1e-12)


def test_path_json():
    c = path_from_json({"circle": {"a": "J", "r": 2, "M": "K", "turns": 1}})
    assert isinstance(c, Circle) and c.r == 2.0
    p = path_from_json({"polyline": ["0", "1+J", [0, 0, 1, 0]]})
    assert isinstance(p, Polyline) and abs(p.end() - K) <= 0
    with pytest.raises(DomainError):
        path_from_json({"spiral": {}})
