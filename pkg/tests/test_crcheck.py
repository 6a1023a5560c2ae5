import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hquat import quat as Q
from hquat.crcheck import (
    check_conformal,
    check_cr,
    check_harmonic,
    classical_cr_residual,
    frechet_jacobian,
    pair_laplacians,
    z_only_representation,
)
from hquat.elementary import exp
from hquat.errors import DomainError
from hquat.quat import I, J, K, L, ZERO, Quaternion
from hquat.words import ConjFactor, ConjugatePhrase, ConjugateWord, extend_complex, left_form

seeds = st.integers(min_value=0, max_value=2**32 - 1)
CONJ = ConjugatePhrase(ZERO, (ConjugateWord((ConjFactor(I, "zc", 1),)),))


def rq(rng, scale=1.0):
    return Q.random_quaternion(rng, scale)


def test_jacobian_examples():
    z = Quaternion(0.3, -0.2, 0.7, 1.1)
    assert np.allclose(frechet_jacobian(left_form({1: I}), z).matrix, np.eye(4), atol=1e-10)
    assert np.allclose(frechet_jacobian(CONJ, z).matrix, np.diag([1.0, -1.0, -1.0, -1.0]), atol=1e-10)
    jac = frechet_jacobian(exp, ZERO, step=1e-3)
    assert np.allclose(jac.matrix, np.eye(4), atol=1e-6)
    assert jac.step == 1e-3


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_affine_maps_pass_cr(seed):
    rng = np.random.default_rng(seed)
    f = left_form({1: rq(rng), 0: rq(rng)})
    report = check_cr(f, rq(rng), step=1e-4)
    assert report.passed and report.max_residual <= 1e-6


def test_conjugate_fails_cr():
    report = check_cr(CONJ, Quaternion(0.5, 0.1, -0.3, 0.2))
    assert not report.passed and report.max_residual >= 1.0


def test_harmonic_examples():
    rng = np.random.default_rng(12)
    affine = left_form({1: rq(rng), 0: rq(rng)})
    assert check_harmonic(affine, rq(rng)).max_residual <= 1e-5
    squared_norm = lambda q: Quaternion(q.norm2())  # noqa: E731
    lap = pair_laplacians(squared_norm, Quaternion(0.3, 0.2, 0.1, -0.4), 1e-3)
    assert lap["vw:G11"] == pytest.approx(4.0, abs=1e-6)
    assert not check_harmonic(squared_norm, J).passed


def test_harmonic_residual_is_second_order():
    def harmonic_all(q):
        val = math.exp(q.v) * math.cos(q.w) * math.cosh(q.x) * math.cos(q.y)
        return Quaternion(val, val, val, val)

    point = Quaternion(0.3, 0.2, -0.4, 0.5)
    coarse = max(map(abs, pair_laplacians(harmonic_all, point, 1e-2).values()))
    fine = max(map(abs, pair_laplacians(harmonic_all, point, 5e-3).values()))
    assert 3.0 <= coarse / fine <= 5.0


def test_cr_residual_of_a_non_cr_map_does_not_shrink_with_step():
    f = left_form({2: J, 1: K})
    z = Quaternion(0.4, 0.1, -0.3, 0.2)
    coarse = check_cr(f, z, step=1e-2, richardson=False).max_residual
    fine = check_cr(f, z, step=5e-3, richardson=False).max_residual
    # the map is not CR, so only the truncation part of the residual shrinks
    assert coarse > 0.1 and abs(coarse - fine) < 1e-3


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_cr_pass_implies_harmonic_pass(seed):
    rng = np.random.default_rng(seed)
    f = left_form({1: rq(rng), 0: rq(rng)})
    z = rq(rng)
    if check_cr(f, z).passed:
        assert check_harmonic(f, z).passed


def test_complex_extension_satisfies_classical_cr():
    cubic = extend_complex([1 + 2j, -0.5j, 0.3, 1 - 1j], 0.1 + 0.2j)
    for t in (0.4 + 0.3j, -0.2 + 0.7j):
        assert classical_cr_residual(cubic, t) <= 1e-6


def test_complex_extension_is_not_cr_in_all_directions():
    cubic = extend_complex([1 + 2j, -0.5j, 0.3, 1 - 1j])
    assert check_cr(cubic, Quaternion(0.4, 0.3, 0.2, -0.1)).max_residual > 1.0
    assert check_cr(cubic, Quaternion(0.4, 0.3)).max_residual > 0.1


def test_conformal_examples():
    report = check_conformal(left_form({1: J}), Quaternion(0.3, 0.1, 0.2, 0.4), [(I, K)])
    assert report.passed and report.residuals["pair0"] == pytest.approx(0.0, abs=1e-15)
    rng = np.random.default_rng(13)
    f = left_form({1: rq(rng), 0: rq(rng)})
    pairs = [(rq(rng), rq(rng)) for _ in range(10)]
    assert check_conformal(f, rq(rng), pairs).max_residual <= 1e-9


def test_conformal_rejects_non_left_multiplication():
    with pytest.raises(DomainError):
        check_conformal(left_form({2: I}), Quaternion(0.3, 0.5, -0.2, 0.1), [(I, J)])
    with pytest.raises(DomainError):
        check_conformal(left_form({1: ZERO, 0: J}), I, [(I, J)])


def test_conformal_accepts_callables():
    A = Quaternion(0.5, -1.0, 0.3, 0.2)
    report = check_conformal(lambda q: A * q + J, K, [(I, L), (J, K + L)])
    assert report.passed


def test_symbolic_z_only_certificate():
    assert z_only_representation(left_form({2: J}))
    assert not z_only_representation(CONJ)
    with pytest.raises(DomainError):
        z_only_representation(lambda q: q)


def test_report_json():
    data = check_cr(left_form({1: J}), K).to_json()
    assert set(data) >= {"residuals", "max_residual", "tol", "step", "passed"}
    assert data["passed"] is True
