import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hquat import quat as Q
from hquat.elementary import (
    ArgVector,
    arg,
    exp,
    exp_array,
    exp_derivative,
    exp_derivative_apply,
    exp_derivative_inverse_apply,
    exp_series,
    from_polar,
    ln_array,
    ln_principal,
    polar,
)
from hquat.errors import BranchDegeneracy, DomainError
from hquat.quat import I, J, K, L, ZERO, Quaternion

from strategies import imaginary, nonzero_quaternions, quaternions


def test_exp_examples():
    assert exp(ZERO).key() == I.key()
    assert abs(exp(math.pi * J) + I) <= 1e-15


@pytest.mark.parametrize(
    "z, expected",
    [
        (I, (0.0, 0.0, 0.0)),
        (J, (0.25, 0.0, 0.0)),
        (-J, (0.75, 0.0, 0.0)),
        (-I, (0.5, 0.0, 0.0)),
        (1 + J, (0.125, 0.0, 0.0)),
        (K - L, (0.0, 0.17677669529663687, -0.17677669529663687)),
    ],
)
def test_arg_examples(z, expected):
    a = arg(z)
    assert (a.w, a.x, a.y) == pytest.approx(expected, abs=1e-15)


def test_arg_of_zero_rejected():
    with pytest.raises(DomainError):
        arg(ZERO)
    with pytest.raises(DomainError):
        ln_principal(ZERO)


def test_ln_examples():
    assert abs(ln_principal(math.e * I) - I) <= 1e-15
    assert abs(ln_principal(J) - (math.pi / 2) * J) <= 1e-15
    assert abs(ln_principal(-J) - (3 * math.pi / 2) * J) <= 1e-14
    assert abs(ln_principal(-I) - math.pi * J) <= 1e-15


@given(nonzero_quaternions)
def test_arg_conventions(z):
    a = arg(z)
    vec = (a.w, a.x, a.y)
    assert math.sqrt(sum(c * c for c in vec)) < 1
    assert a.w >= 0
    if a.w == 0:
        assert a.x >= 0
        if a.x == 0:
            assert a.y >= 0


# imaginary parts below config.eps * |z| are snapped to the real axis
SNAP = 2 * Q.config.eps


@given(nonzero_quaternions)
def test_exp_ln_round_trip(z):
    assert abs(exp(ln_principal(z)) - z) <= SNAP * abs(z)
    assert ln_principal(z).v == pytest.approx(math.log(abs(z)), abs=1e-14)


@given(nonzero_quaternions)
def test_polar_round_trip(z):
    rho, a = polar(z)
    assert rho == pytest.approx(abs(z))
    assert abs(from_polar(rho, a) - z) <= SNAP * abs(z)
    assert abs(rho * exp(2 * math.pi * a.as_quaternion()) - z) <= SNAP * abs(z)


def test_near_real_axis_snaps_to_the_principal_branch():
    tiny = Quaternion(3.0, 0.0, 0.0, -2e-10)
    assert (arg(tiny).w, arg(tiny).x, arg(tiny).y) == (0.0, 0.0, 0.0)
    assert abs(ln_principal(tiny).imag) == 0.0
    assert abs(exp(ln_principal(tiny)) - tiny) <= SNAP * 3.0


@given(quaternions)
def test_exp_modulus(z):
    assert abs(exp(z)) == pytest.approx(math.exp(z.v), rel=1e-12)


@settings(max_examples=60)
@given(quaternions)
def test_exp_matches_series(z):
    e = exp(z)
    assert abs(e - exp_series(z, 40)) <= 1e-12 * max(1.0, abs(e))


@given(imaginary, st.integers(min_value=1, max_value=3))
def test_exp_periodicity_on_imaginary_axis(z, n):
    shifted = z * (1 + 2 * math.pi * n / abs(z))
    assert abs(exp(shifted) - exp(z)) <= 1e-10


def test_exp_is_onto_the_unit_sphere():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        q = Q.random_quaternion(rng)
        q = q * (1 / abs(q))
        p = 2 * math.pi * arg(q).as_quaternion()
        assert p.v == 0.0
        assert abs(exp(p) - q) <= 1e-10


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_exp_on_diagonal_matches_complex(v, w):
    e = exp(Quaternion(v, w))
    c = cmath.exp(complex(v, w))
    assert e.key()[2:] == (0.0, 0.0)
    assert (e.v, e.w) == pytest.approx((c.real, c.imag), rel=1e-12, abs=1e-14)


def test_vectorised_versions_match_scalar():
    rng = np.random.default_rng(11)
    z = rng.normal(size=(200, 4)) * 2
    ex = exp_array(z)
    ln = ln_array(z)
    for row, e, l in zip(z, ex, ln):
        q = Quaternion.from_array(row)
        assert np.allclose(e, exp(q).to_array(), atol=1e-13)
        assert np.allclose(l, ln_principal(q).to_array(), atol=1e-13)


@settings(max_examples=40)
@given(quaternions, quaternions)
def test_exp_derivative_forms_agree(z, h):
    series = exp_derivative(z) @ h.to_array()
    closed = exp_derivative_apply(z.to_array(), h.to_array())
    assert np.allclose(series, closed, atol=1e-10 * max(1.0, abs(exp(z))) * max(1.0, abs(h)))


def test_exp_derivative_matches_finite_differences():
    z = Quaternion(0.3, -0.7, 1.1, 0.4)
    step = 1e-6
    fd = np.column_stack([
        ((exp(z + step * e) - exp(z - step * e)) / (2 * step)).to_array() for e in Q.BASIS
    ])
    assert np.allclose(exp_derivative(z), fd, atol=1e-9)


def test_exp_derivative_at_zero_is_identity():
    assert np.allclose(exp_derivative(ZERO), np.eye(4), atol=1e-15)


@settings(max_examples=40)
@given(quaternions, quaternions)
def test_exp_derivative_inverse(w, k):
    theta = abs(w.imag)
    if abs(math.sin(theta)) < 1e-3 and theta > 1e-3:
        return
    h = exp_derivative_inverse_apply(w.to_array(), k.to_array())
    back = exp_derivative_apply(w.to_array(), h)
    assert np.allclose(back, k.to_array(), atol=1e-9 * max(1.0, abs(k)))


def test_exp_derivative_inverse_at_branch_degeneracy():
    w = (math.pi * J).to_array()
    # along span(1, J) the map is invertible even at theta = pi
    h = exp_derivative_inverse_apply(w, (I + 2 * J).to_array())
    assert np.allclose(exp_derivative_apply(w, h), (I + 2 * J).to_array())
    with pytest.raises(BranchDegeneracy):
        exp_derivative_inverse_apply(w, K.to_array())


def test_arg_vector_turns_and_angle():
    a = ArgVector(0.25, 0.0, 0.0)
    assert a.as_quaternion().key() == (0.0, 0.25, 0.0, 0.0)
    assert a.turns() == pytest.approx(0.25)
    assert a.angle() == pytest.approx(math.pi / 2)
