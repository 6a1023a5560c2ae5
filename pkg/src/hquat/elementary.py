"""Exponential, argument, principal logarithm and polar form.

The argument is returned in turns: ``arg(z) = wJ + xK + yL`` with norm < 1 and
``|z| exp(2 pi arg(z)) = z``.  The direction is normalised so that the first
non-zero of (w, x, y) is positive; a negative real number gets the fixed
direction J, i.e. ``arg = J/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchDegeneracy, DomainError
from .quat import Quaternion, config, left_matrix, qmul, right_matrix

TWO_PI = 2.0 * math.pi


def _sinc(phi):
    """sin(phi)/phi with a series guard near 0 (works on arrays)."""
    phi = np.asarray(phi, dtype=float)
    small = np.abs(phi) < 1e-8
    safe = np.where(small, 1.0, phi)
    return np.where(small, 1.0 - phi * phi / 6.0, np.sin(safe) / safe)


def exp_array(a):
    """Vectorised exponential of quaternion arrays (..., 4)."""
    a = np.asarray(a, dtype=float)
    v = a[..., 0]
    im = a[..., 1:]
    phi = np.sqrt(np.sum(im * im, axis=-1))
    ev = np.exp(v)
    out = np.empty_like(a)
    out[..., 0] = ev * np.cos(phi)
    out[..., 1:] = (ev * _sinc(phi))[..., None] * im
    return out


def exp(z: Quaternion) -> Quaternion:
    return Quaternion.from_array(exp_array(Quaternion.coerce(z).to_array()))


def exp_series(z: Quaternion, terms: int = 40) -> Quaternion:
    """Truncated power series sum z^n/n!, kept as an independent reference."""
    z = Quaternion.coerce(z)
    total = Quaternion(1.0)
    term = Quaternion(1.0)
    for n in range(1, terms):
        term = term * z / n
        total = total + term
    return total


@dataclass(frozen=True)
class ArgVector:
    """Argument in turns: the quaternion ``w J + x K + y L`` with norm < 1."""

    w: float
    x: float
    y: float

    def as_quaternion(self) -> Quaternion:
        return Quaternion(0.0, self.w, self.x, self.y)

    def turns(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y)

    def angle(self) -> float:
        return TWO_PI * self.turns()


def _positive_direction(u: np.ndarray) -> bool:
    for c in u:
        if c > 0:
            return True
        if c < 0:
            return False
    return True


def arg(z: Quaternion) -> ArgVector:
    z = Quaternion.coerce(z)
    r = abs(z)
    if r == 0.0:
        raise DomainError("arg of zero is undefined")
    im = z.to_array()[1:]
    phi = float(np.linalg.norm(im))
    if phi <= config.eps * r:
        # on the real axis
        if z.v > 0:
            return ArgVector(0.0, 0.0, 0.0)
        return ArgVector(0.5, 0.0, 0.0)
    u = im / phi
    theta = math.atan2(phi, z.v)  # in (0, pi)
    if not _positive_direction(u):
        u = -u
        theta = TWO_PI - theta
    a = theta / TWO_PI * u
    return ArgVector(float(a[0]), float(a[1]), float(a[2]))


def ln_principal(z: Quaternion) -> Quaternion:
    z = Quaternion.coerce(z)
    r = abs(z)
    if r == 0.0:
        raise DomainError("logarithm of zero is undefined")
    a = arg(z)
    return Quaternion(math.log(r), TWO_PI * a.w, TWO_PI * a.x, TWO_PI * a.y)


def polar(z: Quaternion) -> tuple[float, ArgVector]:
    z = Quaternion.coerce(z)
    r = abs(z)
    if r == 0.0:
        raise DomainError("polar form of zero is undefined")
    return r, arg(z)


def from_polar(rho: float, argv: ArgVector) -> Quaternion:
    return rho * exp(TWO_PI * argv.as_quaternion())


# ---------------------------------------------------------------------------
# derivative of exp


def exp_derivative(z: Quaternion, eps: float | None = None, max_terms: int = 400) -> np.ndarray:
    """4x4 real matrix of h -> sum_n sum_k z^k h z^(n-k-1) / n!.

    Built from the recurrence S_n = L_z S_(n-1) + R_(z^(n-1)) for the
    unnormalised inner sums; terms are added until the bound n |z|^(n-1)/n!
    on the next term drops below eps.
    """
    z = Quaternion.coerce(z)
    eps = config.eps * 1e-4 if eps is None else eps
    za = z.to_array()
    lz = left_matrix(za)
    r = abs(z)
    total = np.eye(4)
    s_prev = np.eye(4)  # S_1
    zpow = za.copy()  # z^(n-1) for the next step, n = 2
    fact = 1.0
    for n in range(2, max_terms):
        fact *= n
        s_n = lz @ s_prev + right_matrix(zpow)
        total = total + s_n / fact
        s_prev = s_n
        zpow = qmul(zpow, za)
        if n * r ** (n - 1) / fact < eps and n > r:
            break
    return total


def exp_derivative_apply(z, h):
    """Closed form of exp'(z).h, vectorised over (..., 4) arrays.

    With z = v + theta u: the component of h in span(1, u) is multiplied by
    exp(z) and the orthogonal imaginary part by e^v sin(theta)/theta.
    """
    z = np.asarray(z, dtype=float)
    h = np.asarray(h, dtype=float)
    im = z[..., 1:]
    theta = np.sqrt(np.sum(im * im, axis=-1))
    safe = np.where(theta > 0, theta, 1.0)
    u = im / safe[..., None]
    hv = h[..., 1:]
    along = np.sum(hv * u, axis=-1)
    par = np.zeros_like(h)
    par[..., 0] = h[..., 0]
    par[..., 1:] = along[..., None] * u
    perp = h - par
    ez = exp_array(z)
    return qmul(ez, par) + (np.exp(z[..., 0]) * _sinc(theta))[..., None] * perp


def exp_derivative_inverse_apply(w, k, noise: float = 1e-12):
    """Solve exp'(w).h = k for h, vectorised.

    Singular when sin(theta) = 0 with theta != 0; the orthogonal part of k must
    then vanish (up to ``noise`` relative to |k|, plus a few ulps of |exp w|
    since k is usually a difference of points of that size) and is dropped, otherwise
    :class:`BranchDegeneracy` is raised.
    """
    w = np.asarray(w, dtype=float)
    k = np.asarray(k, dtype=float)
    im = w[..., 1:]
    theta = np.sqrt(np.sum(im * im, axis=-1))
    safe = np.where(theta > 0, theta, 1.0)
    u = im / safe[..., None]
    kv = k[..., 1:]
    along = np.sum(kv * u, axis=-1)
    par = np.zeros_like(k)
    par[..., 0] = k[..., 0]
    par[..., 1:] = along[..., None] * u
    perp = k - par
    zeta = exp_array(w)
    zeta_inv = zeta * np.array([1.0, -1.0, -1.0, -1.0]) / np.sum(zeta * zeta, axis=-1)[..., None]
    sc = _sinc(theta)
    bad = np.abs(sc) < 1e-9
    perp_n = np.sqrt(np.sum(perp * perp, axis=-1))
    k_n = np.sqrt(np.sum(k * k, axis=-1))
    floor = 64 * np.finfo(float).eps * np.exp(w[..., 0])
    if np.any(bad & (perp_n > noise * k_n + floor)):
        raise BranchDegeneracy("derivative of the logarithm is singular in this direction")
    factor = np.where(bad, 0.0, 1.0 / (np.exp(w[..., 0]) * np.where(bad, 1.0, sc)))
    return qmul(zeta_inv, par) + factor[..., None] * perp


def ln_array(a, eps: float | None = None):
    """Vectorised principal logarithm; same branch convention as :func:`ln_principal`."""
    eps = config.eps if eps is None else eps
    a = np.asarray(a, dtype=float)
    r = qnorm_(a)
    if np.any(r == 0.0):
        raise DomainError("logarithm of zero is undefined")
    im = a[..., 1:]
    phi = np.sqrt(np.sum(im * im, axis=-1))
    on_axis = phi <= eps * r
    safe = np.where(on_axis, 1.0, phi)
    u = im / safe[..., None]
    theta = np.arctan2(phi, a[..., 0])
    # first non-zero component of the direction decides the orientation
    first = np.zeros(phi.shape)
    for c in range(3):
        first = np.where(first == 0.0, np.sign(u[..., c]), first)
    flip = (first < 0) & ~on_axis
    theta = np.where(flip, TWO_PI - theta, theta)
    u = np.where(flip[..., None], -u, u)
    neg = on_axis & (a[..., 0] < 0)
    u = np.where(on_axis[..., None], np.array([1.0, 0.0, 0.0]), u)
    theta = np.where(on_axis, np.where(neg, math.pi, 0.0), theta)
    out = np.empty_like(a)
    out[..., 0] = np.log(r)
    out[..., 1:] = theta[..., None] * u
    return out


def qnorm_(a):
    return np.sqrt(np.sum(a * a, axis=-1))
