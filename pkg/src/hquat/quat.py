"""Quaternion arithmetic in the Pauli basis I, J, K, L.

A quaternion ``z = vI + wJ + xK + yL`` is stored by its four real
coefficients.  The product follows J^2 = K^2 = L^2 = -I, JK = L, KL = J,
LJ = K, which is the 2x2 complex matrix product of

    I = [[1, 0], [0, 1]]      J = [[i, 0], [0, -i]]
    K = [[0, 1], [-1, 0]]     L = [[0, i], [i, 0]]

Two layers are provided: the immutable :class:`Quaternion` value type used
by the symbolic code, and vectorised helpers (``qmul``, ``qinv``, ...) that
act on numpy arrays whose last axis has length 4.  The integrators work on
the array layer.
"""

from __future__ import annotations

import contextlib
import math
import re
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .errors import DomainError


class _Config:
    """Process-wide numeric settings."""

    def __init__(self):
        self.eps = 1e-10


config = _Config()


@contextlib.contextmanager
def tolerance(eps: float) -> Iterator[None]:
    """Temporarily change the global equality tolerance."""
    old = config.eps
    config.eps = float(eps)
    try:
        yield
    finally:
        config.eps = old


# ---------------------------------------------------------------------------
# array layer


def qmul(a, b):
    """Hamilton product of quaternion arrays (broadcast over leading axes)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, a1, a2, a3 = np.moveaxis(a, -1, 0)
    b0, b1, b2, b3 = np.moveaxis(b, -1, 0)
    return np.stack(
        (
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ),
        axis=-1,
    )


def qconj(a):
    a = np.asarray(a, dtype=float)
    return a * np.array([1.0, -1.0, -1.0, -1.0])


def qnorm(a):
    return np.sqrt(np.sum(np.asarray(a, dtype=float) ** 2, axis=-1))


def qinv(a):
    a = np.asarray(a, dtype=float)
    n2 = np.sum(a * a, axis=-1)
    if np.any(n2 == 0.0):
        raise DomainError("inverse of the zero quaternion")
    return qconj(a) / n2[..., None]


def qpow(a, n: int):
    """Integer power of a quaternion array by repeated squaring."""
    a = np.asarray(a, dtype=float)
    if n < 0:
        a, n = qinv(a), -n
    result = np.zeros_like(a)
    result[..., 0] = 1.0
    base = a
    while n:
        if n & 1:
            result = qmul(result, base)
        n >>= 1
        if n:
            base = qmul(base, base)
    return result


def left_matrix(q) -> np.ndarray:
    """Real 4x4 matrix of h -> q h."""
    v, w, x, y = np.asarray(q, dtype=float)
    return np.array([[v, -w, -x, -y], [w, v, -y, x], [x, y, v, -w], [y, -x, w, v]])


def right_matrix(q) -> np.ndarray:
    """Real 4x4 matrix of h -> h q."""
    v, w, x, y = np.asarray(q, dtype=float)
    return np.array([[v, -w, -x, -y], [w, v, y, -x], [x, -y, v, w], [y, x, -w, v]])


# ---------------------------------------------------------------------------
# value type


@dataclass(frozen=True, eq=False)
class Quaternion:
    """Immutable quaternion ``v I + w J + x K + y L``."""

    v: float = 0.0
    w: float = 0.0
    x: float = 0.0
    y: float = 0.0

    def __post_init__(self):
        for name in ("v", "w", "x", "y"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise DomainError(f"non-finite quaternion coefficient {name}={val}")
            object.__setattr__(self, name, val)

    # construction -----------------------------------------------------------
    @classmethod
    def from_array(cls, a) -> "Quaternion":
        a = np.asarray(a, dtype=float).reshape(4)
        return cls(a[0], a[1], a[2], a[3])

    @classmethod
    def coerce(cls, value) -> "Quaternion":
        if isinstance(value, Quaternion):
            return value
        if isinstance(value, (int, float, np.floating, np.integer)):
            return cls(float(value))
        if isinstance(value, str):
            return parse(value)
        if isinstance(value, dict):
            return from_json(value)
        return cls.from_array(value)

    @classmethod
    def from_matrix(cls, m) -> "Quaternion":
        m = np.asarray(m, dtype=complex)
        t, u = m[0, 0], m[0, 1]
        return cls(t.real, t.imag, u.real, u.imag)

    # views ------------------------------------------------------------------
    def to_array(self) -> np.ndarray:
        return np.array([self.v, self.w, self.x, self.y])

    def as_matrix(self) -> np.ndarray:
        """2x2 complex matrix [[t, u], [-conj(u), conj(t)]], t = v+iw, u = x+iy."""
        t = complex(self.v, self.w)
        u = complex(self.x, self.y)
        return np.array([[t, u], [-u.conjugate(), t.conjugate()]])

    @property
    def real(self) -> float:
        return self.v

    @property
    def imag(self) -> "Quaternion":
        return Quaternion(0.0, self.w, self.x, self.y)

    def norm2(self) -> float:
        return self.v * self.v + self.w * self.w + self.x * self.x + self.y * self.y

    def __abs__(self) -> float:
        return math.sqrt(self.norm2())

    def is_real(self, eps: float | None = None) -> bool:
        eps = config.eps if eps is None else eps
        return abs(self.imag) <= eps * max(1.0, abs(self))

    def is_zero(self, eps: float | None = None) -> bool:
        eps = config.eps if eps is None else eps
        return abs(self) <= eps

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return Quaternion(self.v + o.v, self.w + o.w, self.x + o.x, self.y + o.y)

    __radd__ = __add__

    def __sub__(self, other):
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return Quaternion(self.v - o.v, self.w - o.w, self.x - o.x, self.y - o.y)

    def __rsub__(self, other):
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Quaternion(-self.v, -self.w, -self.x, -self.y)

    def __mul__(self, other):
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return mul(self, o)

    def __rmul__(self, other):
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return mul(o, self)

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Quaternion(self.v / other, self.w / other, self.x / other, self.y / other)
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return mul(self, inv(o))

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)):
            raise TypeError("only integer powers are defined")
        return Quaternion.from_array(qpow(self.to_array(), int(n)))

    def conj(self) -> "Quaternion":
        return conj(self)

    def inv(self) -> "Quaternion":
        return inv(self)

    # comparison -------------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, _Infinity):
            return False
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return isclose(self, o)

    __hash__ = None  # tolerance-based equality cannot be hashed consistently

    def key(self) -> tuple:
        """Exact coefficient tuple, for bitwise comparisons and dictionary keys."""
        return (self.v, self.w, self.x, self.y)

    def __repr__(self) -> str:
        return f"Quaternion({self.v!r}, {self.w!r}, {self.x!r}, {self.y!r})"

    def __str__(self) -> str:
        return format_quaternion(self)


def _maybe(value) -> Quaternion | None:
    if isinstance(value, Quaternion):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Quaternion(float(value))
    return None


I = Quaternion(1.0)
J = Quaternion(0.0, 1.0)
K = Quaternion(0.0, 0.0, 1.0)
L = Quaternion(0.0, 0.0, 0.0, 1.0)
ZERO = Quaternion()
BASIS = (I, J, K, L)


def mul(a: Quaternion, b: Quaternion) -> Quaternion:
    return Quaternion(
        a.v * b.v - a.w * b.w - a.x * b.x - a.y * b.y,
        a.v * b.w + a.w * b.v + a.x * b.y - a.y * b.x,
        a.v * b.x - a.w * b.y + a.x * b.v + a.y * b.w,
        a.v * b.y + a.w * b.x - a.x * b.w + a.y * b.v,
    )


def conj(z: Quaternion) -> Quaternion:
    return Quaternion(z.v, -z.w, -z.x, -z.y)


def inv(z: Quaternion) -> Quaternion:
    n2 = z.norm2()
    if n2 == 0.0:
        raise DomainError("inverse of the zero quaternion")
    return Quaternion(z.v / n2, -z.w / n2, -z.x / n2, -z.y / n2)


def isclose(a: Quaternion, b: Quaternion, eps: float | None = None) -> bool:
    eps = config.eps if eps is None else eps
    scale = max(1.0, abs(a), abs(b))
    return abs(a - b) <= eps * scale


def commutes(a: Quaternion, b: Quaternion, eps: float | None = None) -> bool:
    return isclose(a * b, b * a, eps)


def dot(a: Quaternion, b: Quaternion) -> float:
    """Euclidean inner product of the coefficient vectors."""
    return a.v * b.v + a.w * b.w + a.x * b.x + a.y * b.y


# ---------------------------------------------------------------------------
# projections

_COEF = {"RI": 0, "RJ": 1, "RK": 2, "RL": 3}
_PLANES = {
    "RI+RJ": (0, 1),
    "RI+RK": (0, 2),
    "RI+RL": (0, 3),
    "RJ+RK": (1, 2),
    "RJ+RL": (1, 3),
    "RK+RL": (2, 3),
    "RJ+RK+RL": (1, 2, 3),
}
_PLANAR = {"pi1": 1, "pi2": 2, "pi3": 3}


def _sandwich_sum(z: Quaternion, signs) -> Quaternion:
    # signs for z, JzJ, KzK, LzL
    s0, s1, s2, s3 = signs
    return s0 * z + s1 * (J * z * J) + s2 * (K * z * K) + s3 * (L * z * L)


def project(z: Quaternion, subspace: str):
    """Project onto a coordinate subspace using the sandwich identities.

    Tags ``RI, RJ, RK, RL`` are the axis projections, ``RI+RJ`` style tags the
    six coordinate planes (and ``RJ+RK+RL`` the imaginary part).  ``pi1``,
    ``pi2``, ``pi3`` return the planar pairs (v, w), (v, x), (v, y).
    """
    if subspace in _PLANAR:
        coef = z.to_array()
        return (float(coef[0]), float(coef[_PLANAR[subspace]]))
    if subspace == "RI":
        return _sandwich_sum(z, (1, -1, -1, -1)) / 4
    if subspace == "RJ":
        return _sandwich_sum(z, (1, -1, 1, 1)) / 4
    if subspace == "RK":
        return _sandwich_sum(z, (1, 1, -1, 1)) / 4
    if subspace == "RL":
        return _sandwich_sum(z, (1, 1, 1, -1)) / 4
    if subspace == "RI+RJ":
        return (z - J * z * J) / 2
    if subspace == "RI+RK":
        return (z - K * z * K) / 2
    if subspace == "RI+RL":
        return (z - L * z * L) / 2
    if subspace == "RJ+RK":
        return (z + L * z * L) / 2
    if subspace == "RJ+RL":
        return (z + K * z * K) / 2
    if subspace == "RK+RL":
        return (z + J * z * J) / 2
    if subspace == "RJ+RK+RL":
        return (3 * z + J * z * J + K * z * K + L * z * L) / 4
    raise DomainError(f"unknown subspace tag {subspace!r}")


def project_coefficients(z: Quaternion, subspace: str) -> Quaternion:
    """Reference projection by zeroing coefficients (used to cross-check)."""
    if subspace in _COEF:
        idx = (_COEF[subspace],)
    elif subspace in _PLANES:
        idx = _PLANES[subspace]
    else:
        raise DomainError(f"unknown subspace tag {subspace!r}")
    out = np.zeros(4)
    a = z.to_array()
    for i in idx:
        out[i] = a[i]
    return Quaternion.from_array(out)


SUBSPACES = tuple(_COEF) + tuple(_PLANES) + tuple(_PLANAR)


# ---------------------------------------------------------------------------
# extended points and the chordal metric


class _Infinity:
    """The point at infinity of the one-point compactification."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("hquat.INF")

    def _reject(self, *_):
        raise DomainError("arithmetic on the point at infinity is not defined")

    __add__ = __radd__ = __sub__ = __rsub__ = __mul__ = __rmul__ = _reject
    __truediv__ = __rtruediv__ = __neg__ = __abs__ = _reject


INF = _Infinity()
ExtendedPoint = Union[Quaternion, _Infinity]

_NORTH = np.array([1.0, 0.0, 0.0, 0.0, 0.0])


def to_sphere(p: ExtendedPoint) -> np.ndarray:
    """Inverse stereographic map onto the unit sphere S^4 in R^5.

    Projection is from the north pole (1,0,0,0,0) onto the hyperplane tangent
    at the south pole, so 0 goes to (-1,0,0,0,0) and INF to the north pole.
    """
    if p is INF:
        return _NORTH.copy()
    z = Quaternion.coerce(p).to_array()
    n2 = float(z @ z)
    return np.concatenate(([(n2 - 4.0) / (n2 + 4.0)], 4.0 * z / (n2 + 4.0)))


def from_sphere(xi) -> ExtendedPoint:
    """Stereographic map S^4 -> H u {INF}."""
    xi = np.asarray(xi, dtype=float)
    if 1.0 - xi[0] <= 1e-15:
        return INF
    return Quaternion.from_array(2.0 * xi[1:] / (1.0 - xi[0]))


def chordal(a: ExtendedPoint, b: ExtendedPoint) -> float:
    """Euclidean distance in R^5 between the sphere images of a and b."""
    return float(np.linalg.norm(to_sphere(a) - to_sphere(b)))


# ---------------------------------------------------------------------------
# text and JSON encodings

_TERM = re.compile(r"\s*([+-]?)\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*([IJKL]?)\s*")


def parse(text: str) -> Quaternion:
    """Parse literals such as ``1+2J-0.5K+3e-2L``, ``-J`` or ``4``."""
    s = text.strip()
    if not s:
        raise DomainError("empty quaternion literal")
    coef = [0.0, 0.0, 0.0, 0.0]
    pos = 0
    seen = False
    while pos < len(s):
        m = _TERM.match(s, pos)
        if m is None or m.end() == pos:
            raise DomainError(f"cannot parse quaternion literal {text!r}")
        sign, number, unit = m.groups()
        if number is None and not unit:
            raise DomainError(f"cannot parse quaternion literal {text!r}")
        if seen and not sign:
            raise DomainError(f"missing operator in quaternion literal {text!r}")
        value = float(number) if number is not None else 1.0
        if sign == "-":
            value = -value
        coef["IJKL".index(unit) if unit else 0] += value
        seen = True
        pos = m.end()
    return Quaternion(*coef)


def format_quaternion(z: Quaternion) -> str:
    parts = []
    for val, unit in zip(z.key(), ("", "J", "K", "L")):
        if val == 0.0 and unit:
            continue
        text = repr(float(val))
        parts.append(("" if text.startswith("-") else "+") + text + unit)
    text = "".join(parts)
    return text[1:] if text.startswith("+") else text


def to_json(z: Quaternion) -> dict:
    return {"v": z.v, "w": z.w, "x": z.x, "y": z.y}


def from_json(obj) -> Quaternion:
    if isinstance(obj, Quaternion):
        return obj
    if isinstance(obj, str):
        return parse(obj)
    if isinstance(obj, (int, float)):
        return Quaternion(float(obj))
    if isinstance(obj, dict):
        unknown = set(obj) - {"v", "w", "x", "y"}
        if unknown:
            raise DomainError(f"unknown quaternion keys {sorted(unknown)}")
        return Quaternion(obj.get("v", 0.0), obj.get("w", 0.0), obj.get("x", 0.0), obj.get("y", 0.0))
    if isinstance(obj, (list, tuple)) and len(obj) == 4:
        return Quaternion(*obj)
    raise DomainError(f"cannot decode quaternion from {obj!r}")


def random_quaternion(rng: np.random.Generator, scale: float = 1.0) -> Quaternion:
    return Quaternion.from_array(rng.normal(size=4) * scale)


def random_unit_imaginary(rng: np.random.Generator) -> Quaternion:
    a = rng.normal(size=3)
    a /= np.linalg.norm(a)
    return Quaternion(0.0, *a)
