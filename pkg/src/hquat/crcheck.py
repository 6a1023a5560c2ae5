"""Finite-difference checks of the quaternion Cauchy-Riemann system,
pairwise harmonicity and conformality."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import quat as Q
from .errors import DomainError
from .quat import Quaternion, left_matrix
from .words import ConjugatePhrase, Phrase, derivative_phrase, eval_phrase_array

DEFAULT_STEP = 1e-4
DEFAULT_TOL = 1e-5


def as_function(f) -> Callable[[np.ndarray], np.ndarray]:
    """Turn a phrase or a Quaternion -> Quaternion callable into an array map."""
    if isinstance(f, (Phrase, ConjugatePhrase)):
        return lambda z: eval_phrase_array(f, z)

    def call(z):
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            return Quaternion.coerce(f(Quaternion.from_array(z))).to_array()
        return np.array([Quaternion.coerce(f(Quaternion.from_array(p))).to_array() for p in z])

    return call


@dataclass
class RealJacobian:
    matrix: np.ndarray  # column i = derivative along the i-th basis direction
    step: float

    def column(self, i: int) -> Quaternion:
        return Quaternion.from_array(self.matrix[:, i])


def _central(F, z: np.ndarray, step: float) -> np.ndarray:
    eye = np.eye(4) * step
    pts = np.concatenate([z + eye, z - eye])
    vals = F(pts)
    return ((vals[:4] - vals[4:]) / (2 * step)).T


def frechet_jacobian(f, z, step: float = DEFAULT_STEP, richardson: bool = False) -> RealJacobian:
    """Central-difference Jacobian; with ``richardson`` the h and h/2 quotients
    are combined to cancel the O(h^2) term."""
    F = as_function(f)
    z = Quaternion.coerce(z).to_array()
    m = _central(F, z, step)
    if richardson:
        m = (4 * _central(F, z, step / 2) - m) / 3
    return RealJacobian(m, step)


@dataclass
class Report:
    residuals: dict
    tol: float
    step: float
    details: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol

    def to_json(self) -> dict:
        return {
            "residuals": self.residuals,
            "max_residual": self.max_residual,
            "tol": self.tol,
            "step": self.step,
            "passed": self.passed,
            **self.details,
        }


def check_cr(f, z, step: float = DEFAULT_STEP, tol: float = DEFAULT_TOL, richardson: bool = True) -> Report:
    """Residuals of dF/dv = (dF/dw) J^-1 = (dF/dx) K^-1 = (dF/dy) L^-1."""
    jac = frechet_jacobian(f, z, step, richardson)
    dv = jac.column(0)
    res = {}
    for i, (name, e) in enumerate((("J", Q.J), ("K", Q.K), ("L", Q.L)), start=1):
        res[name] = abs(dv - jac.column(i) * Q.inv(e))
    return Report(res, tol, step, {"derivative_along_I": Q.to_json(dv)})


_PAIRS = {"vw": (0, 1), "wx": (1, 2), "xy": (2, 3), "vy": (0, 3)}
_COMPONENTS = ("G11", "H11", "G12", "H12")


def pair_laplacians(f, z, step: float = DEFAULT_STEP) -> dict:
    """Second central differences of the four pair Laplacians on every component."""
    F = as_function(f)
    z = Quaternion.coerce(z).to_array()
    eye = np.eye(4) * step
    f0 = F(z)
    second = []
    for i in range(4):
        pts = np.stack([z + eye[i], z - eye[i]])
        vals = F(pts)
        second.append((vals[0] + vals[1] - 2 * f0) / step**2)
    out = {}
    for pname, (i, j) in _PAIRS.items():
        lap = second[i] + second[j]
        for c, cname in enumerate(_COMPONENTS):
            out[f"{pname}:{cname}"] = float(lap[c])
    return out


def check_harmonic(f, z, step: float = DEFAULT_STEP, tol: float = DEFAULT_TOL, richardson: bool = True) -> Report:
    lap = pair_laplacians(f, z, step)
    if richardson:
        half = pair_laplacians(f, z, step / 2)
        lap = {k: (4 * half[k] - lap[k]) / 3 for k in lap}
    return Report({k: abs(v) for k, v in lap.items()}, tol, step)


def left_multiplier(jacobian: np.ndarray, rel: float = 1e-6):
    """lambda if the Jacobian is h -> lambda h (to relative accuracy rel), else None."""
    lam = jacobian[:, 0]
    scale = max(1.0, float(np.abs(jacobian).max()))
    if np.max(np.abs(jacobian - left_matrix(lam))) > rel * scale:
        return None
    return Quaternion.from_array(lam)


def check_conformal(f, z, pairs, tol: float = 1e-9, step: float = DEFAULT_STEP) -> Report:
    """Angle preservation of tangent pairs under a derivative that is a left multiplication."""
    z = Quaternion.coerce(z)
    if isinstance(f, Phrase):
        jac = derivative_phrase(f).matrix(z - f.center)
        rel = 1e-9
    else:
        jac = frechet_jacobian(f, z, step, richardson=True).matrix
        rel = 1e-6
    lam = left_multiplier(jac, rel)
    if lam is None:
        raise DomainError("the derivative is not a left multiplication (not right superlinear)")
    if abs(lam) < 1e-12:
        raise DomainError("vanishing derivative")
    res = {}
    for n, (h, k) in enumerate(pairs):
        h = Quaternion.coerce(h)
        k = Quaternion.coerce(k)
        before = Q.dot(h, k) / (abs(h) * abs(k))
        lh, lk = lam * h, lam * k
        after = Q.dot(lh, lk) / (abs(lh) * abs(lk))
        res[f"pair{n}"] = abs(after - before)
    return Report(res, tol, step, {"multiplier": Q.to_json(lam)})


def z_only_representation(p) -> bool:
    """Symbolic certificate: the phrase is written without the conjugate variable."""
    if isinstance(p, Phrase):
        return True
    if isinstance(p, ConjugatePhrase):
        return all(f.symbol == "z" for w in p.words for f in w.factors)
    raise DomainError("expected a phrase")


def classical_cr_residual(f, t: complex, step: float = DEFAULT_STEP) -> float:
    """|d f11 / d conj(t)| at the diagonal point z = diag(t, conj t).

    f11 = v + i w of f(Re t + Im t J); the Wirtinger derivative is computed by
    central differences in Re t and Im t.
    """
    F = as_function(f)
    t = complex(t)

    def f11(s: complex) -> complex:
        val = F(np.array([s.real, s.imag, 0.0, 0.0]))
        return complex(val[0], val[1])

    dx = (f11(t + step) - f11(t - step)) / (2 * step)
    dy = (f11(t + 1j * step) - f11(t - 1j * step)) / (2 * step)
    return abs(0.5 * (dx + 1j * dy))
