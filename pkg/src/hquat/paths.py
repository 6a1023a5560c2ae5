"""Paths, partition sums and line integrals of phrases.

The integral of a phrase f along a path is the limit of the right-endpoint sums

    sum_k fhat(z_{k+1}) . (z_{k+1} - z_k)

where ``fhat(z).h = (D g)(z).h`` for the primitive g of f.  Sums are taken
on dyadically refined partitions and accelerated with Richardson
extrapolation (the raw sums converge only like 1/N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import quat as Q
from .elementary import exp_array, ln_array
from .errors import ConvergenceError, DomainError, PoleOnPath, UnsupportedShape
from .quat import Quaternion, qmul, qnorm
from .words import Phrase, dual_apply, eval_phrase_array

CHUNK = 1 << 16
DEFAULT_MAX_REFINE = 20


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class Partition:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or len(v) < 2 or v[0] != 0.0 or v[-1] != 1.0 or np.any(np.diff(v) <= 0):
            raise DomainError("a partition must increase strictly from 0 to 1")
        object.__setattr__(self, "values", v)

    @property
    def norm(self) -> float:
        return float(np.max(np.diff(self.values)))

    @classmethod
    def uniform(cls, n: int) -> "Partition":
        return cls(np.linspace(0.0, 1.0, n + 1))

    def refine(self) -> "Partition":
        mids = (self.values[:-1] + self.values[1:]) / 2
        out = np.empty(2 * len(self.values) - 1)
        out[0::2] = self.values
        out[1::2] = mids
        return Partition(out)


class Path:
    """Continuous path gamma: [0, 1] -> H."""

    def points(self, s) -> np.ndarray:
        raise NotImplementedError

    def partition(self, level: int) -> Partition:
        raise NotImplementedError

    def samples(self, level: int) -> np.ndarray:
        return self.points(self.partition(level).values)

    def start(self) -> Quaternion:
        return Quaternion.from_array(self.points(np.array([0.0]))[0])

    def end(self) -> Quaternion:
        return Quaternion.from_array(self.points(np.array([1.0]))[0])

    @property
    def closed(self) -> bool:
        return Q.isclose(self.start(), self.end(), 1e-12)

    def reversed(self) -> "Path":
        return Reversed(self)

    def translated(self, c) -> "Path":
        raise NotImplementedError

    def distance_to(self, point) -> float:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Circle(Path):
    """gamma(s) = a + r exp(2 pi s turns M)."""

    a: Quaternion
    r: float
    M: Quaternion
    turns: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "a", Quaternion.coerce(self.a))
        M = Quaternion.coerce(self.M)
        if abs(M.v) > 1e-12 or abs(abs(M) - 1.0) > 1e-9:
            raise DomainError("circle generator M must be a unit imaginary quaternion")
        object.__setattr__(self, "M", M)
        if not self.r > 0:
            raise DomainError("circle radius must be positive")

    @property
    def closed(self) -> bool:
        return float(self.turns).is_integer()

    def base_segments(self) -> int:
        return max(16, 16 * math.ceil(abs(self.turns)))

    def partition(self, level: int) -> Partition:
        return Partition.uniform(self.base_segments() << level)

    def points(self, s):
        s = np.asarray(s, dtype=float)
        arg = (2 * math.pi * self.turns * s)[..., None] * self.M.to_array()
        return self.a.to_array() + self.r * exp_array(arg)

    def translated(self, c) -> "Circle":
        return Circle(self.a + Quaternion.coerce(c), self.r, self.M, self.turns)

    def distance_to(self, point) -> float:
        c = (Quaternion.coerce(point) - self.a).to_array()
        m = self.M.to_array()
        in_plane = np.array([c[0], 0.0, 0.0, 0.0]) + np.dot(c, m) * m
        off = c - in_plane
        return float(math.hypot(np.linalg.norm(in_plane) - self.r, np.linalg.norm(off)))


@dataclass(frozen=True, eq=False)
class Polyline(Path):
    """Piecewise linear path through the given vertices, chord-length parametrised."""

    vertices: tuple
    per_segment: int = 4

    def __post_init__(self):
        verts = tuple(Quaternion.coerce(v) for v in self.vertices)
        if len(verts) < 2:
            raise DomainError("a polyline needs at least two vertices")
        object.__setattr__(self, "vertices", verts)
        arr = np.array([v.to_array() for v in verts])
        lengths = qnorm(np.diff(arr, axis=0))
        if np.all(lengths == 0):
            raise DomainError("degenerate polyline")
        keep = np.concatenate(([True], lengths > 0))
        object.__setattr__(self, "_arr", arr[keep])
        cum = np.concatenate(([0.0], np.cumsum(lengths[lengths > 0])))
        object.__setattr__(self, "_knots", cum / cum[-1])

    def points(self, s):
        s = np.asarray(s, dtype=float)
        knots = self._knots
        idx = np.clip(np.searchsorted(knots, s, side="right") - 1, 0, len(knots) - 2)
        t = (s - knots[idx]) / (knots[idx + 1] - knots[idx])
        a = self._arr[idx]
        b = self._arr[idx + 1]
        out = a + t[..., None] * (b - a)
        # pin vertices exactly
        exact = np.isclose(t, 1.0, rtol=0, atol=0)
        out[exact] = b[exact]
        return out

    def partition(self, level: int) -> Partition:
        n = self.per_segment << level
        pieces = [np.linspace(k0, k1, n + 1)[:-1] for k0, k1 in zip(self._knots[:-1], self._knots[1:])]
        return Partition(np.concatenate(pieces + [np.array([1.0])]))

    def samples(self, level: int) -> np.ndarray:
        n = self.per_segment << level
        t = np.linspace(0.0, 1.0, n + 1)[:-1]
        segs = [a + t[:, None] * (b - a) for a, b in zip(self._arr[:-1], self._arr[1:])]
        return np.concatenate(segs + [self._arr[-1:]])

    def start(self):
        return Quaternion.from_array(self._arr[0])

    def end(self):
        return Quaternion.from_array(self._arr[-1])

    def translated(self, c) -> "Polyline":
        c = Quaternion.coerce(c)
        return Polyline(tuple(v + c for v in self.vertices), self.per_segment)

    def distance_to(self, point) -> float:
        p = Quaternion.coerce(point).to_array()
        best = math.inf
        for a, b in zip(self._arr[:-1], self._arr[1:]):
            d = b - a
            t = np.clip(np.dot(p - a, d) / np.dot(d, d), 0.0, 1.0)
            best = min(best, float(np.linalg.norm(a + t * d - p)))
        return best

    def then(self, other: "Polyline") -> "Polyline":
        return Polyline(self.vertices + other.vertices[1:], self.per_segment)


@dataclass(frozen=True, eq=False)
class Reversed(Path):
    inner: Path

    def points(self, s):
        return self.inner.points(1.0 - np.asarray(s, dtype=float))

    def partition(self, level: int) -> Partition:
        return Partition(np.sort(1.0 - self.inner.partition(level).values))

    def samples(self, level: int) -> np.ndarray:
        return self.inner.samples(level)[::-1]

    @property
    def closed(self) -> bool:
        return self.inner.closed

    def reversed(self) -> Path:
        return self.inner

    def translated(self, c) -> Path:
        return Reversed(self.inner.translated(c))

    def distance_to(self, point) -> float:
        return self.inner.distance_to(point)


def path_from_json(obj) -> Path:
    if not isinstance(obj, dict):
        raise DomainError("path JSON must be an object")
    if "circle" in obj:
        c = obj["circle"]
        return Circle(Q.from_json(c.get("a", 0.0)), float(c["r"]), Q.from_json(c["M"]), float(c.get("turns", 1.0)))
    if "polyline" in obj:
        return Polyline(tuple(Q.from_json(v) for v in obj["polyline"]))
    raise DomainError("path JSON needs a 'circle' or 'polyline' entry")


def total_variation(path: Path, partition: Partition | None = None) -> float:
    """v(gamma; P) = sum |gamma(c_{k+1}) - gamma(c_k)|."""
    if partition is None:
        partition = path.partition(0)
    pts = path.points(partition.values)
    return float(np.sum(qnorm(np.diff(pts, axis=0))))


# ---------------------------------------------------------------------------
# branch-continuous logarithm along sampled curves


def lift_log(Y, start=None) -> np.ndarray:
    """Continuous logarithm along consecutive samples Y[0], Y[1], ...

    Each imaginary part is written as a * u with u a consistently oriented
    unit direction; the angles a are unwrapped so that neighbouring values
    differ by less than pi.  ``start`` fixes the branch at Y[0] (default:
    principal value).
    """
    Y = np.asarray(Y, dtype=float)
    r = qnorm(Y)
    if np.any(r == 0.0):
        raise PoleOnPath("logarithm evaluated at zero")
    im = Y[:, 1:]
    phi = qnorm(im)
    axis = phi <= 1e-14 * r
    u = np.zeros_like(im)
    u[~axis] = im[~axis] / phi[~axis, None]
    start = ln_array(Y[0]) if start is None else np.asarray(start, dtype=float)
    # orientation: flip whenever a direction reverses against its predecessor
    idx = np.flatnonzero(~axis)
    if len(idx):
        dots = np.einsum("ij,ij->i", u[idx[1:]], u[idx[:-1]])
        sigma = np.concatenate(([1.0], np.cumprod(np.where(dots < 0, -1.0, 1.0))))
        u[idx] *= sigma[:, None]
        # forward fill axis samples, back fill a leading run
        fill = np.maximum.accumulate(np.where(~axis, np.arange(len(Y)), -1))
        fill[fill < 0] = idx[0]
        u = u[fill]
        theta = np.arctan2(phi, Y[:, 0])
        sgn = np.ones(len(Y))
        sgn[idx] = sigma
        a = np.where(axis, np.where(Y[:, 0] > 0, 0.0, math.pi), sgn * theta)
    else:
        d = start[1:]
        nd = np.linalg.norm(d)
        u[:] = d / nd if nd > 0 else np.array([1.0, 0.0, 0.0])
        a = np.where(Y[:, 0] > 0, 0.0, math.pi)
    a = np.unwrap(a)
    a_start = float(np.dot(start[1:], u[0]))
    a += 2 * math.pi * round((a_start - a[0]) / (2 * math.pi))
    out = np.empty_like(Y)
    out[:, 0] = np.log(r)
    out[:, 1:] = a[:, None] * u
    return out


def lift_log_sequential(Y, start=None) -> np.ndarray:
    """Reference lifting: each step picks the logarithm nearest the previous one."""
    Y = np.asarray(Y, dtype=float)
    out = np.empty_like(Y)
    prev = ln_array(Y[0]) if start is None else np.asarray(start, dtype=float)
    out[0] = prev
    for k in range(1, len(Y)):
        z = Y[k]
        r = float(np.linalg.norm(z))
        im = z[1:]
        phi = float(np.linalg.norm(im))
        P = prev[1:]
        if phi <= 1e-14 * r:
            nP = np.linalg.norm(P)
            u = P / nP if nP > 0 else np.array([1.0, 0.0, 0.0])
            theta0 = 0.0 if z[0] > 0 else math.pi
        else:
            u = im / phi
            theta0 = math.atan2(phi, z[0])
        target = float(np.dot(u, P))
        n = round((target - theta0) / (2 * math.pi))
        t = theta0 + 2 * math.pi * n
        prev = np.concatenate(([math.log(r)], t * u))
        out[k] = prev
    return out


def steps_resolved(Y) -> bool:
    """True when consecutive samples are less than a right angle apart."""
    Y = np.asarray(Y, dtype=float)
    return bool(np.all(np.einsum("ij,ij->i", Y[1:], Y[:-1]) > 0))


# ---------------------------------------------------------------------------
# quadrature


@dataclass
class QuadratureResult:
    value: Quaternion
    error_estimate: float
    trace: list = field(default_factory=list)
    converged: bool = True

    @property
    def refinements(self) -> int:
        return len(self.trace)

    def to_json(self) -> dict:
        return {
            "value": Q.to_json(self.value),
            "error_estimate": self.error_estimate,
            "converged": self.converged,
            "refinements": self.refinements,
            "trace": self.trace,
        }


def planar_axis(phrase: Phrase, path: Path):
    """Unit direction u if path - center stays in span(1, u) and all coefficients
    after the leading one commute with u; None otherwise.  Returns J when the
    path runs along the real line through the center."""
    Y = path.samples(2) - phrase.center.to_array()
    im = Y[:, 1:]
    norms = qnorm(im)
    scale = max(1.0, float(np.max(qnorm(Y))))
    if norms.max() <= 1e-12 * scale:
        return Q.J
    u = im[np.argmax(norms)] / norms.max()
    resid = im - np.outer(im @ u, u)
    if np.max(qnorm(resid)) > 1e-10 * scale:
        return None
    M = Quaternion(0.0, *u)
    for w in phrase.words:
        coefs = [f.coef for f in w.factors[1:]] + [w.tail]
        if not all(Q.commutes(c, M, 1e-12) for c in coefs):
            return None
    return M


def _has_singularity(phrase: Phrase) -> bool:
    return phrase.has_log or any(f.power < 0 for w in phrase.words for f in w.factors)


class _Integrand:
    """Per-phrase evaluator of fhat(z).h on arrays."""

    def __init__(self, phrase: Phrase, path: Path):
        self.phrase = phrase
        self.center = phrase.center.to_array()
        try:
            self.g = phrase.antiderivative
            self.mode = "symbolic"
        except UnsupportedShape:
            if planar_axis(phrase, path) is None:
                raise
            self.g = None
            self.mode = "planar"
        if _has_singularity(phrase):
            d = path.distance_to(phrase.center)
            if d <= 1e-9 * max(1.0, abs(phrase.center)):
                raise PoleOnPath(f"singular point {phrase.center} lies on the path")
        self.needs_log = self.mode == "symbolic" and self.g.has_log

    def partial_sum(self, z, dz, ln_start=None):
        """Sum of fhat(z[k+1]).dz[k]; z has one more row than dz."""
        Y = z - self.center
        if self.mode == "planar":
            vals = qmul(eval_phrase_array(self.phrase, z[1:]), dz)
            return vals.sum(axis=0), None
        lnY = None
        last = None
        if self.needs_log:
            lnY_all = lift_log(Y, ln_start)
            lnY = lnY_all[1:]
            last = lnY_all[-1]
        vals = dual_apply(self.g, Y[1:], dz, lnY)
        return vals.sum(axis=0), last


def _as_phrases(p) -> list:
    if isinstance(p, Phrase):
        return [p]
    return list(p)


def _riemann_sum(integrands, path: Path, level: int, weight=None):
    params = path.partition(level).values
    total = np.zeros(4)
    n = len(params) - 1
    starts = [None] * len(integrands)
    for lo in range(0, n, CHUNK):
        hi = min(n, lo + CHUNK)
        z = path.points(params[lo:hi + 1])
        dz = np.diff(z, axis=0) if weight is None else np.diff(weight(z), axis=0)
        for i, f in enumerate(integrands):
            s, starts[i] = f.partial_sum(z, dz, starts[i])
            total = total + s
    return total


def _log_resolved(integrands, path: Path, level: int) -> bool:
    pts = None
    for f in integrands:
        if f.needs_log:
            if pts is None:
                pts = path.samples(level)
            if not steps_resolved(pts - f.center):
                return False
    return True


ROMBERG_COLUMNS = 6
STAGNATION_LEVELS = 4


def _romberg(sum_at_level, tol: float, max_refine: int, first_level: int = 0, min_levels: int = 3):
    """Richardson table over dyadic levels; depth capped because high columns
    amplify rounding noise once the raw sums are accurate.

    Converged when the change of the extrapolated value is below
    tol * max(1, |value|).  Gives up early once ``STAGNATION_LEVELS`` levels
    in a row fail to improve on the best change seen (rounding floor).
    """
    rows: list = []
    trace = []
    best = None
    prev_diag = None
    stalled = 0
    for k, level in enumerate(range(first_level, first_level + max_refine + 1)):
        raw = sum_at_level(level)
        row = [raw]
        for j in range(1, min(k, ROMBERG_COLUMNS) + 1):
            row.append(row[j - 1] + (row[j - 1] - rows[-1][j - 1]) / (2**j - 1))
        rows.append(row)
        diag = row[-1]
        delta = float(np.linalg.norm(diag - prev_diag)) if prev_diag is not None else math.inf
        trace.append({"level": level, "raw": raw.tolist(), "extrapolated": diag.tolist(), "delta": delta})
        if best is None or delta <= best.error_estimate:
            best = QuadratureResult(Quaternion.from_array(diag), delta, trace, False)
            stalled = 0
        else:
            stalled += 1
        if k + 1 >= min_levels and delta < tol * max(1.0, float(np.linalg.norm(diag))):
            return QuadratureResult(Quaternion.from_array(diag), delta, trace, True)
        if stalled >= STAGNATION_LEVELS:
            break
        prev_diag = diag
    raise ConvergenceError(
        f"no convergence to tol={tol} within {len(trace) - 1} refinements (last delta {best.error_estimate:.3g})",
        best,
    )


def _first_level(integrands, path: Path, max_level: int = 12) -> int:
    for level in range(max_level + 1):
        if _log_resolved(integrands, path, level):
            return level
    raise ConvergenceError("path sampling never resolves the logarithm branch")


def line_integral(p, path: Path, tol: float = 1e-8, max_refine: int = DEFAULT_MAX_REFINE) -> QuadratureResult:
    """Noncommutative line integral of a phrase (or a sum of phrases) along path."""
    integrands = [_Integrand(ph, path) for ph in _as_phrases(p)]
    first = _first_level(integrands, path)
    return _romberg(lambda lv: _riemann_sum(integrands, path, lv), tol, max_refine, first)


def stieltjes_integral(p, q: Phrase, path: Path, tol: float = 1e-8, max_refine: int = DEFAULT_MAX_REFINE):
    """Sum of fhat(z_{k+1}).(q(z_{k+1}) - q(z_k)) under refinement."""
    integrands = [_Integrand(ph, path) for ph in _as_phrases(p)]
    first = _first_level(integrands, path)
    weight = lambda z: eval_phrase_array(q, z)  # noqa: E731
    return _romberg(lambda lv: _riemann_sum(integrands, path, lv, weight), tol, max_refine, first)


def integral_dln(path: Path, a, tol: float = 1e-10, max_refine: int = DEFAULT_MAX_REFINE) -> QuadratureResult:
    """Telescoped increments of a branch-continuous Ln(z - a) along the path."""
    a = Quaternion.coerce(a)
    if path.distance_to(a) <= 1e-12 * max(1.0, abs(a)):
        raise PoleOnPath("the point lies on the path")
    return dln_of_samples(lambda lv: path.samples(lv) - a.to_array(), tol, max_refine)


def dln_of_samples(sampler, tol: float = 1e-10, max_refine: int = DEFAULT_MAX_REFINE) -> QuadratureResult:
    """Lifted-log increment of sampled curves, refined until steps are resolved."""
    trace = []
    prev = None
    for level in range(max_refine + 1):
        Y = sampler(level)
        if np.any(qnorm(Y) == 0.0):
            raise PoleOnPath("curve passes through zero")
        if not steps_resolved(Y):
            trace.append({"level": level, "points": len(Y), "resolved": False})
            continue
        w = lift_log(Y)
        value = w[-1] - w[0]
        delta = float(np.linalg.norm(value - prev)) if prev is not None else math.inf
        trace.append({"level": level, "points": len(Y), "resolved": True, "value": value.tolist(), "delta": delta})
        if prev is not None and delta < tol:
            return QuadratureResult(Quaternion.from_array(value), delta, trace, True)
        prev = value
    best = None if prev is None else QuadratureResult(Quaternion.from_array(prev), math.inf, trace, False)
    raise ConvergenceError("branch tracking did not stabilise within the refinement budget", best)
