"""Cauchy formula, Laurent components, indices, residues, argument principle
and a bounded root search for quaternion phrases."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import quat as Q
from .elementary import exp_array
from .errors import ConvergenceError, DomainError, UnsupportedShape
from .paths import (
    DEFAULT_MAX_REFINE,
    Circle,
    Path,
    QuadratureResult,
    dln_of_samples,
    integral_dln,
    line_integral,
)
from .quat import Quaternion, qmul, qnorm
from .words import (
    Factor,
    Phrase,
    Word,
    canonicalize,
    derivative,
    derivative_phrase,
    divisor_and_singularity,
    eval_phrase,
    eval_phrase_array,
    hat_matrix,
    primitive_word,
    recenter,
    word_mul,
)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# indices


@dataclass(frozen=True)
class TopIndex:
    in1: int
    in2: int
    in3: int

    def as_tuple(self):
        return (self.in1, self.in2, self.in3)


def _planar_winding(pts: np.ndarray, c: complex, scale: float) -> int | None:
    """Winding number of a closed planar polygon about c; None if it touches c."""
    w = pts - c
    if np.min(np.abs(w)) <= 1e-12 * scale:
        return None
    ang = np.angle(w[1:] / w[:-1])
    return int(round(float(np.sum(ang)) / TWO_PI))


def topological_index(path: Path, a, level: int = 6) -> TopIndex:
    """Winding numbers of the projections (v, w), (v, x), (v, y) about a.

    A projection that collapses onto a segment (zero enclosed area) is
    assigned index 0.
    """
    if not path.closed:
        raise DomainError("topological index needs a closed path")
    a = Quaternion.coerce(a)
    out = []
    for comp in (1, 2, 3):
        values = []
        for lv in (level, level + 1):
            pts = path.samples(lv)
            z = pts[:, 0] + 1j * pts[:, comp]
            c = complex(a.v, a.to_array()[comp])
            scale = max(1.0, float(np.max(np.abs(z - c))))
            area = 0.5 * float(np.sum((z.real[:-1] * z.imag[1:] - z.real[1:] * z.imag[:-1])))
            extent = float(np.ptp(z.real)) * float(np.ptp(z.imag))
            if abs(area) <= 1e-12 * max(extent, 1e-300) or extent == 0.0:
                values.append(0)
                continue
            wnd = _planar_winding(z, c, scale)
            if wnd is None:
                raise DomainError(f"projected point lies on projection {comp} of the path")
            values.append(wnd)
        if values[0] != values[1]:
            raise ConvergenceError("planar winding number did not stabilise")
        out.append(values[0])
    return TopIndex(*out)


def quaternion_index(path: Path, a, tol: float = 1e-10, max_refine: int = DEFAULT_MAX_REFINE) -> Quaternion:
    if not path.closed:
        raise DomainError("quaternion index needs a closed path")
    return integral_dln(path, a, tol, max_refine).value / TWO_PI


def index_from_top(top: TopIndex, M) -> Quaternion:
    """Quaternion index of a circle with generator M rebuilt from planar windings.

    A projection winds with the sign of the matching coefficient of M, so the
    coefficients enter with their absolute values.
    """
    m = Quaternion.coerce(M).to_array()
    return Quaternion(0.0, top.in1 * abs(m[1]), top.in2 * abs(m[2]), top.in3 * abs(m[3]))


# ---------------------------------------------------------------------------
# Cauchy formula


def _plane_projection(psi: Circle, z: Quaternion, rel: float = 1e-10) -> Quaternion:
    """z projected onto psi.a + span(1, M); rejects points genuinely off the plane."""
    d = (z - psi.a).to_array()
    m = psi.M.to_array()
    inplane = np.array([d[0], 0.0, 0.0, 0.0]) + np.dot(d, m) * m
    off = np.linalg.norm(d - inplane)
    if off > rel * max(1.0, psi.r, abs(z)):
        raise DomainError(
            "the point must lie in the plane of the circle (a + span(1, M)); "
            f"it is {off:.3g} away from it"
        )
    return psi.a + Quaternion.from_array(inplane)


def _inside(psi: Circle, z: Quaternion):
    if abs(z - psi.a) >= psi.r:
        raise DomainError("the point is not strictly inside the circle")


def _kernel_phrase(f: Phrase, z: Quaternion, power: int) -> Phrase:
    if not f.is_polynomial:
        raise UnsupportedShape("the Cauchy integrand needs a polynomial phrase")
    g = recenter(f, z)
    kernel = Word((Factor(Q.I, -power),), Q.I)
    return canonicalize(Phrase(z, tuple(word_mul(w, kernel) for w in g.words)))


def cauchy_derivative(f: Phrase, psi: Circle, z, k: int = 0, tol: float = 1e-10,
                      max_refine: int = DEFAULT_MAX_REFINE) -> Quaternion:
    """k! (2 pi)^{-1} (int_psi f(zeta) (zeta - z)^{-k-1} dzeta) M^{-1}."""
    if k < 0:
        raise DomainError("derivative order must be non-negative")
    if not psi.closed or psi.turns != 1:
        raise DomainError("the Cauchy formula uses a single positively oriented turn")
    z = _plane_projection(psi, Quaternion.coerce(z))
    _inside(psi, z)
    res = line_integral(_kernel_phrase(f, z, k + 1), psi, tol, max_refine)
    return math.factorial(k) / TWO_PI * res.value * Q.inv(psi.M)


def cauchy_eval(f: Phrase, psi: Circle, z, tol: float = 1e-10, max_refine: int = DEFAULT_MAX_REFINE) -> Quaternion:
    return cauchy_derivative(f, psi, z, 0, tol, max_refine)


def cauchy_bound(f: Phrase, psi: Circle, z, samples: int = 256) -> tuple[float, float]:
    """(|f(z)|, sup over psi of the operator norm of fhat)."""
    s = np.linspace(0.0, 1.0, samples, endpoint=False)
    pts = psi.points(s)
    sup = 0.0
    for p in pts:
        sup = max(sup, float(np.linalg.svd(hat_matrix(f, Quaternion.from_array(p)), compute_uv=False)[0]))
    return abs(eval_phrase(f, z)), sup


# ---------------------------------------------------------------------------
# Laurent components


@dataclass
class LaurentResult:
    phi: list
    psi: list

    def total(self) -> Quaternion:
        out = Q.ZERO
        for q in self.phi + self.psi:
            out = out + q
        return out


def laurent_components(f: Phrase, a, r1: float, R1: float, z, kmax: int, tol: float = 1e-10,
                       max_refine: int = DEFAULT_MAX_REFINE) -> LaurentResult:
    """phi_k from an outer circle, psi_k from an inner circle, k = 0..kmax.

    phi_k(z) = (2 pi)^{-1} int f(zeta) ((zeta-a)^{-1}(z-a))^k (zeta-a)^{-1} dzeta M^{-1}
    psi_k(z) = (2 pi)^{-1} int f(zeta) (z-a)^{-1} ((zeta-a)(z-a)^{-1})^k dzeta M^{-1}
    Both circles lie in the plane a + span(1, M) through z.
    """
    a = Quaternion.coerce(a)
    z = Quaternion.coerce(z)
    if not Q.isclose(f.center, a, 0.0):
        raise DomainError("the phrase must be centred at the annulus center")
    d = z - a
    rho = abs(d)
    if not r1 < rho < R1:
        raise DomainError("the point is not inside the annulus")
    im = d.imag
    M = im / abs(im) if abs(im) > 1e-12 * max(1.0, rho) else Q.J
    outer = Circle(a, (rho + R1) / 2, M, 1)
    inner = Circle(a, (r1 + rho) / 2, M, 1)
    Minv = Q.inv(M)
    di = Q.inv(d)
    phi, psi = [], []
    for k in range(kmax + 1):
        tail_phi = Word(((Factor(Q.I, -1),) + (Factor(d, -1),) * k), Q.I)
        integrand = Phrase(a, tuple(word_mul(w, tail_phi) for w in f.words))
        phi.append(line_integral(integrand, outer, tol, max_refine).value / TWO_PI * Minv)
        tail_psi = Word((Factor(di, 1),) * k, di)
        integrand = Phrase(a, tuple(word_mul(w, tail_psi) for w in f.words))
        psi.append(line_integral(integrand, inner, tol, max_refine).value / TWO_PI * Minv)
    return LaurentResult(phi, psi)


# ---------------------------------------------------------------------------
# residues


def residue_numeric(f, p, M, r: float, tol: float = 1e-10, max_refine: int = DEFAULT_MAX_REFINE) -> Quaternion:
    """(int over Circle(p, r, M, 1) of f dz) (2 pi M)^{-1}."""
    M = Quaternion.coerce(M)
    circle = Circle(Quaternion.coerce(p), r, M, 1)
    value = line_integral(f, circle, tol, max_refine).value
    return value * Q.inv(TWO_PI * M)


def residue_closed_form(f: Phrase, p) -> Quaternion:
    """Coefficient of (z - p)^{-1} of a left-form phrase centred at p."""
    if not f.left_form:
        raise DomainError("closed-form residues need a left-form phrase")
    if not Q.isclose(f.center, Quaternion.coerce(p), 0.0):
        raise DomainError("the phrase must be centred at the pole")
    out = Q.ZERO
    for w in canonicalize(f).words:
        if len(w.factors) == 1 and w.factors[0].power == -1 and not w.factors[0].log:
            out = out + w.factors[0].coef * w.tail
    return out


def _basis_components(q: Quaternion):
    return [(c, e) for c, e in zip(q.key(), Q.BASIS) if c != 0.0]


def residue_word_reduction(wd: Word, M, r: float = 1.0, nodes: int = 64) -> Quaternion:
    """Residue of a word centred at the origin of Y, reduced to exp-product integrals.

    The hat integrand along Y = r exp(2 pi s M) is a product of coefficients
    and exponentials exp(2 pi s k M) (the logarithm contributes
    ln r + 2 pi s M).  Every coefficient is split into basis components S and
    moved to the left with exp(t M') S = S exp(t S^{-1} M' S); what remains is
    a real polynomial weight times a product of exponentials in s, integrated
    with Gauss-Legendre nodes.
    """
    M = Quaternion.coerce(M)
    if abs(M.v) > 1e-12 or abs(abs(M) - 1) > 1e-9:
        raise DomainError("M must be a unit imaginary quaternion")
    terms = []
    for g in primitive_word(wd):
        terms.extend(derivative(g).terms)
    x, wts = np.polynomial.legendre.leggauss(nodes)
    s = (x + 1) / 2
    wts = wts / 2
    total = np.zeros(4)
    for t in terms:
        seq = _word_items(t.left, r)
        if t.ln_marker:
            # exp'(Ln Y)^{-1} applied to dz/ds = 2 pi M Y equals 2 pi M in the plane
            seq.append(("c", TWO_PI * M, 0))
        else:
            seq.append(("c", TWO_PI * r * M, 0))
            seq.append(("e", 1, 0))
        seq.extend(_word_items(t.right, r))
        total = total + _integrate_sequence(seq, M, s, wts)
    return Quaternion.from_array(total) * Q.inv(TWO_PI * M)


def _word_items(w: Word, r: float) -> list:
    """Items ('c', q, p): coefficient q times (2 pi s)^p; ('e', k, 0): exp(2 pi s k M)."""
    items = []
    for f in w.factors:
        items.append(("c", f.coef * (r ** f.power), 0))
        if f.power:
            items.append(("e", f.power, 0))
        if f.log:
            items.append(("log", math.log(r), 0))
    items.append(("c", w.tail, 0))
    return items


def _integrate_sequence(seq, M: Quaternion, s, wts) -> np.ndarray:
    # expand logarithms into (ln r) + (2 pi s) M
    variants = [[]]
    for it in seq:
        if it[0] == "log":
            variants = [v + [("c", Quaternion(it[1]), 0)] for v in variants] + [
                v + [("c", M, 1)] for v in variants
            ]
        else:
            variants = [v + [it] for v in variants]
    total = np.zeros(4)
    theta = TWO_PI * s
    for v in variants:
        coefs = [it for it in v if it[0] == "c"]
        power = sum(it[2] for it in coefs)
        # number of coefficients preceding each exponential
        positions = []
        seen = 0
        for it in v:
            if it[0] == "c":
                seen += 1
            else:
                positions.append((it[1], seen))
        for combo in itertools.product(*(_basis_components(it[1]) for it in coefs)):
            weight = math.prod(c for c, _ in combo)
            basis = [e for _, e in combo]
            S = Q.I
            for e in basis:
                S = S * e
            vals = np.broadcast_to(S.to_array(), (len(s), 4)).copy()
            for k, pos in positions:
                # the basis product P to the right of exp(t k M) is pulled through it
                P = Q.I
                for e in basis[pos:]:
                    P = P * e
                Mj = Q.inv(P) * M * P
                vals = qmul(vals, exp_array((k * theta)[:, None] * Mj.to_array()))
            vals = vals * (theta**power)[:, None]
            total = total + weight * (wts @ vals)
    return total


@dataclass
class CheckResult:
    lhs: Quaternion
    rhs: Quaternion
    delta: float
    details: dict = field(default_factory=dict)

    def passed(self, tol: float) -> bool:
        return self.delta <= tol


def _poles_of(phrases) -> list:
    out = []
    for p in phrases:
        if any(f.power < 0 for w in p.words for f in w.factors):
            out.append(p)
    return out


def residue_theorem_check(f, gamma: Path, tol: float = 1e-10,
                          max_refine: int = DEFAULT_MAX_REFINE) -> CheckResult:
    """Compare int_gamma f dz with 2 pi sum res(p_j, f) In(p_j, gamma).

    The index is a right factor here: for f = b (z-p)^{-1} c the integral is
    b 2 pi M c = 2 pi res M with res = b M c M^{-1}.  The product with the
    index on the left is reported as ``rhs_index_left`` for comparison.
    """
    phrases = [f] if isinstance(f, Phrase) else list(f)
    lhs = line_integral(phrases, gamma, tol, max_refine).value
    rhs = Q.ZERO
    rhs_left = Q.ZERO
    poles = []
    singular = _poles_of(phrases)
    centers = [p.center for p in singular]
    for ph in singular:
        idx = quaternion_index(gamma, ph.center)
        entry = {"pole": Q.to_json(ph.center), "index": Q.to_json(idx)}
        if abs(idx) > 1e-9:
            M = idx / abs(idx)
            gaps = [abs(ph.center - c) for c in centers if c is not ph.center]
            gaps.append(gamma.distance_to(ph.center))
            r = 0.5 * min(gaps)
            res = residue_numeric(ph, ph.center, M, r, tol, max_refine)
            rhs = rhs + TWO_PI * res * idx
            rhs_left = rhs_left + TWO_PI * idx * res
            entry["residue"] = Q.to_json(res)
        poles.append(entry)
    return CheckResult(lhs, rhs, abs(lhs - rhs), {"poles": poles, "rhs_index_left": Q.to_json(rhs_left)})


def residue_at_infinity(f, circle: Circle, tol: float = 1e-10) -> Quaternion:
    """Residue over the reversed outer circle, (int_{-circle} f dz)(2 pi M)^{-1}."""
    value = line_integral(f, circle.reversed(), tol).value
    return value * Q.inv(TWO_PI * circle.M)


# ---------------------------------------------------------------------------
# argument principle


def argument_principle_check(f: Phrase, gamma: Circle, zeros, tol: float = 1e-10,
                             max_refine: int = DEFAULT_MAX_REFINE) -> CheckResult:
    """Index of the image path f(gamma) about 0 against sum In(a, gamma) d_f(a).

    ``zeros`` holds points a or (a, divisor) pairs; missing divisors are read
    off the phrase recentred at a.
    """
    lhs = dln_of_samples(lambda lv: eval_phrase_array(f, gamma.samples(lv)), tol, max_refine).value / TWO_PI
    rhs = Q.ZERO
    rows = []
    for z in zeros:
        if isinstance(z, tuple):
            a, div = Quaternion.coerce(z[0]), int(z[1])
        else:
            a = Quaternion.coerce(z)
            div = divisor_and_singularity(recenter(f, a)).divisor
        idx = quaternion_index(gamma, a)
        rhs = rhs + idx * div
        rows.append({"zero": Q.to_json(a), "divisor": div, "index": Q.to_json(idx)})
    return CheckResult(lhs, rhs, abs(lhs - rhs), {"zeros": rows})


# ---------------------------------------------------------------------------
# root search


@dataclass
class RootResult:
    root: Quaternion
    residual: float
    converged: bool
    iterations: int
    radius: float


def root_radius(P: Phrase) -> float:
    """Bound for |z - center| of any root of Y^{n+1} + lower words."""
    words = canonicalize(P).words
    if not words:
        raise DomainError("zero phrase")
    top = max(w.degree for w in words)
    leading = [w for w in words if w.degree == top]
    if len(leading) != 1 or len(leading[0].factors) != 1 or not Q.isclose(leading[0].leading * leading[0].tail, Q.I):
        raise DomainError("find_root expects a monic leading term Y^(n+1)")
    if any(f.power < 0 for w in words for f in w.factors):
        raise DomainError("find_root expects a polynomial phrase")
    lower = sum(math.prod(abs(f.coef) for f in w.factors) * abs(w.tail) for w in words if w is not leading[0])
    return max(1.0, lower)


def find_root(P: Phrase, search_box=None, tol: float = 1e-8, grid: int = 17, starts: int = 24,
              max_iter: int = 200) -> RootResult:
    """Grid scan of |P|^2 over a box, then Levenberg-Marquardt from the best points."""
    R = root_radius(P) if search_box is None else float(search_box)
    axis = np.linspace(-R, R, grid)
    mesh = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 4)
    pts = mesh + P.center.to_array()
    vals = np.sum(eval_phrase_array(P, pts) ** 2, axis=-1)
    order = np.argsort(vals, kind="stable")[:starts]
    form = derivative_phrase(P)
    best = None
    total_iter = 0
    for i in order:
        z = pts[i].copy()
        lam = 1e-3
        F = eval_phrase_array(P, z)
        for _ in range(max_iter):
            total_iter += 1
            res = float(np.linalg.norm(F))
            if res < tol * 1e-2:
                break
            Jm = form.matrix(Quaternion.from_array(z) - P.center)
            g = Jm.T @ F
            A = Jm.T @ Jm
            improved = False
            while lam < 1e12:
                step = np.linalg.solve(A + lam * np.eye(4), -g)
                Fn = eval_phrase_array(P, z + step)
                if np.linalg.norm(Fn) < res:
                    z, F = z + step, Fn
                    lam = max(lam / 3, 1e-12)
                    improved = True
                    break
                lam *= 4
            if not improved:
                break
        res = float(np.linalg.norm(F))
        if best is None or res < best.residual:
            best = RootResult(Quaternion.from_array(z), res, res < tol, total_iter, R)
        if best.converged:
            break
    best.iterations = total_iter
    return best


# ---------------------------------------------------------------------------
# demonstrators


def conjugation_limits(a, h, s_values=(1e-1, 1e-3, 1e-6)) -> dict:
    """Values of f(z) = z^{-1} a z along z = s h and z = s I.

    f is constant on each ray, so the directional limits at 0 are h^{-1} a h
    and a; they differ unless a commutes with h.
    """
    a = Quaternion.coerce(a)
    h = Quaternion.coerce(h)
    f = Phrase(Q.ZERO, (Word((Factor(Q.I, -1), Factor(a, 1))),))
    along_h = [eval_phrase(f, s * h) for s in s_values]
    along_one = [eval_phrase(f, Quaternion(s)) for s in s_values]
    lim_h = Q.inv(h) * a * h
    return {
        "limit_h": lim_h,
        "limit_one": a,
        "gap": abs(lim_h - a),
        "samples_h": along_h,
        "samples_one": along_one,
    }
