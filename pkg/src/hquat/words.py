"""Noncommutative words and phrases in a quaternion variable.

A :class:`Word` is the product

    b_1 Y^{n_1} [Ln Y] b_2 Y^{n_2} [Ln Y] ... b_m Y^{n_m} [Ln Y] * tail

with ``Y = z - center``.  Each factor carries an optional logarithm flag; Y
and Ln Y commute, so the position of Ln inside a factor does not matter.
Words do not carry a center: a :class:`Phrase` (a finite sum of words) owns
the center for all of its words.

Directional derivatives are represented by :class:`SandwichForm`, a sum of
``left(Y) * H * right(Y)`` terms with ``H = h`` or, for terms produced by a
logarithm, ``H = exp'(Ln Y)^{-1} h``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import quat as Q
from .elementary import exp_derivative, exp_derivative_inverse_apply, ln_array
from .errors import BranchDegeneracy, DomainError, UnsupportedShape
from .quat import Quaternion, qinv, qmul, qpow

ONE = Q.I


class Factor(NamedTuple):
    coef: Quaternion
    power: int
    log: bool = False

    def key(self):
        return (self.coef.key(), self.power, self.log)


@dataclass(frozen=True, eq=False)
class Word:
    factors: tuple = ()
    tail: Quaternion = ONE

    def __post_init__(self):
        facs = tuple(f if isinstance(f, Factor) else Factor(Quaternion.coerce(f[0]), int(f[1]), *f[2:])
                     for f in self.factors)
        object.__setattr__(self, "factors", facs)
        object.__setattr__(self, "tail", Quaternion.coerce(self.tail))

    @classmethod
    def monomial(cls, coef=ONE, power: int = 1, tail=ONE) -> "Word":
        return cls((Factor(Quaternion.coerce(coef), power),), tail)

    @classmethod
    def constant(cls, value) -> "Word":
        return cls((), value)

    @property
    def degree(self) -> int:
        """Total degree eta = sum of exponents."""
        return sum(f.power for f in self.factors)

    @property
    def has_log(self) -> bool:
        return any(f.log for f in self.factors)

    @property
    def leading(self) -> Quaternion:
        return self.factors[0].coef if self.factors else self.tail

    def is_polynomial(self) -> bool:
        return all(f.power >= 0 and not f.log for f in self.factors)

    def key(self):
        return (tuple(f.key() for f in self.factors), self.tail.key())

    def scaled_left(self, c: Quaternion) -> "Word":
        if not self.factors:
            return Word((), c * self.tail)
        f0 = self.factors[0]
        return Word((Factor(c * f0.coef, f0.power, f0.log),) + self.factors[1:], self.tail)

    def scaled_right(self, c: Quaternion) -> "Word":
        return Word(self.factors, self.tail * c)

    def __mul__(self, other: "Word") -> "Word":
        return word_mul(self, other)

    def __repr__(self):
        return f"Word({format_word(self)})"


def word_mul(a: Word, b: Word) -> Word:
    if not b.factors:
        return Word(a.factors, a.tail * b.tail)
    f0 = b.factors[0]
    first = Factor(a.tail * f0.coef, f0.power, f0.log)
    return Word(a.factors + (first,) + b.factors[1:], b.tail)


def word_length(wd: Word) -> int:
    """Length xi: non-zero exponents plus position weights of the coefficients.

    A coefficient at position j weighs j when it equals 1 and j + 1 otherwise;
    a tail different from 1 is weighed as position m + 1.
    """
    m = len(wd.factors)
    total = sum(1 for f in wd.factors if f.power != 0)
    for j, f in enumerate(wd.factors, start=1):
        total += j if _is_one(f.coef) else j + 1
    if not _is_one(wd.tail):
        total += m + 2
    return total


def _is_one(q: Quaternion) -> bool:
    return q.key() == (1.0, 0.0, 0.0, 0.0)


def format_word(wd: Word) -> str:
    parts = []
    for f in wd.factors:
        s = "" if _is_one(f.coef) else f"({f.coef})"
        if f.power == 1:
            s += "Y"
        elif f.power != 0:
            s += f"Y^{f.power}"
        if f.log:
            s += "Ln(Y)"
        parts.append(s or "1")
    if not _is_one(wd.tail) or not parts:
        parts.append(f"({wd.tail})")
    return "*".join(parts)


@dataclass(frozen=True, eq=False)
class Phrase:
    """Finite sum of words sharing one center.

    ``essential`` tags a truncation of an infinite series with infinitely
    many negative powers; it only affects singularity classification.
    ``tail_bound`` records a truncation error bound when the phrase was
    produced by :func:`recenter`.
    """

    center: Quaternion = Q.ZERO
    words: tuple = ()
    essential: bool = False
    tail_bound: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "center", Quaternion.coerce(self.center))
        object.__setattr__(self, "words", tuple(self.words))

    @property
    def left_form(self) -> bool:
        return all(len(w.factors) <= 1 and _is_one(w.tail) or not w.factors for w in self.words)

    @property
    def is_polynomial(self) -> bool:
        return all(w.is_polynomial() for w in self.words)

    @property
    def has_log(self) -> bool:
        return any(w.has_log for w in self.words)

    def __add__(self, other: "Phrase") -> "Phrase":
        if not Q.isclose(self.center, other.center, 0.0):
            raise DomainError("phrases with different centers cannot be added symbolically")
        return Phrase(self.center, self.words + other.words)

    def __neg__(self):
        return self.scale_left(Quaternion(-1.0))

    def __sub__(self, other):
        return self + (-other)

    def scale_left(self, c) -> "Phrase":
        c = Quaternion.coerce(c)
        return Phrase(self.center, tuple(w.scaled_left(c) for w in self.words))

    def scale_right(self, c) -> "Phrase":
        c = Quaternion.coerce(c)
        return Phrase(self.center, tuple(w.scaled_right(c) for w in self.words))

    def __mul__(self, other: "Phrase") -> "Phrase":
        if not Q.isclose(self.center, other.center, 0.0):
            raise DomainError("phrases with different centers cannot be multiplied symbolically")
        return Phrase(self.center, tuple(word_mul(a, b) for a in self.words for b in other.words))

    def __call__(self, z, ln=None):
        return eval_phrase(self, z, ln)

    @cached_property
    def antiderivative(self) -> "Phrase":
        """Primitive with constant 0; raises UnsupportedShape if none exists."""
        return primitive(self)

    @cached_property
    def hat_form(self) -> "SandwichForm":
        """Sandwich form of D(primitive)."""
        return derivative_phrase(self.antiderivative)

    def __repr__(self):
        body = " + ".join(format_word(w) for w in self.words) or "0"
        return f"Phrase(center={self.center}, {body})"


def monomial(coef=ONE, power: int = 1, center=Q.ZERO, tail=ONE) -> Phrase:
    return Phrase(center, (Word.monomial(coef, power, tail),))


def left_form(coeffs: dict, center=Q.ZERO) -> Phrase:
    """Phrase sum_n b_n (z - center)^n from a {power: coefficient} mapping."""
    words = []
    for n in sorted(coeffs):
        b = Quaternion.coerce(coeffs[n])
        words.append(Word.constant(b) if n == 0 else Word.monomial(b, n))
    return Phrase(center, tuple(words))


# ---------------------------------------------------------------------------
# evaluation


def _power(Y, n: int, cache: dict):
    if n not in cache:
        if n >= 0:
            cache[n] = qpow(Y, n)
        else:
            if -1 not in cache:
                if np.any(np.sum(Y * Y, axis=-1) == 0.0):
                    raise DomainError("evaluation at a pole")
                cache[-1] = qinv(Y)
            cache[n] = qpow(cache[-1], -n)
    return cache[n]


def eval_word_array(wd: Word, Y, lnY=None, cache=None):
    Y = np.asarray(Y, dtype=float)
    cache = {} if cache is None else cache
    acc = None
    for f in wd.factors:
        term = qmul(f.coef.to_array(), _power(Y, f.power, cache))
        if f.log:
            if lnY is None:
                lnY = cache.setdefault("ln", ln_array(Y))
            term = qmul(term, lnY)
        acc = term if acc is None else qmul(acc, term)
    if acc is None:
        return np.broadcast_to(wd.tail.to_array(), Y.shape).copy()
    return qmul(acc, wd.tail.to_array())


def eval_phrase_array(p: "Phrase | ConjugatePhrase", z, lnY=None):
    """Evaluate at an array of points (..., 4); ``lnY`` overrides the principal log."""
    if isinstance(p, ConjugatePhrase):
        return eval_conjugate_array(p, z)
    z = np.asarray(z, dtype=float)
    Y = z - p.center.to_array()
    cache: dict = {}
    out = np.zeros(np.broadcast_shapes(Y.shape, (4,)))
    for wd in p.words:  # fixed document order
        out = out + eval_word_array(wd, Y, lnY, cache)
    return out


def eval_phrase(p, z, ln=None) -> Quaternion:
    z = Quaternion.coerce(z).to_array()
    lnY = None if ln is None else Quaternion.coerce(ln).to_array()
    return Quaternion.from_array(eval_phrase_array(p, z, lnY))


# ---------------------------------------------------------------------------
# canonical form


def _tiny(q: Quaternion, eps=None) -> bool:
    return q.is_zero(Q.config.eps if eps is None else eps)


def canonical_word(wd: Word) -> Word | None:
    """Rewrite a single word into canonical form; None if it vanishes."""
    if _tiny(wd.tail) or any(_tiny(f.coef) for f in wd.factors):
        return None
    factors = list(wd.factors)
    tail = wd.tail
    scalar = 1.0
    changed = True
    while changed:
        changed = False
        # fold bare coefficients b Y^0 into the next coefficient
        out = []
        carry = None
        for f in factors:
            coef = f.coef if carry is None else carry * f.coef
            if f.power == 0 and not f.log:
                carry = coef
                continue
            out.append(Factor(coef, f.power, f.log))
            carry = None
        if carry is not None:
            tail = carry * tail
        changed = len(out) != len(factors)
        factors = out
        # real coefficients commute with everything: collect them in front
        out = []
        for f in factors:
            if f.coef.is_real() and not _is_one(f.coef):
                scalar *= f.coef.v
                f = Factor(ONE, f.power, f.log)
            out.append(f)
        factors = out
        if tail.is_real() and not _is_one(tail):
            scalar *= tail.v
            tail = ONE
        # a factor with coefficient 1 merges into its predecessor
        out = []
        for f in factors:
            if out and _is_one(f.coef) and not (out[-1].log and f.log):
                prev = out[-1]
                out[-1] = Factor(prev.coef, prev.power + f.power, prev.log or f.log)
                changed = True
            else:
                out.append(f)
        factors = out
    if scalar == 0.0:
        return None
    if factors:
        f0 = factors[0]
        factors[0] = Factor(scalar * f0.coef, f0.power, f0.log)
    else:
        tail = scalar * tail
    result = Word(tuple(factors), tail)
    if _tiny(result.leading):
        return None
    return result


def canonicalize(p: Phrase) -> Phrase:
    words = [w for w in (canonical_word(w) for w in p.words) if w is not None]
    while True:
        merged = _merge(words, _leading_key, _sum_leading)
        merged = _merge(merged, _tail_key, _sum_tail)
        merged = [w for w in (canonical_word(w) for w in merged) if w is not None]
        if len(merged) == len(words):
            words = merged
            break
        words = merged
    return Phrase(p.center, tuple(words), p.essential, p.tail_bound)


def _leading_key(w: Word):
    if not w.factors:
        return ("const",)
    f0 = w.factors[0]
    return ("lead", f0.power, f0.log, tuple(f.key() for f in w.factors[1:]), w.tail.key())


def _tail_key(w: Word):
    return ("tail", tuple(f.key() for f in w.factors))


def _sum_leading(a: Word, b: Word) -> Word:
    if not a.factors:
        return Word((), a.tail + b.tail)
    f0 = a.factors[0]
    return Word((Factor(f0.coef + b.factors[0].coef, f0.power, f0.log),) + a.factors[1:], a.tail)


def _sum_tail(a: Word, b: Word) -> Word:
    return Word(a.factors, a.tail + b.tail)


def _merge(words, keyfn, combine):
    order: list = []
    groups: dict = {}
    for w in words:
        k = keyfn(w)
        if k in groups:
            groups[k] = combine(groups[k], w)
        else:
            groups[k] = w
            order.append(k)
    return [groups[k] for k in order]


# ---------------------------------------------------------------------------
# conjugate phrases


class ConjFactor(NamedTuple):
    coef: Quaternion
    symbol: str  # "z" or "zc" (the conjugate of z - center)
    power: int


@dataclass(frozen=True, eq=False)
class ConjugateWord:
    factors: tuple = ()
    tail: Quaternion = ONE

    def __post_init__(self):
        facs = []
        for f in self.factors:
            f = f if isinstance(f, ConjFactor) else ConjFactor(Quaternion.coerce(f[0]), f[1], int(f[2]))
            if f.symbol not in ("z", "zc"):
                raise DomainError(f"unknown symbol {f.symbol!r}")
            if f.power < 0:
                raise UnsupportedShape("negative powers of the conjugate are not supported")
            facs.append(f)
        object.__setattr__(self, "factors", tuple(facs))
        object.__setattr__(self, "tail", Quaternion.coerce(self.tail))


@dataclass(frozen=True, eq=False)
class ConjugatePhrase:
    center: Quaternion = Q.ZERO
    words: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "center", Quaternion.coerce(self.center))
        object.__setattr__(self, "words", tuple(self.words))


def eval_conjugate_array(p: ConjugatePhrase, z):
    z = np.asarray(z, dtype=float)
    Y = z - p.center.to_array()
    Yc = Q.qconj(Y)
    out = np.zeros(np.broadcast_shapes(Y.shape, (4,)))
    for wd in p.words:
        acc = None
        for f in wd.factors:
            base = Y if f.symbol == "z" else Yc
            term = qmul(f.coef.to_array(), qpow(base, f.power))
            acc = term if acc is None else qmul(acc, term)
        if acc is None:
            out = out + wd.tail.to_array()
        else:
            out = out + qmul(acc, wd.tail.to_array())
    return out


_CONJ_WORDS = (
    Word((Factor(Quaternion(-0.5), 1),), ONE),
    Word((Factor(Quaternion(0.0, -0.5), 1),), Q.J),
    Word((Factor(Quaternion(0.0, 0.0, -0.5), 1),), Q.K),
    Word((Factor(Quaternion(0.0, 0.0, 0.0, -0.5), 1),), Q.L),
)


def eliminate_conjugate(p: ConjugatePhrase) -> Phrase:
    """Replace each conjugate by -(Y + JYJ + KYK + LYL)/2."""
    out = []
    for cw in p.words:
        partial = [Word((), ONE)]
        for f in cw.factors:
            head = Word((), f.coef)
            if f.symbol == "z":
                pieces = [Word.monomial(ONE, f.power)] if f.power else [Word((), ONE)]
            else:
                pieces = [Word((), ONE)]
                for _ in range(f.power):
                    pieces = [word_mul(a, b) for a in pieces for b in _CONJ_WORDS]
            partial = [word_mul(word_mul(a, head), b) for a in partial for b in pieces]
        out.extend(word_mul(a, Word((), cw.tail)) for a in partial)
    return canonicalize(Phrase(p.center, tuple(out)))


# ---------------------------------------------------------------------------
# derivatives


@dataclass(frozen=True, eq=False)
class SandwichTerm:
    left: Word
    right: Word
    ln_marker: bool = False


@dataclass(frozen=True, eq=False)
class SandwichForm:
    """Real-linear map h -> sum left(Y) H right(Y)."""

    terms: tuple = ()

    def apply_array(self, Y, h, lnY=None):
        """Vectorised evaluation; ``lnY`` selects the logarithm branch for markers."""
        Y = np.asarray(Y, dtype=float)
        h = np.asarray(h, dtype=float)
        cache: dict = {}
        if lnY is not None:
            cache["ln"] = np.asarray(lnY, dtype=float)
        H_ln = None
        out = np.zeros(np.broadcast_shapes(Y.shape, h.shape))
        for t in self.terms:
            if t.ln_marker:
                if H_ln is None:
                    ln = cache.get("ln")
                    if ln is None:
                        ln = cache.setdefault("ln", ln_array(Y))
                    H_ln = exp_derivative_inverse_apply(ln, h)
                H = H_ln
            else:
                H = h
            left = eval_word_array(t.left, Y, cache.get("ln"), cache)
            right = eval_word_array(t.right, Y, cache.get("ln"), cache)
            out = out + qmul(qmul(left, H), right)
        return out

    def apply(self, Y, h, lnY=None) -> Quaternion:
        """Scalar evaluation; log markers solved from the series matrix of exp'."""
        Y = Quaternion.coerce(Y).to_array()
        h = Quaternion.coerce(h).to_array()
        needs_ln = any(t.ln_marker or t.left.has_log or t.right.has_log for t in self.terms)
        if lnY is not None:
            ln = Quaternion.coerce(lnY).to_array()
        else:
            ln = ln_array(Y) if needs_ln else None
        H_ln = None
        cache = {"ln": ln} if ln is not None else {}
        out = np.zeros(4)
        for t in self.terms:
            if t.ln_marker:
                if H_ln is None:
                    H_ln = _solve_exp_derivative(ln, h)
                H = H_ln
            else:
                H = h
            left = eval_word_array(t.left, Y, ln, cache)
            right = eval_word_array(t.right, Y, ln, cache)
            out = out + qmul(qmul(left, H), right)
        return Quaternion.from_array(out)

    def matrix(self, Y, lnY=None) -> np.ndarray:
        """4x4 real matrix of the map at Y (columns are images of I, J, K, L)."""
        return np.column_stack([self.apply(Y, e, lnY).to_array() for e in Q.BASIS])


def _solve_exp_derivative(ln, h):
    m = exp_derivative(Quaternion.from_array(ln))
    if np.linalg.cond(m) < 1e10:
        return np.linalg.solve(m, h)
    # near sin(theta) = 0: only directions along span(1, u) are reachable
    return exp_derivative_inverse_apply(ln, h)


def _power_rule(n: int):
    """(left exponent, right exponent) pairs of D(Y^n).h, with overall sign."""
    if n >= 1:
        return 1.0, [(k, n - 1 - k) for k in range(n)]
    if n <= -1:
        return -1.0, [(-k, n + k - 1) for k in range(1, -n + 1)]
    return 0.0, []


def derivative(wd: Word) -> SandwichForm:
    """Leibniz rule over the factors of a word."""
    terms = []
    facs = wd.factors
    for j, f in enumerate(facs):
        prefix = Word(facs[:j], ONE)
        suffix = Word(facs[j + 1:], wd.tail)
        sign, pairs = _power_rule(f.power)
        for kl, kr in pairs:
            left = word_mul(prefix, Word((Factor(sign * f.coef, kl),), ONE))
            right = word_mul(Word((Factor(ONE, kr, f.log),), ONE), suffix)
            terms.append(SandwichTerm(_canon_or_zero(left), _canon_or_zero(right)))
        if f.log:
            left = word_mul(prefix, Word((Factor(f.coef, f.power),), ONE))
            terms.append(SandwichTerm(_canon_or_zero(left), _canon_or_zero(suffix), True))
    return SandwichForm(tuple(t for t in terms if t.left is not None and t.right is not None))


def _canon_or_zero(w: Word):
    return canonical_word(w)


def derivative_phrase(p: Phrase) -> SandwichForm:
    terms = []
    for w in p.words:
        terms.extend(derivative(w).terms)
    return SandwichForm(tuple(terms))


def sandwich_at_one(form: SandwichForm) -> list:
    """Collapse h = I into words; a log marker contributes Y^{-1}."""
    out = []
    for t in form.terms:
        mid = Word((Factor(ONE, -1),), ONE) if t.ln_marker else Word((), ONE)
        out.append(word_mul(word_mul(t.left, mid), t.right))
    return out


def derivative_I(p: Phrase) -> Phrase:
    return canonicalize(Phrase(p.center, tuple(sandwich_at_one(derivative_phrase(p)))))


def _derivatives_until_zero(p: Phrase, limit: int = 200):
    """Yield p, p', p'', ... until the derivative vanishes (polynomials only)."""
    cur = canonicalize(p)
    for _ in range(limit):
        if not cur.words:
            return
        yield cur
        cur = derivative_I(cur)
    raise UnsupportedShape("derivative sequence does not terminate")


# ---------------------------------------------------------------------------
# primitives


def _scalar_primitive(terms: dict) -> dict:
    """Primitive of sum c * Y^j [Ln Y], constant of integration 0."""
    out: dict = {}

    def add(k, v):
        out[k] = out.get(k, 0.0) + v

    for (j, lg), c in terms.items():
        if not lg:
            if j == -1:
                add((0, True), c)
            else:
                add((j + 1, False), c / (j + 1))
        else:
            if j == -1:
                raise UnsupportedShape("primitive would contain Ln(Y)^2")
            add((j + 1, True), c / (j + 1))
            add((j + 1, False), -c / (j + 1) ** 2)
    return out


def _scalar_words(terms: dict, coef: Quaternion, tail: Quaternion) -> list:
    return [Word((Factor(c * coef, j, lg),), tail) for (j, lg), c in terms.items() if c != 0.0]


def _iterated_primitives(coef: Quaternion, power: int, tail: Quaternion):
    """Yield the 1st, 2nd, ... primitives of coef Y^power tail as word lists."""
    terms = {(power, False): 1.0}
    while True:
        terms = _scalar_primitive(terms)
        yield _scalar_words(terms, coef, tail)


def _recursion_first_factor(wd: Word) -> list:
    """(f q)^1 = sum_s (-1)^s f^{s+1} q^{(s)}, f = leading factor, q polynomial."""
    f0 = wd.factors[0]
    q = Phrase(Q.ZERO, (Word(wd.factors[1:], wd.tail),))
    prims = _iterated_primitives(f0.coef, f0.power, ONE)
    out = []
    for s, qd in enumerate(_derivatives_until_zero(q)):
        fp = next(prims)
        sign = ONE if s % 2 == 0 else Quaternion(-1.0)
        out.extend(word_mul(a, b).scaled_left(sign) for a in fp for b in qd.words)
    return out


def _recursion_last_factor(wd: Word) -> list:
    """(f q)^1 = sum_p (-1)^p f^{(p)} q^{p+1}, q = trailing factor with the tail."""
    fl = wd.factors[-1]
    head = Phrase(Q.ZERO, (Word(wd.factors[:-1], ONE),))
    prims = _iterated_primitives(fl.coef, fl.power, wd.tail)
    out = []
    for p, fd in enumerate(_derivatives_until_zero(head)):
        qp = next(prims)
        sign = ONE if p % 2 == 0 else Quaternion(-1.0)
        out.extend(word_mul(a, b).scaled_left(sign) for a in fd.words for b in qp)
    return out


def primitive_word(wd: Word) -> list:
    wd = canonical_word(wd)
    if wd is None:
        return []
    if wd.has_log:
        raise UnsupportedShape("primitive of a word that already contains Ln")
    facs = wd.factors
    m = len(facs)
    if m == 0:
        return [Word((Factor(wd.tail, 1),), ONE)]
    if m == 1:
        f = facs[0]
        return _scalar_words(_scalar_primitive({(f.power, False): 1.0}), f.coef, wd.tail)
    if m == 2:
        n1, n2 = facs[0].power, facs[1].power
        if n1 < 0 and n2 < 0:
            raise UnsupportedShape("word with two negative exponents")
        if n1 >= 0 and n2 >= 0:
            use_first = n1 >= n2
        else:
            use_first = n2 >= 0  # expand the side whose derivatives terminate
        return _recursion_first_factor(wd) if use_first else _recursion_last_factor(wd)
    if all(f.power >= 0 for f in facs[:-1]) and facs[-1].power < 0:
        return _recursion_last_factor(wd)
    raise UnsupportedShape(
        "primitive is only available for one- and two-factor words and for "
        "polynomial words followed by a single negative power"
    )


def primitive(p: Phrase) -> Phrase:
    out = []
    for w in p.words:
        out.extend(primitive_word(w))
    return canonicalize(Phrase(p.center, tuple(out)))


def supports_primitive(p: Phrase) -> bool:
    try:
        primitive(p)
    except UnsupportedShape:
        return False
    return True


def hat_apply(p: Phrase, z, h, ln=None) -> Quaternion:
    """(D g)(z).h for the primitive g of p (constant of integration 0)."""
    z = Quaternion.coerce(z)
    return p.hat_form.apply(z - p.center, h, ln)


def hat_matrix(p: Phrase, z, ln=None) -> np.ndarray:
    z = Quaternion.coerce(z)
    return p.hat_form.matrix(z - p.center, ln)


# ---------------------------------------------------------------------------
# recentering


def _binomial_words(power: int, d: Quaternion) -> list:
    """Words of (Y' + d)^power for power >= 0 (exact expansion)."""
    pieces = [Word((), ONE)]
    for _ in range(power):
        pieces = [word_mul(a, b) for a in pieces for b in (Word.monomial(ONE, 1), Word((), d))]
    return pieces


def _geometric_words(d: Quaternion, degree: int) -> list:
    """Words of (Y' + d)^{-1} = sum_k (-d^{-1} Y')^k d^{-1}, k <= degree."""
    di = Q.inv(d)
    out = []
    cur = Word((), ONE)
    for k in range(degree + 1):
        out.append(word_mul(cur, Word((), di)))
        cur = word_mul(cur, Word((Factor(-di, 1),), ONE))
    return out


def recenter(p: Phrase, new_center, truncation_degree: int = 24, radius: float | None = None) -> Phrase:
    """Re-expand p around ``new_center``.

    Non-negative powers are expanded exactly.  Negative powers use the
    geometric series truncated at ``truncation_degree``; when ``radius`` (the
    largest |z - new_center| of interest) is given, a bound on the truncation
    error over that ball is stored in ``tail_bound``.
    """
    c = Quaternion.coerce(new_center)
    d = c - p.center
    has_neg = any(f.power < 0 for w in p.words for f in w.factors)
    if any(w.has_log for w in p.words):
        raise UnsupportedShape("recentering of logarithmic words")
    if has_neg:
        if d.is_zero(0.0):
            return Phrase(c, p.words, p.essential, 0.0)
        if radius is not None and radius >= abs(d):
            raise DomainError(
                f"radius {radius} is outside the convergence disc |Y| < {abs(d)} of the geometric expansion"
            )
    geo = None
    out = []
    total_bound = 0.0
    for w in p.words:
        expansions = [[Word((), ONE)]]
        majorant = []
        for f in w.factors:
            expansions.append([Word((), f.coef)])
            if f.power >= 0:
                expansions.append(_binomial_words(f.power, d))
                if radius is not None:
                    full = (radius + abs(d)) ** f.power
                    majorant.append((full, 0.0))
            else:
                if geo is None:
                    geo = _geometric_words(d, truncation_degree)
                for _ in range(-f.power):
                    expansions.append(geo)
                if radius is not None:
                    rho, dn = radius, abs(d)
                    full = (1.0 / (dn - rho)) ** (-f.power)
                    partial = sum(rho**k / dn ** (k + 1) for k in range(truncation_degree + 1)) ** (-f.power)
                    majorant.append((full, full - partial))
        expansions.append([Word((), w.tail)])
        for combo in itertools.product(*expansions):
            acc = combo[0]
            for part in combo[1:]:
                acc = word_mul(acc, part)
            out.append(acc)
        if radius is not None:
            coef = math.prod(abs(f.coef) for f in w.factors) * abs(w.tail)
            for j, (_, tj) in enumerate(majorant):
                if tj:
                    total_bound += coef * tj * math.prod(m[0] for i, m in enumerate(majorant) if i != j)
    bound = total_bound if radius is not None else (0.0 if not has_neg else None)
    return canonicalize(Phrase(c, tuple(out), p.essential, bound))


# ---------------------------------------------------------------------------
# complex extension, divisors, norms


def extend_complex(coeffs: Sequence[complex], t0: complex = 0j) -> Phrase:
    """Quaternion phrase sum diag(f_n, conj f_n) (z - diag(t0, conj t0))^n."""
    t0 = complex(t0)
    center = Quaternion(t0.real, t0.imag)
    words = []
    for n, c in enumerate(coeffs):
        c = complex(c)
        if c == 0:
            continue
        b = Quaternion(c.real, c.imag)
        words.append(Word.constant(b) if n == 0 else Word.monomial(b, n))
    return Phrase(center, tuple(words))


@dataclass(frozen=True)
class SingularityInfo:
    divisor: int
    kind: str  # "removable", "pole" or "essential"
    order: int = 0


def divisor_and_singularity(p: Phrase) -> SingularityInfo:
    c = canonicalize(p)
    if not c.words:
        raise DomainError("the zero phrase has no divisor")
    div = min(w.degree for w in c.words)
    if p.essential:
        return SingularityInfo(div, "essential", 0)
    if div < 0:
        return SingularityInfo(div, "pole", -div)
    return SingularityInfo(div, "removable", 0)


def series_norm(p: Phrase, r: float, R: float) -> tuple[float, float]:
    """(negative-part, non-negative-part) majorants of p on r <= |z - a| <= R."""
    neg = pos = 0.0
    for w in p.words:
        size = math.prod(abs(f.coef) for f in w.factors) * abs(w.tail)
        eta = w.degree
        if eta < 0:
            neg += size * r**eta
        else:
            pos += size * R**eta
    return neg, pos


# ---------------------------------------------------------------------------
# JSON


def word_to_json(w: Word) -> dict:
    facs = []
    for f in w.factors:
        entry = [Q.to_json(f.coef), f.power]
        if f.log:
            entry.append("ln")
        facs.append(entry)
    out = {"factors": facs}
    if not _is_one(w.tail):
        out["tail"] = Q.to_json(w.tail)
    return out


def phrase_to_json(p: Phrase) -> dict:
    return {"center": Q.to_json(p.center), "words": [word_to_json(w) for w in p.words]}


def phrase_from_json(obj: dict) -> "Phrase | ConjugatePhrase":
    if not isinstance(obj, dict) or "words" not in obj:
        raise DomainError("phrase JSON needs a 'words' list")
    center = Q.from_json(obj.get("center", 0.0))
    conj = any(len(f) == 3 and f[2] in ("z", "zc") for w in obj["words"] for f in w.get("factors", []))
    if conj:
        words = []
        for w in obj["words"]:
            facs = []
            for f in w.get("factors", []):
                sym = f[2] if len(f) == 3 else "z"
                facs.append(ConjFactor(Q.from_json(f[0]), sym, int(f[1])))
            words.append(ConjugateWord(tuple(facs), Q.from_json(w.get("tail", 1.0))))
        return ConjugatePhrase(center, tuple(words))
    words = []
    for w in obj["words"]:
        facs = []
        for f in w.get("factors", []):
            if len(f) not in (2, 3) or (len(f) == 3 and f[2] != "ln"):
                raise DomainError(f"bad factor entry {f!r}")
            facs.append(Factor(Q.from_json(f[0]), int(f[1]), len(f) == 3))
        words.append(Word(tuple(facs), Q.from_json(w.get("tail", 1.0))))
    return Phrase(center, tuple(words), bool(obj.get("essential", False)))


# ---------------------------------------------------------------------------
# forward-mode evaluation of D g . h


def _dual_mul(a, b):
    return qmul(a[0], b[0]), qmul(a[1], b[0]) + qmul(a[0], b[1])


def dual_apply(g: Phrase, Y, h, lnY=None):
    """(D g)(Y).h by dual-number evaluation of every word of g (vectorised).

    Equivalent to ``derivative_phrase(g).apply_array`` but linear in the
    word length instead of quadratic.
    """
    Y = np.asarray(Y, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), Y.shape)
    powers: dict = {1: (Y, h)}
    if any(w.has_log for w in g.words):
        if lnY is None:
            lnY = ln_array(Y)
        ln_dual = (np.asarray(lnY, dtype=float), exp_derivative_inverse_apply(lnY, h))
    zero = np.zeros_like(Y)

    def power(n):
        if n not in powers:
            if n == 0:
                one = np.zeros_like(Y)
                one[..., 0] = 1.0
                powers[0] = (one, zero)
            elif n > 0:
                half = power(n // 2)
                sq = _dual_mul(half, half)
                powers[n] = _dual_mul(sq, powers[1]) if n % 2 else sq
            elif n == -1:
                if np.any(np.sum(Y * Y, axis=-1) == 0.0):
                    raise DomainError("evaluation at a pole")
                yi = qinv(Y)
                powers[-1] = (yi, -qmul(qmul(yi, h), yi))
            else:
                m = -n
                half = power(-(m // 2))
                sq = _dual_mul(half, half)
                powers[n] = _dual_mul(sq, power(-1)) if m % 2 else sq
        return powers[n]

    out = np.zeros_like(Y)
    for w in g.words:
        acc = None
        for f in w.factors:
            b = f.coef.to_array()
            val, der = power(f.power)
            term = (qmul(b, val), qmul(b, der))
            if f.log:
                term = _dual_mul(term, ln_dual)
            acc = term if acc is None else _dual_mul(acc, term)
        if acc is None:
            continue  # constant word: derivative 0
        out = out + qmul(acc[1], w.tail.to_array())
    return out
