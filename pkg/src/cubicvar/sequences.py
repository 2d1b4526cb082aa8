"""Integer-sequence expressions and regime classification of sequence pairs.

Expressions are closed forms in the variable n over integer literals with
+, -, *, ^ (nonnegative integer exponents only) and parentheses; ^ binds
tighter than *, which binds tighter than + and -, and binary operators
associate left.  Everything evaluates in exact integer arithmetic.

Classification probes a pair (a_n, b_n) at n in {N/4, N/2, N} and decides
which covariance regime the pair belongs to:

  * the ratios b_n/a_n may diverge or vanish (degenerate: independent limits);
  * a continued-fraction convergent p/q of the high-n ratio may satisfy
    drift_n = |b_n*q - a_n*p| / q  exactly constant across probes, which
    pins a rational limit with finite drift k (at most one convergent can
    do this when the a_n are distinct);
  * otherwise a convergent the ratios demonstrably converge to, with drift
    blowing up, selects the averaged regime.

Finite probing cannot certify a limit; when the evidence is ambiguous the
result is Undetermined with the probe table attached rather than a guess.
All arithmetic on ratios and drifts is exact rational arithmetic; no
floating-point equality is ever tested.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .covariance_density import (
    AveragedRegime,
    CovarianceDensity,
    DegenerateRegime,
    RationalRegime,
    make_density,
)

DENOMINATOR_CAP = 10**6

# values outside this range abort classification (the evidence table is
# meant for desk-scale inspection, not bignum growth)
EVIDENCE_INT_MAX = 2**63 - 1


class ParseError(Exception):
    """Syntax error in a sequence expression."""

    def __init__(self, position: int, expected: str, found: str):
        self.position = position
        self.expected = expected
        self.found = found
        super().__init__(f"at position {position}: expected {expected}, found {found}")


class NotMonotone(Exception):
    """A sequence failed the strictly-increasing positive-integer contract."""


class UndeterminedClass(Exception):
    """Raised when a density is requested for an Undetermined classification."""


_TOKEN = re.compile(r"\s*(?:(\d+)|(n)|([+\-*^()]))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            at = len(text) - len(stripped)
            raise ParseError(at, "integer, 'n', or operator", repr(stripped[:1]))
        if m.group(1):
            tokens.append(("int", int(m.group(1)), m.start(1)))
        elif m.group(2):
            tokens.append(("n", None, m.start(2)))
        else:
            tokens.append((m.group(3), None, m.start(3)))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "*":
            self.take()
            node = ("*", node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "-":
            self.take()
            return ("neg", self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            kind, value, pos = self.peek()
            if kind != "int":
                raise ParseError(pos, "nonnegative integer exponent", kind)
            self.take()
            return ("^", base, value)
        return base

    def atom(self):
        kind, value, pos = self.take()
        if kind == "int":
            return ("lit", value)
        if kind == "n":
            return ("var",)
        if kind == "(":
            node = self.expr()
            kind2, _, pos2 = self.take()
            if kind2 != ")":
                raise ParseError(pos2, "')'", kind2)
            return node
        raise ParseError(pos, "integer, 'n', or '('", kind)


def _eval(node, n: int) -> int:
    op = node[0]
    if op == "lit":
        return node[1]
    if op == "var":
        return n
    if op == "neg":
        return -_eval(node[1], n)
    if op == "+":
        return _eval(node[1], n) + _eval(node[2], n)
    if op == "-":
        return _eval(node[1], n) - _eval(node[2], n)
    if op == "*":
        return _eval(node[1], n) * _eval(node[2], n)
    if op == "^":
        return _eval(node[1], n) ** node[2]
    raise AssertionError(f"bad node {node!r}")


@dataclass(frozen=True)
class SeqExpr:
    """A parsed closed-form integer sequence; call with n to evaluate."""

    text: str
    ast: tuple

    def __call__(self, n: int) -> int:
        return _eval(self.ast, n)


def parse_seq(text: str) -> SeqExpr:
    """Parse a sequence expression; raises ParseError with position on bad input."""
    parser = _Parser(_tokenize(text))
    node = parser.expr()
    kind, _, pos = parser.peek()
    if kind != "end":
        raise ParseError(pos, "end of input or binary operator", kind)
    return SeqExpr(text=text, ast=node)


@dataclass(frozen=True)
class RationalFiniteK:
    p: int
    q: int
    k: Fraction


@dataclass(frozen=True)
class AveragedLimit:
    L: Fraction
    reason: str  # 'rational_k_infinite' or 'irrational'


@dataclass(frozen=True)
class DegenerateLimit:
    limit: float  # 0.0 or math.inf


@dataclass(frozen=True)
class UndeterminedLimit:
    diagnostics: str


LimitKind = RationalFiniteK | AveragedLimit | DegenerateLimit | UndeterminedLimit


@dataclass(frozen=True)
class EvidenceRow:
    n: int
    a: int
    b: int
    ratio: Fraction
    drift: Fraction | None  # a_n * |L_n - L| for the candidate L, exact
    gcd: int


@dataclass(frozen=True)
class LimitClass:
    kind: LimitKind
    evidence: tuple[EvidenceRow, ...] = field(default_factory=tuple)


def _convergents(x: Fraction):
    """Continued-fraction convergents of x >= 0, in increasing denominator order."""
    p_prev, q_prev = 0, 1
    p_cur, q_cur = 1, 0
    num, den = x.numerator, x.denominator
    out = []
    while den:
        a = num // den
        num, den = den, num - a * den
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        out.append(Fraction(p_cur, q_cur))
    return out


def rational_candidates(x: Fraction, cap: int = DENOMINATOR_CAP) -> list[Fraction]:
    """Convergents of x with denominator at most cap."""
    return [c for c in _convergents(x) if c.denominator <= cap]


def _check_sequence(expr: SeqExpr, flag: str, n_points) -> None:
    for n in n_points:
        v, w = expr(n), expr(n + 1)
        if v <= 0:
            raise NotMonotone(f"{flag}: value {v} at n={n} is not positive")
        if w <= v:
            raise NotMonotone(f"{flag}: not strictly increasing at n={n} ({v} -> {w})")
        if max(abs(v), abs(w)) > EVIDENCE_INT_MAX:
            raise OverflowError(f"{flag}: value at n={n} exceeds the evidence table range")


def _drift(a: int, b: int, cand: Fraction) -> Fraction:
    """a_n * |b_n/a_n - p/q| = |b_n*q - a_n*p| / q, exactly."""
    p, q = cand.numerator, cand.denominator
    return Fraction(abs(b * q - a * p), q)


def classify(a: SeqExpr, b: SeqExpr, n_probe: int = 512) -> LimitClass:
    """Classify the pair (a_n, b_n) into a covariance regime from finite probes.

    Probes n in {n_probe/4, n_probe/2, n_probe} (n_probe >= 64).  Decision
    rules, all in exact arithmetic:

      * ratios shrinking by half or doubling across the probes: degenerate;
      * a convergent with drift exactly constant: rational limit, k = drift;
      * a convergent the ratios close in on (gap at least halved over the
        probe span) with strictly growing drift that at least doubles
        overall: averaged regime;
      * anything else: Undetermined, with the evidence attached.
    """
    if n_probe < 64:
        raise ValueError("n_probe must be at least 64")
    probes = [n_probe // 4, n_probe // 2, n_probe]
    _check_sequence(a, "a", [*range(1, 65), *probes])
    _check_sequence(b, "b", [*range(1, 65), *probes])

    av = [a(n) for n in probes]
    bv = [b(n) for n in probes]
    ratios = [Fraction(bn, an) for an, bn in zip(av, bv)]

    def rows(candidate: Fraction | None) -> tuple[EvidenceRow, ...]:
        return tuple(
            EvidenceRow(
                n=n,
                a=an,
                b=bn,
                ratio=r,
                drift=None if candidate is None else _drift(an, bn, candidate),
                gcd=math.gcd(an, bn),
            )
            for n, an, bn, r in zip(probes, av, bv, ratios)
        )

    r1, r2, r3 = ratios
    if r1 < r2 < r3 and r3 >= 2 * r1:
        return LimitClass(DegenerateLimit(math.inf), rows(None))
    if r1 > r2 > r3 and r3 <= r1 / 2:
        return LimitClass(DegenerateLimit(0.0), rows(None))

    candidates = rational_candidates(r3)

    # a constant drift pins the limit; at most one reduced fraction can have
    # constant drift across probes with distinct a_n
    for cand in candidates:
        d1, d2, d3 = (_drift(an, bn, cand) for an, bn in zip(av, bv))
        if d1 == d2 == d3:
            return LimitClass(
                RationalFiniteK(cand.numerator, cand.denominator, d3), rows(cand)
            )

    # averaged: ratios must close in on the candidate while the drift blows up
    for cand in candidates:
        gaps = [abs(r - cand) for r in ratios]
        drifts = [_drift(an, bn, cand) for an, bn in zip(av, bv)]
        converging = gaps[0] > gaps[1] > gaps[2] and gaps[2] <= gaps[0] / 2
        diverging = (
            drifts[0] > 0 and drifts[0] < drifts[1] < drifts[2] and drifts[2] >= 2 * drifts[0]
        )
        if converging and diverging:
            return LimitClass(
                AveragedLimit(cand, "rational_k_infinite"), rows(cand)
            )

    diag = (
        "probes neither stabilize a drift nor converge to a convergent "
        f"(ratios {[str(r) for r in ratios]})"
    )
    return LimitClass(UndeterminedLimit(diag), rows(None))


def verify_integrality_bound(p: int, q: int, evidence) -> bool:
    """Check drift >= 1/q at every probe where the ratio differs from p/q.

    Equivalent to |b_n*q - a_n*p| >= 1 in exact integers: the numerator is an
    integer, so it is either zero (ratio equals p/q) or at least one.
    """
    if math.gcd(p, q) != 1:
        raise ValueError(f"{p}/{q} is not in lowest terms")
    target = Fraction(p, q)
    for row in evidence:
        if row.ratio != target and abs(row.b * q - row.a * p) < 1:
            return False
    return True


def rho_for(limit_class: LimitClass, tol: float) -> CovarianceDensity:
    """Covariance density for a classified pair; Undetermined is an error."""
    kind = limit_class.kind
    if isinstance(kind, RationalFiniteK):
        return make_density(RationalRegime(kind.p, kind.q, float(kind.k)), tol)
    if isinstance(kind, AveragedLimit):
        return make_density(AveragedRegime(float(kind.L)), tol)
    if isinstance(kind, DegenerateLimit):
        return make_density(DegenerateRegime(kind.limit), tol)
    raise UndeterminedClass(kind.diagnostics)
