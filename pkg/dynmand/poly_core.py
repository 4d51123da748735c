"""
Exact polynomial and family algebra.

RatPoly is a univariate polynomial in x with exact rational coefficients,
LamPoly the same object in the parameter variable (written "l" in text).
ParamFamily holds a one-parameter family f_l(x) = x^d + sum c_i(l) x^i in
normal form together with its decomposition P(x) + sum Q_j(x) l^{m_j}.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import mpmath
from sympy import integer_nthroot

from dynmand.config import ALGEBRA_PARAMS
from dynmand.errors import DegreeError
from dynmand.guard import ResourceGuard, resource_guard

logger = logging.getLogger(__name__)


class _NegativeInfinityDegree:
    """Degree of the zero polynomial. Compares below every integer, supports no arithmetic."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("-inf-degree")

    def __repr__(self):
        return "-inf"

    def __reduce__(self):
        return (_NegativeInfinityDegree, ())


DEG_NEG_INF = _NegativeInfinityDegree()


def to_fraction(value: Any) -> Fraction:
    """Convert an exact scalar (int, Fraction, numeric string) to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not polynomial coefficients")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def is_exact(value: Any) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _convolve(a: Sequence[Fraction], b: Sequence[Fraction]) -> List[Fraction]:
    # Clear denominators so the inner loop runs on ints.
    da = 1
    for q in a:
        da = da * q.denominator // math.gcd(da, q.denominator)
    db = 1
    for q in b:
        db = db * q.denominator // math.gcd(db, q.denominator)
    ia = [int(q * da) for q in a]
    ib = [int(q * db) for q in b]
    out = [0] * (len(ia) + len(ib) - 1)
    for i, x in enumerate(ia):
        if x == 0:
            continue
        for j, y in enumerate(ib):
            if y:
                out[i + j] += x * y
    den = da * db
    return [Fraction(v, den) for v in out]


class RatPoly:
    """
    Univariate polynomial with exact rational coefficients.

    coeffs[i] is the coefficient of x^i; trailing zeros are stripped so the
    last stored coefficient is nonzero unless the polynomial is zero.
    """

    __slots__ = ("coeffs",)
    variable = "x"

    def __init__(self, coeffs: Iterable[Any] = ()):
        cs = [to_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: Tuple[Fraction, ...] = tuple(cs)

    # construction helpers

    @classmethod
    def constant(cls, value: Any):
        return cls([value])

    @classmethod
    def monomial(cls, degree: int, coeff: Any = 1):
        return cls([0] * degree + [coeff])

    @classmethod
    def identity(cls):
        return cls([0, 1])

    def _new(self, coeffs):
        return type(self)(coeffs)

    def _coerce(self, other) -> "RatPoly":
        if isinstance(other, RatPoly):
            return other
        return self._new([other])

    # basic structure

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else DEG_NEG_INF

    @property
    def leading_coefficient(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def __len__(self):
        return len(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, RatPoly):
            return self.coeffs == other.coeffs
        if is_exact(other):
            return self.coeffs == RatPoly([other]).coeffs
        return NotImplemented

    def __hash__(self):
        return hash((self.variable, self.coeffs))

    # arithmetic

    def __neg__(self):
        return self._new([-c for c in self.coeffs])

    def __add__(self, other):
        other = self._coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return self._new([self.coefficient(i) + other.coefficient(i) for i in range(n)])

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, RatPoly):
            k = to_fraction(other)
            return self._new([c * k for c in self.coeffs])
        if self.is_zero() or other.is_zero():
            return self._new([])
        return self._new(_convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        if exponent < 0:
            raise ValueError("negative powers are not polynomials")
        result = self._new([1])
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def __divmod__(self, other):
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs) + 1
        if dq <= 0:
            return self._new([]), self._new(rem)
        quo = [Fraction(0)] * dq
        lead = other.leading_coefficient
        dv = len(other.coeffs) - 1
        for k in range(dq - 1, -1, -1):
            q = rem[k + dv] / lead
            quo[k] = q
            if q:
                for j, b in enumerate(other.coeffs):
                    rem[k + j] -= q * b
        return self._new(quo), self._new(rem[:dv])

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def monic(self):
        if self.is_zero():
            return self
        return self * (1 / self.leading_coefficient)

    def gcd(self, other: "RatPoly") -> "RatPoly":
        """Monic greatest common divisor (zero if both are zero)."""
        a, b = self, other
        while not b.is_zero():
            a, b = b, (a % b).monic()
        return a.monic()

    def derivative(self):
        return self._new([i * c for i, c in enumerate(self.coeffs)][1:])

    def compose(self, inner: "RatPoly") -> "RatPoly":
        """Return self(inner(.)); the result carries inner's variable."""
        result = inner._new([])
        for c in reversed(self.coeffs):
            result = result * inner + c
        return result

    # evaluation

    def evaluate(self, x: Any):
        """Horner evaluation; exact when x is exact, otherwise in x's scalar kind."""
        if is_exact(x):
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + _as_scalar(c, x)
        return acc

    __call__ = evaluate

    def to_complex(self) -> List[complex]:
        return [complex(c) for c in self.coeffs]

    # rendering

    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = -c if c < 0 else c
            if i == 0:
                body = format_fraction(mag)
            else:
                mono = self.variable if i == 1 else f"{self.variable}^{i}"
                body = mono if mag == 1 else f"{format_fraction(mag)}*{mono}"
            parts.append((sign, body))
        first_sign, first_body = parts[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"{type(self).__name__}({str(self)!r})"

    def to_json(self) -> List[str]:
        return [format_fraction(c) for c in self.coeffs]


class LamPoly(RatPoly):
    """Exact polynomial in the parameter lambda."""

    __slots__ = ()
    variable = "l"


def _as_scalar(c: Fraction, like: Any):
    if isinstance(like, (mpmath.mpf, mpmath.mpc)):
        return mpmath.mpf(c.numerator) / c.denominator
    return float(c)


@dataclass(frozen=True)
class AffineMap:
    """delta(x) = a*x + b; a may be an mpmath number when the normalization is inexact."""

    a: Any
    b: Any
    exact: bool = True

    def __call__(self, x):
        return self.a * x + self.b

    def inverse(self, y):
        return (y - self.b) / self.a

    def to_dict(self) -> Dict[str, Any]:
        if self.exact:
            return {"a": format_fraction(self.a), "b": format_fraction(self.b), "exact": True}
        return {"a": str(self.a), "b": str(self.b), "exact": False}


@dataclass(frozen=True)
class Normalization:
    """Result of conjugating f into normal form g = delta^{-1} o f o delta."""

    g: Any  # RatPoly when exact, tuple of mpmath numbers otherwise
    delta: AffineMap
    exact: bool

    def to_dict(self) -> Dict[str, Any]:
        g = self.g.to_json() if self.exact else [str(c) for c in self.g]
        return {"g": g, "delta": self.delta.to_dict(), "exact": self.exact}


def is_normal_form(f: RatPoly) -> bool:
    d = f.degree
    if d is DEG_NEG_INF or d < 2:
        return False
    return f.leading_coefficient == 1 and f.coefficient(d - 1) == 0


def normalize_polynomial(f: RatPoly, extra_bits: Optional[int] = None) -> Normalization:
    """
    Conjugate f by an affine map into a monic polynomial with no x^{d-1} term.

    Args:
        f: Polynomial of degree d >= 2
        extra_bits: Extra binary precision used when the scaling factor is irrational

    Returns:
        Normalization: the normal form g, the map delta, and an exactness flag

    Raises:
        DegreeError: If deg f < 2
    """
    d = f.degree
    if d is DEG_NEG_INF or d < 2:
        raise DegreeError(f"normalization needs degree >= 2 (got {d})")

    c_d = f.leading_coefficient
    b = -f.coefficient(d - 1) / (d * c_d)
    root = _rational_root(c_d, d - 1)

    if root is not None:
        a = 1 / root
        delta = AffineMap(a, b, exact=True)
        inner = RatPoly([b, a])
        g = (f.compose(inner) - b) * (1 / a)
        logger.debug(f"exact normalization of {f}: delta(x) = {a}*x + {b}")
        return Normalization(g=g, delta=delta, exact=True)

    bits = extra_bits if extra_bits is not None else ALGEBRA_PARAMS["extra_bits"]
    with mpmath.workprec(53 + bits):
        cd = mpmath.mpf(c_d.numerator) / c_d.denominator
        if c_d > 0:
            a = cd ** (mpmath.mpf(-1) / (d - 1))
        elif (d - 1) % 2 == 1:
            a = -((-cd) ** (mpmath.mpf(-1) / (d - 1)))
        else:
            a = mpmath.mpc(cd) ** (mpmath.mpf(-1) / (d - 1))
        bm = mpmath.mpf(b.numerator) / b.denominator
        # expand f(a x + b) by Horner on coefficient lists
        acc: List[Any] = []
        for c in reversed(f.coeffs):
            nxt = [mpmath.mpf(0)] * (len(acc) + 1)
            for i, v in enumerate(acc):
                nxt[i] += v * bm
                nxt[i + 1] += v * a
            nxt[0] += mpmath.mpf(c.numerator) / c.denominator
            acc = nxt
        acc[0] -= bm
        g = tuple(v / a for v in acc)
    logger.warning(f"inexact normalization of {f}: scaling factor is irrational, using {53 + bits} bits")
    return Normalization(g=g, delta=AffineMap(a, bm, exact=False), exact=False)


def _rational_root(q: Fraction, k: int) -> Optional[Fraction]:
    """Real k-th root of q if it is rational (negative only for odd k), else None."""
    if k == 1:
        return q
    if q < 0 and k % 2 == 0:
        return None
    num, num_exact = integer_nthroot(abs(q.numerator), k)
    den, den_exact = integer_nthroot(q.denominator, k)
    if not (num_exact and den_exact):
        return None
    root = Fraction(int(num), int(den))
    return -root if q < 0 else root


@dataclass(frozen=True)
class FamilyTerm:
    """One summand Q_j(x) * l^{m_j} of the decomposition."""

    m: int
    Q: RatPoly
    e: int


@dataclass(frozen=True)
class ParamFamily:
    """
    f_l(x) = x^d + sum_{i=0}^{d-2} c_i(l) x^i, stored with its decomposition
    P(x) + sum_j Q_j(x) l^{m_j}.
    """

    d: int
    c: Tuple[LamPoly, ...]
    P: RatPoly
    terms: Tuple[FamilyTerm, ...] = field(default_factory=tuple)

    @property
    def r(self) -> int:
        return len(self.terms)

    @property
    def m_r(self) -> int:
        return self.terms[-1].m if self.terms else 0

    @property
    def is_constant_family(self) -> bool:
        return self.r == 0

    def x_coefficients(self) -> List[LamPoly]:
        """Coefficients of x^0..x^d as LamPoly (x^{d-1} is zero, x^d is one)."""
        return list(self.c) + [LamPoly([]), LamPoly([1])]

    def specialize(self, lam: Any):
        """
        The fiber polynomial f_lam.

        Returns:
            RatPoly for exact lam, otherwise a list of complex coefficients (low to high)
        """
        if is_exact(lam):
            return RatPoly([ci.evaluate(lam) for ci in self.c] + [0, 1])
        return [complex(ci.evaluate(lam)) for ci in self.c] + [0j, 1 + 0j]

    def apply_to(self, g: LamPoly) -> LamPoly:
        """f_l(g(l)) as an exact polynomial in l."""
        acc = LamPoly([1])
        for coeff in reversed(self.x_coefficients()[:-1]):
            acc = acc * g + coeff
        return acc

    def __str__(self):
        parts = [f"x^{self.d}"]
        for i in range(self.d - 2, -1, -1):
            ci = self.c[i]
            if ci.is_zero():
                continue
            mono = "" if i == 0 else ("*x" if i == 1 else f"*x^{i}")
            parts.append(f"({ci}){mono}")
        return " + ".join(parts)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d": self.d,
            "c": [ci.to_json() for ci in self.c],
            "P": self.P.to_json(),
            "terms": [{"m": t.m, "Q": t.Q.to_json(), "e": t.e} for t in self.terms],
            "text": str(self),
        }


def decompose_family(c: Sequence[LamPoly], d: int) -> ParamFamily:
    """
    Split x^d + sum c_i(l) x^i into P(x) + sum_j Q_j(x) l^{m_j}.

    Args:
        c: The d-1 coefficient polynomials c_0..c_{d-2}
        d: Degree in x

    Returns:
        ParamFamily: the family with its decomposition
    """
    if d < 2:
        raise DegreeError(f"a family needs degree >= 2 (got {d})")
    if len(c) != d - 1:
        raise ValueError(f"expected {d - 1} coefficient polynomials for degree {d} (got {len(c)})")

    cs = tuple(ci if isinstance(ci, LamPoly) else LamPoly(ci.coeffs if isinstance(ci, RatPoly) else ci) for ci in c)
    p_coeffs = [ci.coefficient(0) for ci in cs] + [0, 1]
    exponents = sorted({j for ci in cs for j in range(1, len(ci.coeffs)) if ci.coeffs[j] != 0})
    terms = []
    for m in exponents:
        Q = RatPoly([ci.coefficient(m) for ci in cs])
        terms.append(FamilyTerm(m=m, Q=Q, e=Q.degree))
    family = ParamFamily(d=d, c=cs, P=RatPoly(p_coeffs), terms=tuple(terms))
    logger.debug(f"decomposed {family}: r={family.r}, exponents={exponents}")
    return family


def reassemble(family: ParamFamily) -> List[LamPoly]:
    """Rebuild c_0..c_{d-2} from P and the terms Q_j l^{m_j}."""
    d = family.d
    coeffs: List[Dict[int, Fraction]] = [dict() for _ in range(d - 1)]
    for i in range(d - 1):
        if family.P.coefficient(i):
            coeffs[i][0] = family.P.coefficient(i)
    for term in family.terms:
        for i in range(d - 1):
            q = term.Q.coefficient(i)
            if q:
                coeffs[i][term.m] = coeffs[i].get(term.m, Fraction(0)) + q
    out = []
    for entry in coeffs:
        top = max(entry) if entry else -1
        out.append(LamPoly([entry.get(j, 0) for j in range(top + 1)]))
    return out


def eval_family(family: ParamFamily, lam: Any, x: Any):
    """f_lam(x) by Horner evaluation; exact when both inputs are exact."""
    if is_exact(lam) and is_exact(x):
        return family.specialize(lam).evaluate(x)
    coeffs = [ci.evaluate(lam) for ci in family.c]
    acc = 1
    for i in range(family.d - 1, -1, -1):
        ci = coeffs[i] if i < family.d - 1 else 0
        acc = acc * x + ci
    return acc


def predicted_degree(family: ParamFamily, c: LamPoly, n: int) -> int:
    deg = c.degree if not c.is_zero() else 0
    for _ in range(n):
        # deg c_i(l) g^i <= deg c_i + i * deg g
        bounds = [family.d * deg] + [ci.degree + i * deg for i, ci in enumerate(family.c) if not ci.is_zero()]
        deg = max(bounds)
    return deg


def iterate_param(family: ParamFamily, c: LamPoly, n: int, guard: Optional[ResourceGuard] = None) -> LamPoly:
    """
    g_{c,n}(l) = f_l^n(c(l)) as an exact polynomial.

    Args:
        family: The parametric family
        c: Marked point
        n: Number of iterations (n >= 0)
        guard: Resource guard holding the degree cap

    Returns:
        LamPoly: the n-th iterate

    Raises:
        DegreeCapExceeded: If the predicted degree exceeds the cap
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative (got {n})")
    guard = guard or resource_guard
    guard.check_expand(predicted_degree(family, c, n))
    g = c if isinstance(c, LamPoly) else LamPoly(c.coeffs)
    for _ in range(n):
        g = family.apply_to(g)
    return g


@dataclass
class DegreeLawReport:
    expected_deg: Optional[int]
    actual_deg: Any
    expected_lead: Optional[Fraction]
    actual_lead: Fraction
    passed: bool
    hypothesis_ok: bool
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "expected_deg": self.expected_deg,
            "actual_deg": self.actual_deg if isinstance(self.actual_deg, int) else repr(self.actual_deg),
            "expected_lead": None if self.expected_lead is None else format_fraction(self.expected_lead),
            "actual_lead": format_fraction(self.actual_lead),
            "pass": self.passed,
            "hypothesis_ok": self.hypothesis_ok,
            "note": self.note,
        }


def degree_hypothesis(family: ParamFamily, c: LamPoly) -> Tuple[bool, str]:
    """
    Check m = deg(c) >= m_r, and m >= 1 for constant families.

    Returns:
        tuple: (holds, reason)
    """
    m = c.degree
    if m is DEG_NEG_INF:
        return False, "marked point is the zero polynomial"
    if m < family.m_r:
        return False, f"hypothesis (ii) fails: m={m} < m_r={family.m_r}"
    if family.r == 0 and m < 1:
        return False, "hypothesis fails: constant marked point for a constant family"
    return True, "hypothesis holds"


def check_degree_law(family: ParamFamily, c: LamPoly, n: int, guard: Optional[ResourceGuard] = None) -> DegreeLawReport:
    """
    Compare deg and leading coefficient of g_{c,n} with m*d^n and q_m^{d^n}.

    A failed hypothesis is reported in the result, never raised.
    """
    ok, reason = degree_hypothesis(family, c)
    g = iterate_param(family, c, n, guard=guard)
    if not ok:
        logger.info(f"degree law not applicable for c={c}: {reason}")
        return DegreeLawReport(None, g.degree, None, g.leading_coefficient, False, False, reason)
    m = c.degree
    expected_deg = (guard or resource_guard).predicted_iterate_degree(m, family.d, n)
    expected_lead = c.leading_coefficient ** (family.d ** n)
    passed = g.degree == expected_deg and g.leading_coefficient == expected_lead
    if not passed:
        logger.warning(f"degree law mismatch for {family}, c={c}, n={n}")
    return DegreeLawReport(expected_deg, g.degree, expected_lead, g.leading_coefficient, passed, True, reason)


def family_from_polynomial(f: RatPoly) -> Tuple[ParamFamily, Normalization]:
    """
    The family delta^{-1}(f(delta(x)) + l) = g(x) + l/a attached to f(x) + l,
    with g = a^{-1}(f(delta(x)) - b) the normal form of f.

    Only the exact normalization branch yields a family over Q[l].
    """
    norm = normalize_polynomial(f)
    if not norm.exact:
        raise ValueError(f"{f} has no rational normal form; the family f(x) + l needs an exact conjugation")
    g = norm.g
    a = norm.delta.a
    d = g.degree
    c = [LamPoly([g.coefficient(i)]) for i in range(d - 1)]
    c[0] = LamPoly([g.coefficient(0), 1 / a])
    return decompose_family(c, d), norm


def conjugate_marked_point(norm: Normalization, c: LamPoly) -> LamPoly:
    """delta^{-1}(c(l)) for an exact normalization."""
    a, b = norm.delta.a, norm.delta.b
    return LamPoly(((c - b) * (1 / a)).coeffs)
