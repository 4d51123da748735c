"""
Absolute values on Q.

Finite places work on exact integer valuations; the archimedean place on
floats. Over Q every multiplicity N_v is 1, but it is kept on Place so that
sums over places read the same as over a general global field.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Union

from sympy import factorint, isprime, multiplicity

from dynmand.poly_core import LamPoly, ParamFamily, RatPoly, format_fraction, is_exact, to_fraction

logger = logging.getLogger(__name__)


class _InfiniteValuation:
    """Valuation of 0 at a finite place."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "+inf"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("+inf-valuation")

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __reduce__(self):
        return (_InfiniteValuation, ())


INFINITE_VALUATION = _InfiniteValuation()


@dataclass(frozen=True)
class Place:
    kind: str  # "arch" or "prime"
    p: Optional[int] = None
    N_v: int = 1

    def __post_init__(self):
        if self.kind == "arch":
            if self.p is not None:
                raise ValueError("the archimedean place carries no prime")
        elif self.kind == "prime":
            if self.p is None or not isprime(self.p):
                raise ValueError(f"p must be prime (got {self.p})")
        else:
            raise ValueError(f"unknown place kind {self.kind!r}")
        if self.N_v < 1:
            raise ValueError(f"N_v must be positive (got {self.N_v})")

    @classmethod
    def arch(cls) -> "Place":
        return cls("arch")

    @classmethod
    def prime(cls, p: int) -> "Place":
        return cls("prime", p)

    @property
    def is_archimedean(self) -> bool:
        return self.kind == "arch"

    def to_json(self) -> Dict[str, Any]:
        if self.is_archimedean:
            return {"kind": "arch"}
        return {"kind": "prime", "p": self.p}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "Place":
        if data.get("kind") == "arch":
            return cls.arch()
        return cls.prime(int(data["p"]))

    def __str__(self):
        return "inf" if self.is_archimedean else str(self.p)


ARCH = Place.arch()


def valuation(alpha: Any, p: int):
    """Exact p-adic valuation of a rational; INFINITE_VALUATION for 0."""
    q = to_fraction(alpha)
    if q == 0:
        return INFINITE_VALUATION
    return multiplicity(p, abs(q.numerator)) - multiplicity(p, q.denominator)


@dataclass(frozen=True)
class PadicAbs:
    """|alpha|_p stored through its exact valuation."""

    p: int
    valuation: Any

    @property
    def value(self) -> Fraction:
        if self.valuation is INFINITE_VALUATION:
            return Fraction(0)
        return Fraction(self.p) ** (-self.valuation)

    @property
    def log(self) -> float:
        if self.valuation is INFINITE_VALUATION:
            return -math.inf
        return -self.valuation * math.log(self.p)

    def __float__(self):
        return float(self.value)


def abs_value(place: Place, alpha: Any) -> Union[float, PadicAbs]:
    """
    |alpha|_v.

    Returns:
        float at the archimedean place, PadicAbs (exact valuation) at a prime
    """
    if place.is_archimedean:
        return abs(float(alpha)) if is_exact(alpha) else abs(alpha)
    return PadicAbs(place.p, valuation(alpha, place.p))


def log_abs(place: Place, alpha: Any) -> float:
    if place.is_archimedean:
        a = abs_value(place, alpha)
        return math.log(a) if a else -math.inf
    return abs_value(place, alpha).log


def relevant_primes(values: Iterable[Any]) -> List[int]:
    """Sorted primes dividing a numerator or denominator of any of the values."""
    primes = set()
    for v in values:
        q = to_fraction(v)
        for n in (abs(q.numerator), q.denominator):
            if n > 1:
                primes.update(factorint(n))
    return sorted(primes)


@dataclass
class ProductFormulaReport:
    alpha: Fraction
    valuations: Dict[int, int]
    exact_ok: bool
    log_sum: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": format_fraction(self.alpha),
            "valuations": {str(p): v for p, v in sorted(self.valuations.items())},
            "exact_ok": self.exact_ok,
            "log_sum": self.log_sum,
        }


def product_formula_check(alpha: Any) -> ProductFormulaReport:
    """
    Check sum_v N_v log|alpha|_v = 0 over {inf} and the primes dividing alpha.

    The exact check is |alpha|_inf * prod_p |alpha|_p == 1 in rationals.
    """
    q = to_fraction(alpha)
    if q == 0:
        raise ValueError("the product formula needs a nonzero rational")
    vals = {p: valuation(q, p) for p in relevant_primes([q])}
    prod = abs(q)
    for p, v in vals.items():
        prod *= Fraction(p) ** (-v)
    log_sum = math.log(abs(q.numerator)) - math.log(q.denominator) - sum(v * math.log(p) for p, v in vals.items())
    return ProductFormulaReport(alpha=q, valuations=vals, exact_ok=prod == 1, log_sum=log_sum)


def _coefficients(f: Any) -> List[Any]:
    if isinstance(f, RatPoly):
        return list(f.coeffs)
    coeffs = list(f)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def escape_exponent(f: Any, p: int) -> Fraction:
    """
    rho with r_v = p^rho at the prime p, for f over Q.

    rho = max( v(a_d)/(d-1), max_{a_i != 0} (v(a_d) - v(a_i))/(d-i) ).
    """
    coeffs = [to_fraction(c) for c in _coefficients(f)]
    d = len(coeffs) - 1
    if d < 2:
        raise ValueError(f"escape radius needs degree >= 2 (got {d})")
    vd = valuation(coeffs[d], p)
    rho = Fraction(vd, d - 1)
    for i in range(d):
        if coeffs[i] != 0:
            rho = max(rho, Fraction(vd - valuation(coeffs[i], p), d - i))
    return rho


def escape_radius(f: Any, place: Place) -> float:
    """
    r_v = max( |a_d|^{-1/(d-1)}, max_{0<=i<d} |a_i/a_d|^{1/(d-i)} ).

    Args:
        f: RatPoly, or a coefficient list (low to high) for the archimedean place
        place: The place

    Returns:
        float: r_v (p^rho at a prime, see escape_exponent)
    """
    if not place.is_archimedean:
        return float(place.p) ** float(escape_exponent(f, place.p))
    coeffs = [complex(c) for c in _coefficients(f)]
    d = len(coeffs) - 1
    if d < 2:
        raise ValueError(f"escape radius needs degree >= 2 (got {d})")
    ad = abs(coeffs[d])
    r = ad ** (-1.0 / (d - 1))
    for i in range(d):
        if coeffs[i] != 0:
            r = max(r, (abs(coeffs[i]) / ad) ** (1.0 / (d - i)))
    return r


@dataclass
class GoodPlaceReport:
    place: Place
    is_good: bool
    reasons: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"place": self.place.to_json(), "is_good": self.is_good, "reasons": list(self.reasons)}


@dataclass
class GoodPlacesResult:
    """Per-prime reports for every prime appearing in the data, plus the all-others certificate."""

    reports: List[GoodPlaceReport]
    certificate: str

    @property
    def bad_primes(self) -> List[int]:
        return [r.place.p for r in self.reports if not r.is_good]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "reports": [r.to_dict() for r in self.reports],
            "bad_primes": self.bad_primes,
            "certificate": self.certificate,
        }


def good_places(family: ParamFamily, c: LamPoly) -> GoodPlacesResult:
    """
    Classify primes for the pair (F, c).

    A prime is good when every coefficient of every c_i and of c is p-integral
    and the leading coefficient q_m of c is a p-adic unit. Only primes dividing
    a numerator or denominator of that data can fail, so the report covers
    those and certifies the rest.
    """
    if c.is_zero():
        raise ValueError("marked point must be nonzero")
    family_coeffs = [(i, q) for i, ci in enumerate(family.c) for q in ci.coeffs if q != 0]
    c_coeffs = [q for q in c.coeffs if q != 0]
    q_m = c.leading_coefficient
    primes = relevant_primes([q for _, q in family_coeffs] + c_coeffs)

    reports = []
    for p in primes:
        reasons = []
        for i in sorted({i for i, q in family_coeffs if valuation(q, p) < 0}):
            reasons.append(f"non-integral coefficient in c_{i}")
        if any(valuation(q, p) < 0 for q in c_coeffs):
            reasons.append("non-integral coefficient in marked point c")
        if valuation(q_m, p) != 0:
            reasons.append("leading coefficient q_m is not a unit")
        reports.append(GoodPlaceReport(Place.prime(p), not reasons, reasons))

    certificate = (
        f"every prime outside {primes} leaves all coefficients integral and q_m={format_fraction(q_m)} a unit"
        if primes
        else "all coefficients are integers and q_m is +-1: every prime is good"
    )
    bad = [r.place.p for r in reports if not r.is_good]
    logger.debug(f"good_places: checked primes {primes}, bad {bad}")
    return GoodPlacesResult(reports=reports, certificate=certificate)
