"""
Local and global canonical heights of a single polynomial.

The archimedean local height is the escape rate lim log+|f^n(x)|/d^n. It is
computed in complex doubles: once the orbit passes the certified escape
threshold R the remaining tail of the limit is bounded by a geometric series;
an orbit that stays inside |z| <= R for N steps has height at most B/d^N.

Finite places are handled exactly in valuation arithmetic. The result is a
rational multiple of log p.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from dynmand.config import NUMERIC_PARAMS
from dynmand.guard import ResourceGuard, resource_guard
from dynmand.places import (
    ARCH,
    Place,
    escape_exponent,
    escape_radius,
    relevant_primes,
    valuation,
)
from dynmand.poly_core import ParamFamily, RatPoly, format_fraction, is_exact, to_fraction

logger = logging.getLogger(__name__)

_FLOAT_EPS = 2.220446049250313e-16
# Past this modulus the orbit is abandoned; the tail bound is reported as is.
_OVERFLOW_GUARD = 1e150

ESCAPED = "escaped"
CYCLE = "cycle"
TRAPPED = "trapped"
INCONCLUSIVE = "inconclusive"


@dataclass
class GreenValue:
    """An escape-rate evaluation with a certified error bound."""

    value: float
    error_bound: float
    iterations_used: int
    escaped: bool
    status: str = ESCAPED

    @property
    def inconclusive(self) -> bool:
        return self.status == INCONCLUSIVE

    def scaled(self, factor: float) -> "GreenValue":
        return GreenValue(self.value * factor, self.error_bound * abs(factor), self.iterations_used,
                          self.escaped, self.status)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "error_bound": self.error_bound,
            "escaped": self.escaped,
            "iterations_used": self.iterations_used,
            "status": self.status,
        }


def complex_coefficients(f: Any) -> List[complex]:
    """Coefficients low to high as complex doubles; accepts RatPoly or any sequence."""
    if isinstance(f, RatPoly):
        coeffs = f.to_complex()
    else:
        coeffs = [complex(c) for c in f]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) < 3:
        raise ValueError(f"dynamical degree must be >= 2 (got {len(coeffs) - 1})")
    return coeffs


def escape_threshold(f: Any) -> float:
    """
    Certified archimedean escape radius.

    R = max(1, r_inf, 2*S/|a_d|, (4/|a_d|)^{1/(d-1)}) with S = sum_{i<d} |a_i|.
    For |z| > R every factor f(z)/(a_d z^d) lies within 1/2 of 1 and |f(z)| >= 2|z|.
    """
    coeffs = complex_coefficients(f)
    d = len(coeffs) - 1
    ad = abs(coeffs[d])
    s = sum(abs(c) for c in coeffs[:d])
    return max(1.0, escape_radius(coeffs, ARCH), 2 * s / ad, (4 / ad) ** (1.0 / (d - 1)))


def horner(coeffs: Sequence[complex], z: complex) -> complex:
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def local_height_arch(f: Any, x: Any, tol: Optional[float] = None, guard: Optional[ResourceGuard] = None,
                      max_iter: Optional[int] = None) -> GreenValue:
    """
    Archimedean local canonical height (equivalently the Green's function of the filled Julia set).

    Args:
        f: Polynomial (RatPoly or complex coefficient list, low to high)
        x: Point
        tol: Target error bound
        guard: Resource guard providing the iteration cap
        max_iter: Explicit iteration cap (clamped by the guard)

    Returns:
        GreenValue: value with error_bound; status is escaped, cycle, trapped or inconclusive
    """
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    if tol <= 0:
        raise ValueError(f"tol must be positive (got {tol})")
    guard = guard or resource_guard
    cap = guard.max_iterations(requested=max_iter)
    window = NUMERIC_PARAMS["escape_cycle_window"]
    cycle_tol = NUMERIC_PARAMS["cycle_tol"]
    slack = NUMERIC_PARAMS["trap_slack"]

    coeffs = complex_coefficients(f)
    d = len(coeffs) - 1
    ad = abs(coeffs[d])
    s = sum(abs(c) for c in coeffs[:d])
    R = escape_threshold(coeffs)
    log_ad = math.log(ad) / (d - 1)
    # sup of G on |z| <= R
    B = math.log(R) + log_ad + math.log(1.5) / (d - 1)

    z = complex(x)
    tortoise, power, lam = z, 1, 0
    cycle_seen = False
    trap_step = None
    scale = 1.0  # d**n as a float

    for n in range(cap + 1):
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            logger.warning(f"non-finite orbit value at step {n}")
            return GreenValue(0.0, B / scale, n, False, INCONCLUSIVE)

        az = abs(z)
        if az > R:
            eps_bound = s / (ad * az)
            head = (math.log(az) + log_ad) / scale
            tail = 2 * eps_bound / (scale * d * (1 - 1 / (2 * d)))
            if tail <= tol or az > _OVERFLOW_GUARD or n == cap:
                rounding = 8 * (n + 1) * _FLOAT_EPS * max(1.0, abs(head))
                value = max(head, 0.0)
                logger.debug(f"escaped after {n} steps: G={value}, tail={tail}")
                return GreenValue(value, tail + rounding, n, value > 0, ESCAPED)
        else:
            if trap_step is None and B / scale <= tol * slack:
                trap_step = n
            if trap_step is not None:
                if cycle_seen:
                    return GreenValue(0.0, B / scale, n, False, CYCLE)
                if n - trap_step >= window:
                    logger.debug(f"orbit trapped for {n} steps without a visible cycle")
                    return GreenValue(0.0, B / scale, n, False, TRAPPED)

        if n == cap:
            break

        z = horner(coeffs, z)
        scale *= d
        if not cycle_seen and abs(z - tortoise) <= cycle_tol * max(1.0, abs(z)):
            cycle_seen = True
        lam += 1
        if lam == power:
            tortoise, power, lam = z, power * 2, 0

    logger.warning(f"iteration cap {cap} reached without a decision")
    return GreenValue(0.0, B / scale, cap, False, INCONCLUSIVE)


@dataclass
class NonArchHeight:
    """Local height at a prime as an exact rational multiple of log p."""

    p: int
    coefficient: Fraction
    exact: bool
    iterations_used: int
    certificate: str
    upper_bound: Optional[Fraction] = None

    @property
    def value(self) -> float:
        return float(self.coefficient) * math.log(self.p)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "coefficient_of_log_p": format_fraction(self.coefficient),
            "value": self.value,
            "exact": self.exact,
            "iterations_used": self.iterations_used,
            "certificate": self.certificate,
            "upper_bound": None if self.upper_bound is None else format_fraction(self.upper_bound),
        }


def _reduce_padic(z: Fraction, p: int, K: int) -> Fraction:
    """A rational congruent to z modulo p^K with denominator a power of p."""
    if z == 0:
        return z
    v = valuation(z, p)
    if v >= K:
        return Fraction(0)
    u = z / Fraction(p) ** v
    mod = p ** (K - v)
    r = (u.numerator * pow(u.denominator, -1, mod)) % mod
    return Fraction(r) * Fraction(p) ** v


def _invariant_disk(vals: List[Tuple[int, int]], t_max) -> Optional[Fraction]:
    """
    Largest useful t <= t_max with min_i(v(a_i) + i*t) >= t, if any.

    vals holds (i, v(a_i)) for the nonzero coefficients.
    """
    candidates = {Fraction(t_max)}
    for a in range(len(vals)):
        for b in range(a + 1, len(vals)):
            (i, vi), (j, vj) = vals[a], vals[b]
            t = Fraction(vj - vi, i - j)
            if t <= t_max:
                candidates.add(t)
    for t in sorted(candidates, reverse=True):
        if min(vi + i * t for i, vi in vals) >= t:
            return t
    return None


def local_height_nonarch(f: RatPoly, x: Any, p: int, guard: Optional[ResourceGuard] = None,
                         work_digits: Optional[int] = None) -> NonArchHeight:
    """
    Local canonical height of x at the prime p, exactly.

    The orbit is followed modulo p^K. Escape (|z|_p > r_p) yields the closed form
    log|z|_p + log|a_d|_p/(d-1) divided by d^n. Entry into an invariant disk
    {v(z) >= t} yields 0. If the cap is reached first the record is inexact and
    carries an exact upper bound.

    Args:
        f: Polynomial over Q of degree >= 2
        x: Rational point
        p: Prime
        guard: Resource guard providing the p-adic iteration cap
        work_digits: Absolute p-adic precision of the orbit

    Returns:
        NonArchHeight
    """
    guard = guard or resource_guard
    cap = guard.max_iterations(nonarchimedean=True)
    K = work_digits or NUMERIC_PARAMS["nonarch_work_digits"]
    coeffs = list(f.coeffs)
    d = len(coeffs) - 1
    if d < 2:
        raise ValueError(f"dynamical degree must be >= 2 (got {d})")
    vals = [(i, valuation(a, p)) for i, a in enumerate(coeffs) if a != 0]
    vd = valuation(coeffs[d], p)
    rho = escape_exponent(f, p)
    base = Fraction(vd, d - 1)

    work = K
    z = to_fraction(x)
    exact_point = True  # z is x itself rather than a residue mod p^K
    for n in range(cap + 1):
        if z != 0:
            # a nonzero residue mod p^K has valuation < K, so v is exact either way
            v = valuation(z, p)
            if v < -rho:
                coefficient = (-v - base) / d ** n
                logger.debug(f"p={p}: escape after {n} steps, coefficient {coefficient}")
                return NonArchHeight(p, coefficient, True, n, "escape")
            v_lower = v
        else:
            v_lower = None if exact_point else K

        if v_lower is not None:
            t = _invariant_disk(vals, v_lower)
            if t is not None:
                return NonArchHeight(p, Fraction(0), True, n, f"invariant disk v >= {format_fraction(t)}")

        if n == cap:
            break
        if exact_point:
            K_next = work
        else:
            # z + O(p^K) maps to f(z) + O(p^K_next)
            vz = min(v_lower, 0)
            K_next = min(work, min(vi + K + (i - 1) * vz for i, vi in vals if i >= 1))
        if K_next <= -rho:
            logger.debug(f"p={p}: precision exhausted after {n} steps")
            break
        z = _reduce_padic(sum(a * z ** i for i, a in enumerate(coeffs)), p, K_next)
        K = K_next
        exact_point = False

    bound = max((rho - base) / d ** n, Fraction(0))
    logger.warning(f"p={p}: no escape or invariant disk within {n} steps; returning upper bound {bound}")
    return NonArchHeight(p, Fraction(0), False, n, "cap", upper_bound=bound)


def local_heights_nonarch(batch: Iterable[Tuple[RatPoly, Any, int]], guard: Optional[ResourceGuard] = None) -> List[NonArchHeight]:
    """Evaluate (f, x, p) triples independently; the result does not depend on the order of the batch."""
    return [local_height_nonarch(f, x, p, guard=guard) for f, x, p in batch]


@dataclass
class GlobalHeight:
    value: float
    arch: GreenValue
    finite: Dict[int, NonArchHeight] = field(default_factory=dict)

    @property
    def exact_finite(self) -> bool:
        return all(h.exact for h in self.finite.values())

    @property
    def error_bound(self) -> float:
        extra = sum(float(h.upper_bound) * math.log(h.p) for h in self.finite.values() if not h.exact)
        return self.arch.error_bound + extra

    @property
    def inconclusive(self) -> bool:
        return self.arch.inconclusive

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "error_bound": self.error_bound,
            "arch": self.arch.to_dict(),
            "finite": {str(p): h.to_dict() for p, h in sorted(self.finite.items())},
            "exact_finite": self.exact_finite,
        }


def canonical_height(f: RatPoly, x: Any, tol: Optional[float] = None, guard: Optional[ResourceGuard] = None) -> GlobalHeight:
    """
    Global canonical height sum_v N_v h_v(x) for f over Q and rational x.

    Only primes dividing a coefficient of f or x can contribute: at every other
    prime f has good reduction and the orbit of x stays integral.
    """
    x = to_fraction(x)
    primes = relevant_primes([a for a in f.coeffs if a != 0] + ([x] if x != 0 else []))
    finite = {p: local_height_nonarch(f, x, p, guard=guard) for p in primes}
    arch = local_height_arch(f, complex(float(x)), tol=tol, guard=guard)
    if arch.inconclusive:
        logger.warning(f"archimedean height of {x} under {f} is inconclusive")
    value = arch.value + sum(h.value for h in finite.values())
    return GlobalHeight(value=value, arch=arch, finite=finite)


def global_height(family: ParamFamily, lam: Any, x: Any, tol: Optional[float] = None,
                  guard: Optional[ResourceGuard] = None) -> GlobalHeight:
    """Canonical height of x under the fiber f_lam (lam and x rational)."""
    if not (is_exact(lam) and is_exact(x)):
        raise TypeError("global_height needs rational lambda and x")
    return canonical_height(family.specialize(lam), x, tol=tol, guard=guard)


@dataclass
class FunctionalEquationReport:
    place: Place
    lhs: float
    rhs: float
    bound: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"place": self.place.to_json(), "lhs": self.lhs, "rhs": self.rhs, "bound": self.bound, "pass": self.passed}


def check_functional_equation(f: Any, x: Any, tol: Optional[float] = None, place: Place = ARCH) -> FunctionalEquationReport:
    """
    Compare h(f(x)) with d*h(x) from two independent height runs.

    At a prime both sides are exact and must agree exactly.
    """
    if place.is_archimedean:
        coeffs = complex_coefficients(f)
        d = len(coeffs) - 1
        fx = horner(coeffs, complex(x))
        lhs = local_height_arch(coeffs, fx, tol=tol)
        rhs = local_height_arch(coeffs, x, tol=tol).scaled(d)
        bound = lhs.error_bound + rhs.error_bound
        ok = not (lhs.inconclusive or rhs.inconclusive) and abs(lhs.value - rhs.value) <= bound
        return FunctionalEquationReport(place, lhs.value, rhs.value, bound, ok)

    d = f.degree
    lhs = local_height_nonarch(f, f.evaluate(to_fraction(x)), place.p)
    rhs = local_height_nonarch(f, x, place.p)
    ok = lhs.exact and rhs.exact and lhs.coefficient == d * rhs.coefficient
    return FunctionalEquationReport(place, lhs.value, d * rhs.value, 0.0, ok)
