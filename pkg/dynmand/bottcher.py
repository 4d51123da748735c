"""
Fiberwise analytic tools: Green's function, Böttcher coordinate, critical radius.

The Böttcher coordinate of a monic polynomial is evaluated through the
infinite product

    phi(z) = z * prod_{n>=0} (f^{n+1}(z) / f^n(z)^d)^{1/d^{n+1}}

taking the principal root of every factor. A factor is only used when it lies
within 1/2 of 1; once the orbit passes the escape threshold the remaining
product is bounded by the same geometric tail as the Green's function.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import mpmath
import numpy as np

from dynmand.config import NUMERIC_PARAMS, PROBE_PARAMS, ROOT_PARAMS
from dynmand.errors import CertificationError, HypothesisError, OutsideCertifiedDomain, RootFindingError
from dynmand.guard import ResourceGuard, resource_guard
from dynmand.heights import GreenValue, horner, complex_coefficients, escape_threshold, local_height_arch
from dynmand.poly_core import LamPoly, ParamFamily, RatPoly, degree_hypothesis
from dynmand.roots import aberth, find_roots

logger = logging.getLogger(__name__)

_FLOAT_EPS = 2.220446049250313e-16

__all__ = [
    "BottcherEval",
    "CriticalData",
    "AnalyticityReport",
    "AsymptoticReport",
    "ConjugacyReport",
    "green_fiber",
    "bottcher_product",
    "critical_radius",
    "analyticity_threshold",
    "check_asymptotic",
    "check_conjugacy",
    "escape_threshold",
]


def green_fiber(f: Any, z: Any, tol: Optional[float] = None, guard: Optional[ResourceGuard] = None) -> GreenValue:
    """Green's function of the filled Julia set of f at z (the archimedean local height)."""
    return local_height_arch(f, z, tol=tol, guard=guard)


@dataclass
class BottcherEval:
    value: complex
    factors_used: int
    error_bound: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": [self.value.real, self.value.imag],
            "factors_used": self.factors_used,
            "error_bound": self.error_bound,
        }


def bottcher_product(f: Any, z: Any, tol: Optional[float] = None, guard: Optional[ResourceGuard] = None) -> BottcherEval:
    """
    Evaluate the Böttcher coordinate phi(z) of a monic polynomial.

    Args:
        f: Monic polynomial of degree d >= 2 (RatPoly or complex coefficients, low to high)
        z: Point in the certified domain
        tol: Relative accuracy target for phi(z)

    Returns:
        BottcherEval: phi(z) with an absolute error bound

    Raises:
        OutsideCertifiedDomain: If a factor leaves the disk |u - 1| <= 1/2 or the orbit
            does not reach 2^{1/(d-1)} times the escape threshold within the iteration cap
    """
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    guard = guard or resource_guard
    coeffs = complex_coefficients(f)
    d = len(coeffs) - 1
    if coeffs[d] != 1:
        raise ValueError("the Böttcher coordinate is normalized for monic polynomials")
    s = sum(abs(c) for c in coeffs[:d])
    R = escape_threshold(coeffs)
    crude = 2 ** (1.0 / (d - 1)) * R
    cap = guard.max_iterations()

    z0 = complex(z)
    if z0 == 0:
        raise OutsideCertifiedDomain(z0, "z = 0")
    log_phi = cmath.log(z0)
    w = z0
    scale = float(d)  # d^{n+1}
    reached = False
    for n in range(cap):
        w_next = horner(coeffs, w)
        wd = w ** d
        if wd == 0:
            raise OutsideCertifiedDomain(z0, "orbit underflowed toward 0")
        u = w_next / wd
        if abs(u - 1) > 0.5:
            raise OutsideCertifiedDomain(z0, f"factor {n} is {u}, farther than 1/2 from 1")
        log_phi += cmath.log(u) / scale
        w = w_next
        aw = abs(w)
        if not math.isfinite(aw):
            raise OutsideCertifiedDomain(z0, "orbit overflowed before the tail was certified")
        if aw >= crude:
            reached = True
            tail = 2 * (s / aw) / (scale * d * (1 - 1 / (2 * d)))
            if tail <= tol / 2 or aw > 1e150:
                value = cmath.exp(log_phi)
                magnitude = abs(value)
                rounding = 8 * (n + 2) * _FLOAT_EPS * magnitude * max(1.0, abs(log_phi))
                error = magnitude * 2 * tail + rounding
                logger.debug(f"bottcher product at {z0}: {n + 1} factors, error {error}")
                return BottcherEval(value=value, factors_used=n + 1, error_bound=error)
        scale *= d
    reason = "orbit never reached the certified radius" if not reached else "tail not certified within the cap"
    raise OutsideCertifiedDomain(z0, reason)


@dataclass
class ConjugacyReport:
    lhs: complex
    rhs: complex
    difference: float
    bound: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lhs": [self.lhs.real, self.lhs.imag],
            "rhs": [self.rhs.real, self.rhs.imag],
            "difference": self.difference,
            "bound": self.bound,
            "pass": self.passed,
        }


def check_conjugacy(f: Any, z: Any, tol: Optional[float] = None) -> ConjugacyReport:
    """Compare phi(f(z)) with phi(z)^d."""
    coeffs = complex_coefficients(f)
    d = len(coeffs) - 1
    inner = bottcher_product(coeffs, z, tol=tol)
    outer = bottcher_product(coeffs, horner(coeffs, complex(z)), tol=tol)
    rhs = inner.value ** d
    propagated = d * abs(inner.value) ** (d - 1) * inner.error_bound * (1 + inner.error_bound)
    bound = outer.error_bound + propagated + 16 * _FLOAT_EPS * abs(rhs)
    diff = abs(outer.value - rhs)
    return ConjugacyReport(lhs=outer.value, rhs=rhs, difference=diff, bound=bound, passed=diff <= bound)


@dataclass
class CriticalData:
    critical_points: List[complex]
    residuals: List[float]
    greens: List[GreenValue]
    R_lambda: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "critical_points": [[z.real, z.imag] for z in self.critical_points],
            "residuals": self.residuals,
            "greens": [g.to_dict() for g in self.greens],
            "R_lambda": self.R_lambda,
        }


def critical_radius(f: Any, tol: Optional[float] = None, guard: Optional[ResourceGuard] = None) -> CriticalData:
    """
    R = max over critical points x of exp(G(x)).

    Raises:
        RootFindingError: If the critical points cannot be refined and certified
    """
    if isinstance(f, RatPoly):
        if f.degree < 2:
            raise ValueError(f"dynamical degree must be >= 2 (got {f.degree})")
        roots = find_roots(f.derivative())
        bad = [r.residual for r in roots if not r.certified]
        if bad:
            raise RootFindingError(f"critical points of {f} not certified", bad)
        points = [r.value for r in roots]
        residuals = [r.residual for r in roots]
        coeffs = f.to_complex()
    else:
        coeffs = complex_coefficients(f)
        deriv = [i * c for i, c in enumerate(coeffs)][1:]
        with mpmath.workdps(ROOT_PARAMS["dps"]):
            zs = aberth(deriv)
            high_first = [mpmath.mpc(c) for c in reversed(deriv)]
            residuals = [float(abs(mpmath.polyval(high_first, z))) for z in zs]
        points = [complex(z) for z in zs]

    greens = [local_height_arch(coeffs, x, tol=tol, guard=guard) for x in points]
    R = max(math.exp(g.value) for g in greens)
    return CriticalData(critical_points=points, residuals=residuals, greens=greens, R_lambda=max(R, 1.0))


@dataclass
class AnalyticityReport:
    C0_estimate: float
    alpha: float
    m: int
    m_r: int
    exponents: List[Dict[str, Any]]
    radii: List[float]
    passing: List[bool]
    note: str = "probe-grid estimate; replaces non-effective existence constants"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "C0_estimate": self.C0_estimate,
            "alpha": self.alpha,
            "m": self.m,
            "m_r": self.m_r,
            "exponents": self.exponents,
            "radii": self.radii,
            "passing": self.passing,
            "note": self.note,
        }


def _probe(family: ParamFamily, c: LamPoly, lam: complex, safety: float, tol: float, guard: ResourceGuard) -> bool:
    coeffs = family.specialize(lam)
    point = c.evaluate(lam)
    try:
        crit = critical_radius(coeffs, tol=tol, guard=guard)
        if not abs(point) > safety * crit.R_lambda:
            return False
        bottcher_product(coeffs, point, tol=tol, guard=guard)
    except (OutsideCertifiedDomain, RootFindingError) as e:
        logger.debug(f"probe at lambda={lam} failed: {e}")
        return False
    return True


def analyticity_threshold(family: ParamFamily, c: LamPoly, probe: Optional[Dict[str, Any]] = None,
                          tol: Optional[float] = None, guard: Optional[ResourceGuard] = None) -> AnalyticityReport:
    """
    Estimate C_0 such that for probed |lambda| >= C_0 the marked point lies in the Böttcher domain.

    Every probe must satisfy |c(lambda)| > safety * R_lambda and admit a certified
    Böttcher product at c(lambda). C_0 is the smallest probe radius from which on
    every larger probe radius passes.

    Raises:
        HypothesisError: If m < m_r (or m = 0 for a constant family)
        CertificationError: If the largest probe radius fails
    """
    ok, reason = degree_hypothesis(family, c)
    if not ok:
        raise HypothesisError(reason)
    cfg = dict(PROBE_PARAMS)
    cfg.update(probe or {})
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    guard = guard or resource_guard

    radii = np.logspace(cfg["min_exp"], cfg["max_exp"], int(cfg["radii"]))
    thetas = 2 * np.pi * np.arange(int(cfg["angles"])) / int(cfg["angles"])
    passing = []
    failing_lambda = None
    for r in radii:
        row_ok = True
        for theta in thetas:
            lam = complex(r * np.cos(theta), r * np.sin(theta))
            if not _probe(family, c, lam, cfg["safety"], tol, guard):
                row_ok = False
                failing_lambda = lam
                break
        passing.append(row_ok)

    if not passing[-1]:
        raise CertificationError("analyticity probe fails at the largest radius", failing_lambda)
    start = len(passing) - 1
    while start > 0 and passing[start - 1]:
        start -= 1

    exponents = [
        {"m_i": t.m, "e_i": t.e, "d_minus_e": family.d - t.e, "ratio": t.m / (family.d - t.e)}
        for t in family.terms
    ]
    alpha = max((e["ratio"] for e in exponents), default=0.0)
    report = AnalyticityReport(
        C0_estimate=float(radii[start]),
        alpha=alpha,
        m=c.degree,
        m_r=family.m_r,
        exponents=exponents,
        radii=[float(r) for r in radii],
        passing=passing,
    )
    logger.info(f"analyticity threshold for {family}, c={c}: C0~{report.C0_estimate:.4g}, alpha={alpha}")
    return report


@dataclass
class AsymptoticReport:
    samples: List[Dict[str, Any]]
    C_fit: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"samples": self.samples, "C_fit": self.C_fit, "pass": self.passed}


def check_asymptotic(family: ParamFamily, c: LamPoly, samples: Sequence[complex], tol: Optional[float] = None) -> AsymptoticReport:
    """
    Ratio test for phi_lambda(c(lambda)) = q_m lambda^m + O(lambda^{m-1}).

    For each sample the ratio |phi - q_m lambda^m| / |lambda|^{m-1} is computed at
    lambda and at 2*lambda; the constant is stable when the ratio does not grow
    by more than half between the two dyadic scales (beyond numerical noise).
    """
    m = c.degree
    q = float(c.leading_coefficient)
    rows = []
    ratios = []
    passed = True
    for lam in samples:
        row: Dict[str, Any] = {"lambda": [complex(lam).real, complex(lam).imag]}
        try:
            scaled = []
            for mu in (complex(lam), 2 * complex(lam)):
                phi = bottcher_product(family.specialize(mu), c.evaluate(mu), tol=tol)
                expected = q * mu ** m
                norm = abs(mu) ** (m - 1)
                ratio = abs(phi.value - expected) / norm
                noise = (phi.error_bound + 1e-12 * abs(phi.value)) / norm
                scaled.append((ratio, noise))
            (r1, n1), (r2, n2) = scaled
            ok = r2 <= 1.5 * r1 + n1 + n2
            row.update({"ratio": r1, "ratio_2x": r2, "noise": n1 + n2, "pass": ok})
            ratios.extend([r1, r2])
        except OutsideCertifiedDomain as e:
            ok = False
            row.update({"error": str(e), "pass": False})
        passed = passed and ok
        rows.append(row)
    C_fit = max(ratios) if ratios else math.inf
    return AsymptoticReport(samples=rows, C_fit=C_fit, passed=passed)
