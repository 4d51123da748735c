"""
Simultaneous root refinement with certified residuals.

Exact polynomials are split into square-free parts (Yun) before refinement,
so every refined root is simple. Each root is refined by Aberth iteration at
ROOT_PARAMS["dps"] decimal digits; the residual of the exact polynomial at the
refined point is then bounded with interval arithmetic (mpmath.iv).
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, List, Optional, Sequence, Tuple

import mpmath

from dynmand.config import ROOT_PARAMS
from dynmand.errors import RootFindingError
from dynmand.poly_core import DEG_NEG_INF, RatPoly

logger = logging.getLogger(__name__)


def square_free_decomposition(poly: RatPoly) -> List[Tuple[RatPoly, int]]:
    """
    Yun's algorithm over Q.

    Returns:
        list: (monic square-free factor, multiplicity) pairs with
            poly = lead * prod factor^multiplicity
    """
    if poly.is_zero():
        raise ValueError("the zero polynomial has no square-free decomposition")
    if poly.degree == 0:
        return []
    f = poly.monic()
    df = f.derivative()
    a = f.gcd(df)
    b = f // a
    c = df // a
    d = c - b.derivative()
    out = []
    i = 1
    while b.degree is not DEG_NEG_INF and b.degree > 0:
        a = b.gcd(d)
        b = b // a
        c = d // a
        d = c - b.derivative()
        if a.degree > 0:
            out.append((a, i))
        i += 1
    return out


def _mp(q: Fraction):
    return mpmath.mpf(q.numerator) / q.denominator


def _root_bound(coeffs: Sequence[Any]) -> Any:
    """Fujiwara bound on the moduli of the roots."""
    n = len(coeffs) - 1
    lead = abs(coeffs[-1])
    bound = mpmath.mpf(0)
    for i in range(1, n + 1):
        a = abs(coeffs[n - i])
        if a:
            term = (a / lead) ** (mpmath.mpf(1) / i)
            if i == n:
                term = (a / (2 * lead)) ** (mpmath.mpf(1) / i)
            bound = max(bound, term)
    return 2 * bound if bound else mpmath.mpf(1)


def aberth(coeffs: Sequence[Any], dps: Optional[int] = None, max_iter: Optional[int] = None) -> List[Any]:
    """
    All roots of sum coeffs[i] x^i by Aberth iteration.

    Args:
        coeffs: Coefficients low to high (Fraction, complex or mpmath numbers)
        dps: Working decimal digits
        max_iter: Sweeps before giving up

    Returns:
        list: mpmath.mpc roots, in a deterministic order

    Raises:
        RootFindingError: If the iteration does not converge
    """
    dps = dps or ROOT_PARAMS["dps"]
    max_iter = max_iter or ROOT_PARAMS["max_iter"]
    with mpmath.workdps(dps):
        cs = [_mp(c) if isinstance(c, (Fraction, int)) else mpmath.mpmathify(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        n = len(cs) - 1
        if n < 1:
            return []
        if n == 1:
            return [mpmath.mpc(-cs[0] / cs[1])]
        high_first = list(reversed(cs))
        radius = _root_bound(cs)
        zs = [radius * mpmath.expj(2 * mpmath.pi * k / n + mpmath.mpf("0.4")) for k in range(n)]
        eps = mpmath.mpf(10) ** (-(dps - 5))
        for sweep in range(max_iter):
            biggest = mpmath.mpf(0)
            new = list(zs)
            for k in range(n):
                z = zs[k]
                p, dp = mpmath.polyval(high_first, z, derivative=True)
                if p == 0:
                    continue
                ratio = p / dp if dp != 0 else mpmath.mpc(eps)
                repulsion = mpmath.fsum(1 / (z - zs[j]) for j in range(n) if j != k)
                denom = 1 - ratio * repulsion
                offset = ratio / denom if denom != 0 else ratio
                new[k] = z - offset
                biggest = max(biggest, abs(offset) / max(1, abs(z)))
            zs = new
            if biggest <= eps:
                logger.debug(f"aberth converged in {sweep + 1} sweeps (degree {n})")
                return zs
    residuals = [float(abs(mpmath.polyval(high_first, z))) for z in zs]
    raise RootFindingError(f"Aberth iteration did not converge in {max_iter} sweeps (degree {n})", residuals)


def interval_residual(poly: RatPoly, z: Any, dps: Optional[int] = None) -> float:
    """Rigorous upper bound on |poly(z)| from interval Horner evaluation."""
    dps = dps or ROOT_PARAMS["dps"]
    iv = mpmath.iv
    old = iv.dps
    iv.dps = dps
    try:
        zr = iv.mpf(str(mpmath.re(z)))
        zi = iv.mpf(str(mpmath.im(z)))
        re, im = iv.mpf(0), iv.mpf(0)
        for c in reversed(poly.coeffs):
            re, im = re * zr - im * zi, re * zi + im * zr
            re = re + iv.mpf(c.numerator) / c.denominator
        with mpmath.workdps(dps):
            hr = max(abs(mpmath.mp.make_mpf(end)) for end in re._mpi_)
            hi = max(abs(mpmath.mp.make_mpf(end)) for end in im._mpi_)
            bound = mpmath.sqrt(hr * hr + hi * hi)
    finally:
        iv.dps = old
    return float(bound) * (1 + 1e-12)


def _scale(poly: RatPoly, z: Any) -> float:
    az = abs(complex(z))
    return float(sum(abs(float(c)) * az ** i for i, c in enumerate(poly.coeffs))) or 1.0


@dataclass
class RootResult:
    z: Any  # mpmath.mpc
    residual: float
    error_radius: float
    certified: bool
    multiplicity: int = 1

    @property
    def value(self) -> complex:
        return complex(self.z)


def refine_factor(factor: RatPoly, multiplicity: int = 1, dps: Optional[int] = None,
                  max_iter: Optional[int] = None, cert_tol: Optional[float] = None) -> List[RootResult]:
    """
    Refine and certify the roots of one square-free exact factor.

    Non-convergence is reported per root (certified=False) rather than raised.
    """
    dps = dps or ROOT_PARAMS["dps"]
    cert_tol = cert_tol if cert_tol is not None else ROOT_PARAMS["cert_tol"]
    try:
        zs = aberth(factor.coeffs, dps=dps, max_iter=max_iter)
        converged = True
    except RootFindingError as e:
        logger.warning(f"{e}; flagging the roots of {factor} as uncertified")
        with mpmath.workdps(dps):
            zs = [mpmath.mpc(r) for r in aberth_fallback(factor, dps)]
        converged = False

    deriv = factor.derivative()
    n = factor.degree
    results = []
    with mpmath.workdps(dps):
        for z in zs:
            residual = interval_residual(factor, z, dps)
            dval = abs(mpmath.polyval([_mp(c) for c in reversed(deriv.coeffs)], z)) if n > 1 else abs(_mp(factor.coeffs[1]))
            radius = float(n * mpmath.mpf(residual) / dval) if dval else math.inf
            certified = converged and residual <= cert_tol * _scale(factor, z) and math.isfinite(radius)
            results.append(RootResult(z=z, residual=residual, error_radius=radius, certified=certified,
                                      multiplicity=multiplicity))
    return results


def aberth_fallback(factor: RatPoly, dps: int) -> List[Any]:
    """Best-effort roots from mpmath.polyroots, used only to report uncertified values."""
    try:
        return mpmath.polyroots([_mp(c) for c in reversed(factor.coeffs)], maxsteps=200, extraprec=4 * dps,
                                error=False)
    except mpmath.libmp.NoConvergence:
        return [mpmath.mpc("nan")] * factor.degree


def find_roots(poly: RatPoly, dps: Optional[int] = None, max_iter: Optional[int] = None,
               cert_tol: Optional[float] = None) -> List[RootResult]:
    """
    All roots of an exact polynomial with multiplicities.

    Args:
        poly: Nonzero exact polynomial
        dps: Working decimal digits
        max_iter: Aberth sweep cap
        cert_tol: Relative residual accepted as certified

    Returns:
        list: RootResult per distinct root; multiplicities sum to deg(poly)
    """
    results = []
    for factor, mult in square_free_decomposition(poly):
        results.extend(refine_factor(factor, mult, dps=dps, max_iter=max_iter, cert_tol=cert_tol))
    return results
