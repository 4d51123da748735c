"""
Parameter-space objects for a family F and marked point c.

G_c(l) = h_{f_l}(c(l)) / deg(c) is the Green's function of the generalized
Mandelbrot set M_c = {l : c(l) has bounded orbit under f_l}.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from dynmand.bottcher import analyticity_threshold
from dynmand.config import NUMERIC_PARAMS, RENDER_PARAMS
from dynmand.errors import CertificationError, HypothesisError
from dynmand.guard import ResourceGuard
from dynmand.heights import CYCLE, ESCAPED, GreenValue, local_height_arch, local_height_nonarch
from dynmand.places import Place, good_places, valuation
from dynmand.poly_core import LamPoly, ParamFamily, degree_hypothesis, is_exact, iterate_param

logger = logging.getLogger(__name__)

INSIDE = "inside"
OUTSIDE = "outside"
INCONCLUSIVE_MEMBERSHIP = "inconclusive"

# Flag channel of rendered cells
FLAG_OUTSIDE = 0
FLAG_INSIDE = 1
FLAG_INCONCLUSIVE = 2


def _require_hypothesis(family: ParamFamily, c: LamPoly):
    ok, reason = degree_hypothesis(family, c)
    if not ok:
        raise HypothesisError(reason)


def param_green(family: ParamFamily, c: LamPoly, lam: Any, tol: Optional[float] = None,
                guard: Optional[ResourceGuard] = None) -> GreenValue:
    """
    G_c(lam) = h_{f_lam, inf}(c(lam)) / m.

    Raises:
        HypothesisError: If m < m_r, or m = 0 for a constant family
    """
    _require_hypothesis(family, c)
    m = c.degree
    f = family.specialize(lam)
    point = c.evaluate(lam)
    if is_exact(point):
        point = complex(float(point))
    # the height is m times G, so ask for m times the tolerance
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    return local_height_arch(f, point, tol=tol * m, guard=guard).scaled(1.0 / m)


@dataclass
class MembershipResult:
    kind: str
    green: Optional[GreenValue] = None
    certificate: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "green": None if self.green is None else self.green.to_dict(),
            "certificate": self.certificate,
        }


def outer_radius(family: ParamFamily, c: LamPoly, probe: Optional[Dict[str, Any]] = None,
                 tol: Optional[float] = None, guard: Optional[ResourceGuard] = None) -> float:
    """Probe-certified radius beyond which c(lam) lies in the Böttcher domain, hence lam is outside M_c."""
    return analyticity_threshold(family, c, probe=probe, tol=tol, guard=guard).C0_estimate


# (family, c, tol, iter_cap) -> outer radius, or None when the probe cannot certify one
_outer_cache: Dict[Tuple[str, str, float, int], Optional[float]] = {}


def cached_outer_radius(family: ParamFamily, c: LamPoly, tol: Optional[float] = None,
                        guard: Optional[ResourceGuard] = None) -> Optional[float]:
    """outer_radius with the default probe grid, computed once per (family, c)."""
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    key = (str(family), str(c), tol, guard.iter_cap if guard is not None else NUMERIC_PARAMS["iter_cap"])
    if key not in _outer_cache:
        try:
            _outer_cache[key] = outer_radius(family, c, tol=tol, guard=guard)
        except CertificationError as e:
            logger.warning(f"no outer bound for c={c}: {e}")
            _outer_cache[key] = None
    return _outer_cache[key]


def membership(family: ParamFamily, c: LamPoly, lam: Any, tol: Optional[float] = None,
               outer: Optional[float] = None, guard: Optional[ResourceGuard] = None) -> MembershipResult:
    """
    Classify lam as inside M_c, outside M_c, or inconclusive.

    Args:
        outer: Radius beyond which |lam| is Outside directly; the probe-certified
            outer radius of (family, c) when omitted
    """
    green = param_green(family, c, lam, tol=tol, guard=guard)
    if outer is None:
        outer = cached_outer_radius(family, c, tol=tol, guard=guard)
    if outer is not None and abs(complex(lam)) > outer:
        return MembershipResult(OUTSIDE, green, f"outer bound |lambda| > {outer:.6g}")
    if green.status == ESCAPED and green.value - green.error_bound > 0:
        return MembershipResult(OUTSIDE, green, "escape witnessed")
    if green.status == CYCLE:
        return MembershipResult(INSIDE, green, "orbit of c(lambda) cycles")
    return MembershipResult(INCONCLUSIVE_MEMBERSHIP, green, f"orbit {green.status}; G <= {green.error_bound:.3g}")


def membership_at_place(family: ParamFamily, c: LamPoly, lam: Any, place: Place) -> MembershipResult:
    """
    Membership of a rational lam in M_{c,p}.

    At a good prime M_{c,p} is the closed unit disk; elsewhere the exact local
    height of c(lam) decides.
    """
    _require_hypothesis(family, c)
    if place.is_archimedean:
        return membership(family, c, lam)
    lam = Fraction(lam)
    p = place.p
    if p not in good_places(family, c).bad_primes:
        inside = lam == 0 or valuation(lam, p) >= 0
        return MembershipResult(INSIDE if inside else OUTSIDE, None, f"good place {p}: unit disk test")
    h = local_height_nonarch(family.specialize(lam), c.evaluate(lam), p)
    if not h.exact:
        return MembershipResult(INCONCLUSIVE_MEMBERSHIP, None, f"p={p}: {h.certificate}")
    kind = INSIDE if h.coefficient == 0 else OUTSIDE
    green = GreenValue(h.value / c.degree, 0.0, h.iterations_used, kind == OUTSIDE, ESCAPED if kind == OUTSIDE else CYCLE)
    return MembershipResult(kind, green, f"p={p}: {h.certificate}")


def cell_flag(green: GreenValue) -> int:
    if green.status == ESCAPED and green.value > 0:
        return FLAG_OUTSIDE
    if green.status == CYCLE:
        return FLAG_INSIDE
    return FLAG_INCONCLUSIVE


@dataclass
class ParamGrid:
    """Row-major cells; row 0 is the top of the window (y_max)."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int
    cells: List[GreenValue] = field(default_factory=list)

    def center(self, i: int, j: int) -> complex:
        x = self.x_min + (i + 0.5) * (self.x_max - self.x_min) / self.nx
        y = self.y_max - (j + 0.5) * (self.y_max - self.y_min) / self.ny
        return complex(x, y)

    def values(self) -> np.ndarray:
        return np.array([g.value for g in self.cells], dtype=float).reshape(self.ny, self.nx)

    def errors(self) -> np.ndarray:
        return np.array([g.error_bound for g in self.cells], dtype=float).reshape(self.ny, self.nx)

    def flags(self) -> np.ndarray:
        return np.array([cell_flag(g) for g in self.cells], dtype=np.uint8).reshape(self.ny, self.nx)

    def window(self) -> Dict[str, float]:
        return {"x_min": self.x_min, "x_max": self.x_max, "y_min": self.y_min, "y_max": self.y_max}


def _render_row(args: Tuple[ParamFamily, LamPoly, List[complex], float, Optional[ResourceGuard]]) -> List[GreenValue]:
    family, c, points, tol, guard = args
    return [param_green(family, c, lam, tol=tol, guard=guard) for lam in points]


def render_grid(family: ParamFamily, c: LamPoly, window: Sequence[float], nx: int, ny: int,
                tol: Optional[float] = None, threads: Optional[int] = None,
                guard: Optional[ResourceGuard] = None) -> ParamGrid:
    """
    Evaluate G_c at every cell center of the window (x_min, x_max, y_min, y_max).

    Rows are distributed over worker processes and collected in order, so the
    grid is identical for any number of workers.
    """
    _require_hypothesis(family, c)
    x_min, x_max, y_min, y_max = (float(v) for v in window)
    if nx < 1 or ny < 1:
        raise ValueError(f"grid needs nx, ny >= 1 (got {nx}x{ny})")
    if not (x_max > x_min and y_max > y_min):
        raise ValueError(f"empty window {window}")
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    threads = threads or RENDER_PARAMS["threads"]

    grid = ParamGrid(x_min, x_max, y_min, y_max, nx, ny)
    rows = [(family, c, [grid.center(i, j) for i in range(nx)], tol, guard) for j in range(ny)]
    if threads == 1:
        results = [_render_row(r) for r in rows]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_render_row, rows, chunksize=1))
    grid.cells = [g for row in results for g in row]
    logger.info(f"rendered {nx}x{ny} grid with {threads} worker(s)")
    return grid


@dataclass
class CapacityFit:
    gamma_est: float
    V_est: float
    closed_form_gamma: float
    residual: float
    sample_radii: List[float]
    per_radius_V: List[float]
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma_est": self.gamma_est,
            "V_est": self.V_est,
            "closed_form_gamma": self.closed_form_gamma,
            "residual": self.residual,
            "sample_radii": self.sample_radii,
            "per_radius_V": self.per_radius_V,
            "pass": self.passed,
        }


def capacity_estimate(family: ParamFamily, c: LamPoly, radii: Sequence[float], samples_per_circle: int = 64,
                      tol: Optional[float] = None, threshold: Optional[float] = None,
                      guard: Optional[ResourceGuard] = None) -> CapacityFit:
    """
    Estimate the logarithmic capacity of M_c from circle means of G_c(l) - log|l|.

    The mean on each circle estimates V = log|q_m|/m; the means are extrapolated
    to infinite radius with a least-squares fit in 1/r and gamma_est = exp(-V_est).

    Args:
        radii: Circle radii, all beyond the analyticity threshold
        samples_per_circle: Points per circle
        threshold: Known outer threshold; computed with analyticity_threshold when omitted

    Raises:
        CertificationError: If a radius is not beyond the threshold
    """
    _require_hypothesis(family, c)
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    radii = sorted({float(r) for r in radii})
    if not radii:
        raise ValueError("capacity_estimate needs at least one radius")
    if threshold is None:
        threshold = outer_radius(family, c, tol=tol, guard=guard)
    if radii[0] <= threshold:
        raise CertificationError(f"radius {radii[0]} is not beyond the outer threshold {threshold:.6g}", radii[0])

    m = c.degree
    q = abs(float(c.leading_coefficient))
    closed = q ** (-1.0 / m)
    thetas = 2 * np.pi * (np.arange(samples_per_circle) + 0.5) / samples_per_circle
    means = []
    worst_error = 0.0
    for r in radii:
        offsets = []
        for theta in thetas:
            lam = complex(r * math.cos(theta), r * math.sin(theta))
            g = param_green(family, c, lam, tol=tol, guard=guard)
            worst_error = max(worst_error, g.error_bound)
            offsets.append(g.value - math.log(r))
        means.append(float(np.mean(offsets)))

    if len(radii) >= 2:
        slope, V_est = np.polyfit(1.0 / np.array(radii), np.array(means), 1)
        V_est = float(V_est)
    else:
        V_est = means[0]
    residual = max(abs(v - V_est) for v in means) + worst_error
    gamma_est = math.exp(-V_est)
    passed = abs(gamma_est - closed) <= max(10 * tol, residual)
    logger.info(f"capacity fit: gamma_est={gamma_est:.10g}, closed form {closed:.10g}, residual {residual:.3g}")
    return CapacityFit(gamma_est, V_est, closed, residual, radii, means, passed)


@dataclass
class GreenComparison:
    max_difference: float
    bound: float
    points: int
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"max_difference": self.max_difference, "bound": self.bound, "points": self.points, "pass": self.passed}


def compare_green(family: ParamFamily, a: LamPoly, b: LamPoly, k: int, l: int, points: Sequence[complex],
                  tol: Optional[float] = None, guard: Optional[ResourceGuard] = None) -> GreenComparison:
    """
    max |G_{g_{a,k}} - G_{g_{b,l}}| over sample parameters.

    Equal Green's functions mean equal generalized Mandelbrot sets.
    """
    ga = iterate_param(family, a, k, guard=guard)
    gb = iterate_param(family, b, l, guard=guard)
    worst, bound = 0.0, 0.0
    for lam in points:
        va = param_green(family, ga, lam, tol=tol, guard=guard)
        vb = param_green(family, gb, lam, tol=tol, guard=guard)
        worst = max(worst, abs(va.value - vb.value))
        bound = max(bound, va.error_bound + vb.error_bound)
    return GreenComparison(worst, bound, len(points), worst <= bound)
