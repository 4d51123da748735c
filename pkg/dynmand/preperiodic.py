"""
Preperiodic parameters of a marked point.

A parameter l is preperiodic for c when f_l^n(c(l)) = f_l^k(c(l)) for some
n > k >= 0, i.e. l is a root of the exact relation polynomial g_{c,n} - g_{c,k}.
The relation polynomials are solved numerically with certified residuals and
the roots feed the clustering, equidistribution, adelic height and shared
preperiodicity experiments.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from dynmand.config import EXPERIMENT_PARAMS, NUMERIC_PARAMS, RENDER_PARAMS, ROOT_PARAMS
from dynmand.errors import HypothesisError
from dynmand.guard import ResourceGuard, resource_guard
from dynmand.heights import GreenValue, canonical_height, global_height, local_height_nonarch
from dynmand.mandelbrot import compare_green, param_green
from dynmand.places import good_places, relevant_primes
from dynmand.poly_core import (
    LamPoly,
    ParamFamily,
    degree_hypothesis,
    format_fraction,
    iterate_param,
    predicted_degree,
    to_fraction,
)
from dynmand.roots import RootResult, find_roots, square_free_decomposition

logger = logging.getLogger(__name__)

Relation = Tuple[int, int]


def _require_hypothesis(family: ParamFamily, c: LamPoly):
    ok, reason = degree_hypothesis(family, c)
    if not ok:
        raise HypothesisError(reason)


def orbit_polynomials(family: ParamFamily, c: LamPoly, max_n: int, guard: Optional[ResourceGuard] = None) -> List[LamPoly]:
    """[g_{c,0}, ..., g_{c,max_n}], checked against the degree cap up front."""
    guard = guard or resource_guard
    guard.check_expand(predicted_degree(family, c, max_n))
    out = [c]
    for _ in range(max_n):
        out.append(family.apply_to(out[-1]))
    return out


def prep_equation(family: ParamFamily, c: LamPoly, n: int, k: int, guard: Optional[ResourceGuard] = None) -> LamPoly:
    """
    g_{c,n} - g_{c,k}, whose roots are the parameters with f^n(c) = f^k(c).

    Raises:
        ValueError: Unless 0 <= k < n
        DegreeCapExceeded: If g_{c,n} would exceed the degree cap
    """
    if not 0 <= k < n:
        raise ValueError(f"relation needs 0 <= k < n (got n={n}, k={k})")
    orbit = orbit_polynomials(family, c, n, guard=guard)
    return orbit[n] - orbit[k]


@dataclass
class PrepSolution:
    n: int
    k: int
    lam: complex
    residual: float
    multiplicity_hint: int
    error_radius: float
    certified: bool

    @property
    def relation(self) -> Relation:
        return (self.n, self.k)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "re": self.lam.real,
            "im": self.lam.imag,
            "residual": self.residual,
            "multiplicity_hint": self.multiplicity_hint,
            "error_radius": self.error_radius,
            "certified": self.certified,
        }


@dataclass
class PrepRootsResult:
    solutions: List[PrepSolution]
    counts: Dict[Relation, Dict[str, int]] = field(default_factory=dict)

    @property
    def uncertified(self) -> List[PrepSolution]:
        return [s for s in self.solutions if not s.certified]

    def up_to(self, n: int) -> List[PrepSolution]:
        """Solutions whose minimal recorded relation has n' <= n."""
        return [s for s in self.solutions if s.n <= n]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "solutions": [s.to_dict() for s in self.solutions],
            "counts": {f"{n},{k}": v for (n, k), v in sorted(self.counts.items())},
            "uncertified": len(self.uncertified),
        }


def _solve_relation(args: Tuple[Relation, LamPoly, int, int, float]) -> Tuple[Relation, List[RootResult]]:
    relation, poly, dps, max_iter, cert_tol = args
    return relation, find_roots(poly, dps=dps, max_iter=max_iter, cert_tol=cert_tol)


def relations_up_to(max_n: int) -> List[Relation]:
    return [(n, k) for n in range(1, max_n + 1) for k in range(n)]


def prep_roots(family: ParamFamily, c: LamPoly, max_n: int, tol: Optional[float] = None,
               threads: Optional[int] = None, guard: Optional[ResourceGuard] = None) -> PrepRootsResult:
    """
    All roots of g_{c,n} - g_{c,k} for 0 <= k < n <= max_n, deduplicated.

    Relations are processed in lexicographic order of (n, k); a root is kept with
    the first relation it satisfies and merged with later copies that lie within
    dedup_factor times the sum of their error radii. Roots whose refinement or
    certification fails stay in the list with certified=False.

    Args:
        tol: Largest error radius accepted as certified
        threads: Worker processes solving relations concurrently

    Raises:
        HypothesisError: If m < m_r (or m = 0 for a constant family)
    """
    _require_hypothesis(family, c)
    if max_n < 1:
        raise ValueError(f"max_n must be at least 1 (got {max_n})")
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    threads = threads or RENDER_PARAMS["threads"]
    dps = ROOT_PARAMS["dps"]
    orbit = orbit_polynomials(family, c, max_n, guard=guard)

    jobs = [((n, k), orbit[n] - orbit[k], dps, ROOT_PARAMS["max_iter"], ROOT_PARAMS["cert_tol"])
            for n, k in relations_up_to(max_n)]
    if threads == 1:
        solved = [_solve_relation(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            solved = list(pool.map(_solve_relation, jobs, chunksize=1))

    floor = 10.0 ** (-(dps - 10))
    factor = ROOT_PARAMS["dedup_factor"]
    solutions: List[PrepSolution] = []
    counts: Dict[Relation, Dict[str, int]] = {}
    for (relation, roots), job in zip(solved, jobs):
        poly = job[1]
        counts[relation] = {
            "degree": poly.degree,
            "with_multiplicity": sum(r.multiplicity for r in roots),
            "distinct": len(roots),
        }
        for root in roots:
            z = root.value
            duplicate = False
            for s in solutions:
                if abs(z - s.lam) <= max(factor * (root.error_radius + s.error_radius), floor):
                    duplicate = True
                    break
            if duplicate:
                continue
            certified = root.certified and root.error_radius <= tol
            if not certified:
                logger.warning(f"root {z} of relation {relation} is not certified (radius {root.error_radius:.3g})")
            solutions.append(PrepSolution(relation[0], relation[1], z, root.residual, root.multiplicity,
                                          root.error_radius, certified))
    logger.info(f"prep_roots up to n={max_n}: {len(solutions)} distinct parameters")
    return PrepRootsResult(solutions=solutions, counts=counts)


@dataclass
class ClusteringReport:
    max_G: float
    max_error: float
    values: List[float]
    contaminated: List[int]
    histogram: Dict[str, List[float]]
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "max_G": self.max_G,
            "max_error": self.max_error,
            "values": self.values,
            "contaminated": self.contaminated,
            "histogram": self.histogram,
            "pass": self.passed,
        }


def boundary_clustering(family: ParamFamily, c: LamPoly, solutions: Sequence[PrepSolution],
                        tol: Optional[float] = None, slack: float = 100.0) -> ClusteringReport:
    """
    Evaluate G_c at every solution and measure how new roots approach older ones.

    Every preperiodic parameter lies in M_c, so any positive G value only
    measures numerical error; values above tol*slack are reported as contaminated.
    The histogram counts log10 distances from each root first seen at level n to
    the nearest root of a lower level.
    """
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    values, errors = [], []
    for s in solutions:
        g = param_green(family, c, s.lam, tol=tol)
        values.append(g.value)
        errors.append(g.error_bound)
    limit = tol * slack
    contaminated = [i for i, v in enumerate(values) if v > limit]

    distances = []
    for s in solutions:
        older = [t.lam for t in solutions if t.n < s.n]
        if older:
            distances.append(min(abs(s.lam - z) for z in older))
    logs = np.log10(np.maximum(np.array(distances, dtype=float), 1e-300)) if distances else np.array([])
    counts, edges = np.histogram(logs, bins=np.linspace(-8.0, 2.0, 11))
    histogram = {"log10_distance_edges": [float(e) for e in edges], "counts": [int(n) for n in counts]}

    max_G = max(values, default=0.0)
    return ClusteringReport(
        max_G=max_G,
        max_error=max(errors, default=0.0),
        values=values,
        contaminated=contaminated,
        histogram=histogram,
        passed=not contaminated,
    )


@dataclass
class EquidistReport:
    w: complex
    green_w: float
    V: float
    prediction: float
    potential_per_n: Dict[int, float]
    exact_potential_per_n: Dict[int, float]
    errors: Dict[int, float]
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "w": [self.w.real, self.w.imag],
            "green_w": self.green_w,
            "V": self.V,
            "limit_prediction": self.prediction,
            "potential_per_n": {str(n): v for n, v in sorted(self.potential_per_n.items())},
            "exact_potential_per_n": {str(n): v for n, v in sorted(self.exact_potential_per_n.items())},
            "errors": {str(n): v for n, v in sorted(self.errors.items())},
            "pass": self.passed,
        }


def _exact_log_potential(poly: LamPoly, w: complex) -> float:
    """(log|P(w)| - log|lead P|)/deg P, evaluated at high precision."""
    with mpmath.workdps(ROOT_PARAMS["dps"]):
        z = mpmath.mpc(w)
        acc = mpmath.mpc(0)
        for c in reversed(poly.coeffs):
            acc = acc * z + mpmath.mpf(c.numerator) / c.denominator
        lead = poly.leading_coefficient
        value = (mpmath.log(abs(acc)) - mpmath.log(abs(mpmath.mpf(lead.numerator) / lead.denominator))) / poly.degree
    return float(value)


def equidist_potential(family: ParamFamily, c: LamPoly, max_n: int, w: complex, tol: Optional[float] = None,
                       min_n: int = 2, threshold: Optional[float] = None,
                       guard: Optional[ResourceGuard] = None) -> EquidistReport:
    """
    Logarithmic potential of the roots of g_{c,n} - g_{c,n-1} at an exterior point w.

    The limit is the equilibrium potential G_c(w) - V with V = log|q_m|/m. The
    report passes when the errors decrease strictly in n and the last one is at
    most the threshold.

    Raises:
        ValueError: If w is not certified outside M_c
    """
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    threshold = threshold if threshold is not None else EXPERIMENT_PARAMS["equidist_threshold"]
    w = complex(w)
    green = param_green(family, c, w, tol=tol)
    if not (green.escaped and green.value > green.error_bound):
        raise ValueError(f"w={w} is not certified outside M_c (status {green.status})")
    V = math.log(abs(float(c.leading_coefficient))) / c.degree
    prediction = green.value - V

    orbit = orbit_polynomials(family, c, max_n, guard=guard)
    potentials, exact, errors = {}, {}, {}
    for n in range(max(1, min_n), max_n + 1):
        poly = orbit[n] - orbit[n - 1]
        roots = find_roots(poly)
        total = sum(r.multiplicity for r in roots)
        potentials[n] = sum(r.multiplicity * math.log(abs(w - r.value)) for r in roots) / total
        exact[n] = _exact_log_potential(poly, w)
        errors[n] = abs(potentials[n] - prediction)
        logger.debug(f"equidistribution n={n}: potential {potentials[n]:.10f}, error {errors[n]:.3g}")

    seq = [errors[n] for n in sorted(errors)]
    decreasing = all(b < a for a, b in zip(seq, seq[1:]))
    passed = decreasing and bool(seq) and seq[-1] <= threshold
    return EquidistReport(w, green.value, V, prediction, potentials, exact, errors, passed)


@dataclass
class AdelicHeightReport:
    lam: Fraction
    finite_contribs: List[Tuple[int, Fraction, float]]
    arch_contrib: GreenValue
    total: float
    crosscheck: float
    crosscheck_error: float
    exact_finite: bool

    @property
    def consistent(self) -> bool:
        return abs(self.total - self.crosscheck) <= 1e-8 + self.arch_contrib.error_bound + self.crosscheck_error

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": format_fraction(self.lam),
            "finite_contribs": [
                {"p": p, "coefficient_of_log_p": format_fraction(coef), "value": value}
                for p, coef, value in self.finite_contribs
            ],
            "arch_contrib": self.arch_contrib.to_dict(),
            "total": self.total,
            "crosscheck": self.crosscheck,
            "crosscheck_error": self.crosscheck_error,
            "exact_finite": self.exact_finite,
            "consistent": self.consistent,
        }


def adelic_height(family: ParamFamily, c: LamPoly, lam: Any, tol: Optional[float] = None,
                  guard: Optional[ResourceGuard] = None) -> AdelicHeightReport:
    """
    Sum over places of G_{c,v}(lam) for rational lam.

    Finite places are restricted to the bad primes of (F, c) and the primes where
    |lam|_p > 1; every other prime contributes 0. The crosscheck is the global
    canonical height of c(lam) divided by m, computed independently.
    """
    _require_hypothesis(family, c)
    lam = to_fraction(lam)
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    m = c.degree
    f = family.specialize(lam)
    point = c.evaluate(lam)

    primes = set(good_places(family, c).bad_primes)
    primes.update(relevant_primes([lam.denominator]))
    contribs = []
    exact_finite = True
    for p in sorted(primes):
        h = local_height_nonarch(f, point, p, guard=guard)
        exact_finite = exact_finite and h.exact
        coef = h.coefficient / m
        contribs.append((p, coef, float(coef) * math.log(p)))

    arch = param_green(family, c, lam, tol=tol, guard=guard)
    total = arch.value + sum(v for _, _, v in contribs)
    check = canonical_height(f, point, tol=tol * m, guard=guard)
    report = AdelicHeightReport(
        lam=lam,
        finite_contribs=contribs,
        arch_contrib=arch,
        total=total,
        crosscheck=check.value / m,
        crosscheck_error=check.error_bound / m,
        exact_finite=exact_finite,
    )
    if not report.consistent:
        logger.warning(f"adelic height of {lam}: total {total} vs crosscheck {report.crosscheck}")
    return report


@dataclass
class ConjugateHeightReport:
    """Archimedean part of the height of a Galois orbit given by its minimal polynomial."""

    minimal_polynomial: LamPoly
    conjugates: List[complex]
    arch_values: List[GreenValue]
    arch_mean: float
    error_bound: float
    partial: bool = True
    note: str = "archimedean contributions only; finite places of irrational conjugates are not evaluated"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "minimal_polynomial": str(self.minimal_polynomial),
            "conjugates": [[z.real, z.imag] for z in self.conjugates],
            "arch_values": [g.to_dict() for g in self.arch_values],
            "arch_mean": self.arch_mean,
            "error_bound": self.error_bound,
            "partial": self.partial,
            "note": self.note,
        }


def adelic_height_conjugates(family: ParamFamily, c: LamPoly, minpoly: LamPoly, tol: Optional[float] = None,
                             guard: Optional[ResourceGuard] = None) -> ConjugateHeightReport:
    """
    Mean of G_c over the complex roots of an integer minimal polynomial.

    Raises:
        ValueError: If minpoly is constant or has a repeated root
    """
    _require_hypothesis(family, c)
    if minpoly.is_zero() or minpoly.degree < 1:
        raise ValueError("a minimal polynomial needs degree >= 1")
    if any(mult > 1 for _, mult in square_free_decomposition(minpoly)):
        raise ValueError(f"{minpoly} has a repeated root")
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    roots = find_roots(minpoly)
    conjugates = [r.value for r in roots]
    values = [param_green(family, c, z, tol=tol, guard=guard) for z in conjugates]
    mean = sum(g.value for g in values) / len(values)
    error = max(g.error_bound for g in values) + max(r.error_radius for r in roots)
    logger.info(f"conjugate height over roots of {minpoly}: {mean:.10g} (archimedean only)")
    return ConjugateHeightReport(minpoly, conjugates, values, mean, error)


@dataclass
class SharedPrepReport:
    hypothesis_check: Dict[str, Any]
    identity: Optional[bool]
    intersection: Dict[int, List[List[float]]]
    counts_a: Dict[int, int]
    counts_b: Dict[int, int]
    sets_equal: Dict[int, bool]
    growth: Optional[bool]
    stabilizes: Optional[bool]
    verdict: str
    consistent: Optional[bool]
    green_difference: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hypothesis_check": self.hypothesis_check,
            "identity": self.identity,
            "intersection": {str(n): pts for n, pts in sorted(self.intersection.items())},
            "intersection_counts": {str(n): len(pts) for n, pts in sorted(self.intersection.items())},
            "counts_a": {str(n): v for n, v in sorted(self.counts_a.items())},
            "counts_b": {str(n): v for n, v in sorted(self.counts_b.items())},
            "sets_equal": {str(n): v for n, v in sorted(self.sets_equal.items())},
            "growth": self.growth,
            "stabilizes": self.stabilizes,
            "verdict": self.verdict,
            "consistent": self.consistent,
            "green_difference": self.green_difference,
        }


def _pair(xs: Sequence[complex], ys: Sequence[complex], tol: float) -> List[complex]:
    """Greedy one-to-one pairing within tol; returns the paired points of xs."""
    used = [False] * len(ys)
    out = []
    for x in xs:
        best, best_j = None, None
        for j, y in enumerate(ys):
            if not used[j]:
                dist = abs(x - y)
                if dist <= tol and (best is None or dist < best):
                    best, best_j = dist, j
        if best_j is not None:
            used[best_j] = True
            out.append(x)
    return out


# Fixed exterior sample points for the Green's function comparison.
_GREEN_SAMPLES = (3 + 0j, 3j, -3 + 0j, -3j, 2 + 2j)


def shared_prep_experiment(family: ParamFamily, a: LamPoly, b: LamPoly, k: int = 0, l: int = 0,
                           max_n: int = 3, tol: Optional[float] = None, pairing_tol: Optional[float] = None,
                           threads: Optional[int] = None, guard: Optional[ResourceGuard] = None) -> SharedPrepReport:
    """
    Compare the preperiodic parameters of a and b against the identity g_{a,k} = g_{b,l}.

    Hypothesis (i) asks g_{a,k} and g_{b,l} to share degree and leading
    coefficient, hypothesis (ii) asks deg a, deg b >= m_r. A failing hypothesis is
    returned as the verdict "hypothesis_fails". Otherwise the verdict records the
    exact identity and `consistent` says whether the root sets behave as
    predicted: equal (or growing) intersections for an identity, a stabilizing
    intersection without one.
    """
    tol = tol if tol is not None else NUMERIC_PARAMS["tol"]
    pairing_tol = pairing_tol if pairing_tol is not None else EXPERIMENT_PARAMS["pairing_tol"]
    increments = EXPERIMENT_PARAMS["growth_increments"]

    ok_a, reason_a = degree_hypothesis(family, a)
    ok_b, reason_b = degree_hypothesis(family, b)
    ga = iterate_param(family, a, k, guard=guard)
    gb = iterate_param(family, b, l, guard=guard)
    same_shape = ga.degree == gb.degree and ga.leading_coefficient == gb.leading_coefficient
    hypothesis = {
        "i": same_shape,
        "ii": ok_a and ok_b,
        "deg_g_a": ga.degree if not ga.is_zero() else None,
        "deg_g_b": gb.degree if not gb.is_zero() else None,
        "lead_g_a": format_fraction(ga.leading_coefficient),
        "lead_g_b": format_fraction(gb.leading_coefficient),
        "reason_a": reason_a,
        "reason_b": reason_b,
    }
    if not (same_shape and ok_a and ok_b):
        logger.info(f"shared_prep_experiment: hypothesis fails ({hypothesis})")
        return SharedPrepReport(hypothesis, None, {}, {}, {}, {}, None, None, "hypothesis_fails", None)

    identity = ga == gb
    roots_a = prep_roots(family, a, max_n, tol=tol, threads=threads, guard=guard)
    roots_b = prep_roots(family, b, max_n, tol=tol, threads=threads, guard=guard)

    intersection, counts_a, counts_b, sets_equal = {}, {}, {}, {}
    for n in range(1, max_n + 1):
        xs = [s.lam for s in roots_a.up_to(n)]
        ys = [s.lam for s in roots_b.up_to(n)]
        paired = _pair(xs, ys, pairing_tol)
        intersection[n] = [[z.real, z.imag] for z in paired]
        counts_a[n], counts_b[n] = len(xs), len(ys)
        sets_equal[n] = len(paired) == len(xs) == len(ys)

    sizes = [len(intersection[n]) for n in range(1, max_n + 1)]
    window = sizes[-(min(increments, len(sizes) - 1) + 1):]
    growth = len(window) > 1 and all(y > x for x, y in zip(window, window[1:]))
    stabilizes = len(window) > 1 and all(y == x for x, y in zip(window, window[1:]))
    if identity:
        consistent = all(sets_equal.values()) or growth
    else:
        consistent = stabilizes
    comparison = compare_green(family, a, b, k, l, _GREEN_SAMPLES, tol=tol, guard=guard)
    verdict = "identity_true" if identity else "identity_false"
    logger.info(f"shared_prep_experiment: {verdict}, intersection sizes {sizes}, consistent={consistent}")
    return SharedPrepReport(hypothesis, identity, intersection, counts_a, counts_b, sets_equal, growth, stabilizes,
                            verdict, consistent, comparison.to_dict())


def small_height_sequence(family: ParamFamily, a: LamPoly, b: LamPoly, params: Sequence[Any],
                          tol: Optional[float] = None) -> List[Dict[str, Any]]:
    """h_{f_l}(a(l)) + h_{f_l}(b(l)) along rational parameters l."""
    rows = []
    for lam in params:
        lam = to_fraction(lam)
        ha = global_height(family, lam, a.evaluate(lam), tol=tol)
        hb = global_height(family, lam, b.evaluate(lam), tol=tol)
        rows.append({
            "lambda": format_fraction(lam),
            "h_a": ha.value,
            "h_b": hb.value,
            "sum": ha.value + hb.value,
            "error_bound": ha.error_bound + hb.error_bound,
        })
    return rows
