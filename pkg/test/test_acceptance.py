#!/usr/bin/env python
"""
End-to-end acceptance scenarios. Slower than the unit suites.

Run with:
    python -m unittest test.test_acceptance
"""

import logging
import math
import random
import unittest
from fractions import Fraction

from dynmand.bottcher import bottcher_product, green_fiber
from dynmand.export import dumps, grid_payload
from dynmand.grammar import parse_family, parse_lam_poly
from dynmand.mandelbrot import capacity_estimate, outer_radius, param_green, render_grid
from dynmand.poly_core import LamPoly, check_degree_law, decompose_family
from dynmand.preperiodic import (
    adelic_height,
    boundary_clustering,
    equidist_potential,
    prep_roots,
    shared_prep_experiment,
)

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger("test_acceptance")

CLASSICAL_WINDOW = (-2.5, 1.0, -1.5, 1.5)


def classical():
    return parse_family("x^2+l"), parse_lam_poly("l")


class TestDegreeLaw(unittest.TestCase):
    def test_random_families(self):
        rng = random.Random(1)

        def rand_coeff():
            return Fraction(rng.randint(-9, 9), rng.randint(1, 9))

        for _ in range(100):
            d = rng.choice([2, 3])
            c = [LamPoly([rand_coeff() for _ in range(rng.randint(1, 3))]) for _ in range(d - 1)]
            family = decompose_family(c, d)
            m = max(family.m_r, 1)
            lead = Fraction(rng.choice([1, -1]) * rng.randint(1, 9), rng.randint(1, 9))
            marked = LamPoly([rand_coeff() for _ in range(m)] + [lead])
            for n in range(4):
                report = check_degree_law(family, marked, n)
                self.assertTrue(report.passed, report.to_dict())
                self.assertEqual(report.actual_lead, lead ** (d ** n))


class TestCapacity(unittest.TestCase):
    def test_three_marked_points(self):
        family = parse_family("x^2+l")
        for text, gamma in (("l", 1.0), ("3l^2", 3 ** -0.5), ("l/2", 2.0)):
            c = parse_lam_poly(text)
            self.assertLess(outer_radius(family, c), 1e3, text)
            fit = capacity_estimate(family, c, [1e3, 1e4, 1e5], samples_per_circle=64)
            self.assertAlmostEqual(fit.closed_form_gamma, gamma)
            self.assertLessEqual(abs(fit.gamma_est - gamma), 1e-3, text)


def orbit_escape_rate(lam, z, cutoff=1e30, steps=200):
    """log|z_n| / 2^n for z -> z^2 + lam, computed by plain iteration."""
    for n in range(steps):
        if abs(z) > cutoff:
            return math.log(abs(z)) / 2 ** n
        z = z * z + lam
    return 0.0


class TestHeightGreenIdentity(unittest.TestCase):
    def test_random_parameters(self):
        family = parse_family("x^2+l")
        rng = random.Random(2)
        tol = 1e-8
        for text in ("3l^2", "l^3+1"):
            c = parse_lam_poly(text)
            m = c.degree
            self.assertGreaterEqual(m, 2)
            for _ in range(50):
                lam = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
                g = param_green(family, c, lam, tol=tol)
                self.assertFalse(g.inconclusive, (text, lam))
                rate = orbit_escape_rate(lam, complex(c.evaluate(lam)))
                self.assertLessEqual(abs(m * g.value - rate), m * g.error_bound + 1e-10, (text, lam))


class TestAdelicCrosscheck(unittest.TestCase):
    def test_random_rationals(self):
        family, c = classical()
        rng = random.Random(3)
        for _ in range(50):
            lam = Fraction(rng.randint(-12, 12), rng.randint(1, 6))
            report = adelic_height(family, c, lam, tol=1e-8)
            self.assertTrue(report.exact_finite, lam)
            self.assertLessEqual(abs(report.total - report.crosscheck),
                                 1e-8 + report.arch_contrib.error_bound + report.crosscheck_error, lam)

    def test_integer_parameter(self):
        family, c = classical()
        report = adelic_height(family, c, 2)
        self.assertEqual(report.finite_contribs, [])
        self.assertAlmostEqual(report.total, 0.90957, places=4)


class TestPreperiodicHeightZero(unittest.TestCase):
    def test_level_four(self):
        family, c = classical()
        result = prep_roots(family, c, 4, threads=2)
        self.assertFalse(result.uncertified)
        for (n, k), counts in result.counts.items():
            self.assertEqual(counts["with_multiplicity"], 2 ** n, (n, k))
        report = boundary_clustering(family, c, result.solutions, tol=1e-8)
        self.assertLessEqual(report.max_G, 1e-6)


class TestSharedPreperiodicDichotomy(unittest.TestCase):
    def test_identity_gives_identical_sets(self):
        # f_l(1) = f_l(-1) = 1 + l
        family = parse_family("x^2+l")
        a = parse_lam_poly("1+l")
        report = shared_prep_experiment(family, a, parse_lam_poly("l+1"), max_n=4, threads=2)
        self.assertEqual(report.verdict, "identity_true")
        self.assertEqual(report.sets_equal, {1: True, 2: True, 3: True, 4: True})
        self.assertTrue(report.consistent)

    def test_constants_one_and_two(self):
        family = parse_family("x^2+l")
        report = shared_prep_experiment(family, parse_lam_poly("1+l"), parse_lam_poly("4+l"), max_n=4,
                                        pairing_tol=1e-6, threads=2)
        self.assertEqual(report.verdict, "identity_false")
        self.assertEqual([len(report.intersection[n]) for n in range(1, 5)], [1, 1, 1, 1])
        self.assertTrue(report.stabilizes)
        self.assertTrue(report.consistent)


class TestEquidistribution(unittest.TestCase):
    def test_potential_at_three(self):
        family, c = classical()
        report = equidist_potential(family, c, 5, 3)
        errors = [report.errors[n] for n in (2, 3, 4, 5)]
        self.assertTrue(all(b < a for a, b in zip(errors, errors[1:])), errors)
        self.assertLessEqual(errors[-1], 0.05)
        self.assertTrue(report.passed)


class TestBottcherConsistency(unittest.TestCase):
    def test_random_fibers(self):
        rng = random.Random(4)
        for _ in range(20):
            d = rng.choice([2, 3])
            coeffs = [complex(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(d - 1)] + [0j, 1 + 0j]
            theta = rng.uniform(0, 2 * math.pi)
            z = 1e3 * complex(math.cos(theta), math.sin(theta))
            phi = bottcher_product(coeffs, z, tol=1e-12)
            g = green_fiber(coeffs, z, tol=1e-12)
            self.assertLessEqual(abs(math.log(abs(phi.value)) - g.value), 1e-9)
            far = bottcher_product(coeffs, 1e6 * z / abs(z))
            self.assertLess(abs(far.value / (1e6 * z / abs(z)) - 1), 1e-5)


class TestRenderDeterminism(unittest.TestCase):
    def test_worker_count_is_invisible(self):
        family, c = classical()
        one = render_grid(family, c, CLASSICAL_WINDOW, 200, 200, threads=1)
        eight = render_grid(family, c, CLASSICAL_WINDOW, 200, 200, threads=8)
        self.assertEqual(dumps(grid_payload(one)), dumps(grid_payload(eight)))


if __name__ == "__main__":
    unittest.main()
