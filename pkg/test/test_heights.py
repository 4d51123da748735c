#!/usr/bin/env python
"""
Tests for archimedean and non-archimedean local heights and global heights.

Run with:
    python -m unittest test.test_heights
"""

import logging
import math
import random
import unittest
from fractions import Fraction

from dynmand.grammar import parse_family
from dynmand.guard import ResourceGuard
from dynmand.heights import (
    CYCLE,
    ESCAPED,
    INCONCLUSIVE,
    TRAPPED,
    canonical_height,
    check_functional_equation,
    escape_threshold,
    global_height,
    local_height_arch,
    local_height_nonarch,
    local_heights_nonarch,
)
from dynmand.places import Place, abs_value, escape_exponent, escape_radius, valuation
from dynmand.poly_core import RatPoly

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger("test_heights")


class TestArchimedeanHeight(unittest.TestCase):
    def test_power_map_is_log_modulus(self):
        f = RatPoly([0, 0, 1])
        for z in (2, 3 + 4j, 1e3):
            g = local_height_arch(f, z, tol=1e-12)
            self.assertEqual(g.status, ESCAPED)
            self.assertAlmostEqual(g.value, math.log(abs(z)), places=12)

    def test_unit_disk_is_inside(self):
        g = local_height_arch(RatPoly([0, 0, 1]), 0.5)
        self.assertEqual(g.value, 0.0)
        self.assertIn(g.status, (CYCLE, TRAPPED))
        self.assertLessEqual(g.error_bound, 1e-8 * 1.0)

    def test_periodic_orbit(self):
        g = local_height_arch(RatPoly([-1, 0, 1]), 0)
        self.assertEqual(g.status, CYCLE)
        self.assertEqual(g.value, 0.0)
        self.assertFalse(g.escaped)

    def test_preperiodic_critical_point(self):
        # 0 -> -2 -> 2 -> 2 under x^2 - 2
        g = local_height_arch(RatPoly([-2, 0, 1]), 0)
        self.assertEqual(g.status, CYCLE)

    def test_large_point_asymptotics(self):
        f = [0.3 - 0.2j, 0j, 1 + 0j]
        g = local_height_arch(f, 1e6, tol=1e-12)
        self.assertLess(abs(g.value - math.log(1e6)), 1e-11)

    def test_error_bound_meets_tolerance(self):
        g = local_height_arch(RatPoly([2, 0, 1]), 2, tol=1e-10)
        self.assertEqual(g.status, ESCAPED)
        self.assertLessEqual(g.error_bound, 2e-10)

    def test_cap_gives_inconclusive(self):
        guard = ResourceGuard(iter_cap=3)
        g = local_height_arch(RatPoly([Fraction(1, 4), 0, 1]), 0, guard=guard)
        self.assertEqual(g.status, INCONCLUSIVE)
        self.assertTrue(g.inconclusive)
        self.assertGreater(g.error_bound, 0)

    def test_functional_equation(self):
        rng = random.Random(11)
        checked = 0
        for _ in range(200):
            d = rng.choice([2, 3])
            c0 = complex(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7))
            if d == 2:
                f = [c0, 0j, 1 + 0j]
            else:
                c1 = complex(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7))
                f = [c0, c1, 0j, 1 + 0j]
            theta = rng.uniform(0, 2 * math.pi)
            z = rng.uniform(2.5, 4) * complex(math.cos(theta), math.sin(theta))
            g = local_height_arch(f, z)
            if g.status != ESCAPED:
                continue
            report = check_functional_equation(f, z)
            self.assertTrue(report.passed, report.to_dict())
            checked += 1
        self.assertGreater(checked, 150)

    def test_non_monic(self):
        # 2x^2 is conjugate to x^2 by x -> 2x, so G(z) = log|2z|
        g = local_height_arch(RatPoly([0, 0, 2]), 5, tol=1e-12)
        self.assertAlmostEqual(g.value, math.log(10), places=11)

    def test_escape_threshold(self):
        self.assertEqual(escape_threshold(RatPoly([0, 0, 1])), 4.0)
        self.assertEqual(escape_threshold(RatPoly([-3, 0, 1])), 6.0)

    def test_rejects_low_degree(self):
        with self.assertRaises(ValueError):
            local_height_arch(RatPoly([1, 1]), 0)


class TestNonArchimedeanHeight(unittest.TestCase):
    def test_escape_closed_form(self):
        f = RatPoly([Fraction(1, 2), 0, 1])
        h = local_height_nonarch(f, Fraction(1, 2), 2)
        self.assertTrue(h.exact)
        self.assertEqual(h.coefficient, 1)
        self.assertAlmostEqual(h.value, math.log(2))
        self.assertEqual(h.certificate, "escape")

    def test_orbit_escapes_later(self):
        f = RatPoly([Fraction(1, 2), 0, 1])
        h = local_height_nonarch(f, 0, 2)
        self.assertTrue(h.exact)
        self.assertEqual(h.coefficient, Fraction(1, 2))
        self.assertEqual(h.iterations_used, 1)

    def test_good_reduction_is_zero(self):
        h = local_height_nonarch(RatPoly([-1, 0, 1]), 3, 3)
        self.assertTrue(h.exact)
        self.assertEqual(h.coefficient, 0)
        self.assertTrue(h.certificate.startswith("invariant disk"))

    def test_closed_form_beyond_escape_radius(self):
        rng = random.Random(3)
        for _ in range(50):
            p = rng.choice([2, 3, 5])
            coeffs = [Fraction(rng.randint(-20, 20), rng.randint(1, 20)) for _ in range(3)] + [Fraction(rng.randint(1, 9))]
            f = RatPoly(coeffs)
            d = f.degree
            rho = escape_exponent(f, p)
            vd = valuation(f.leading_coefficient, p)
            k = math.floor(rho) + 1 + rng.randint(0, 3)
            x = Fraction(rng.choice([1, -1]) * rng.randint(1, 5), p ** k)
            v = valuation(x, p)
            if v >= -rho:
                continue
            h = local_height_nonarch(f, x, p)
            self.assertTrue(h.exact)
            self.assertEqual(h.coefficient, -v - Fraction(vd, d - 1))

    def test_leading_term_dominates_beyond_escape_radius(self):
        rng = random.Random(13)
        checked = 0
        for _ in range(100):
            p = rng.choice([2, 3, 5, 7])
            d = rng.choice([2, 3])
            coeffs = [Fraction(rng.randint(-30, 30), rng.randint(1, 30)) for _ in range(d)]
            coeffs.append(Fraction(rng.choice([1, -1]) * rng.randint(1, 30), rng.randint(1, 30)))
            f = RatPoly(coeffs)
            place = Place.prime(p)
            k = math.floor(escape_exponent(f, p)) + 1 + rng.randint(0, 2)
            x = Fraction(rng.choice([1, -1]) * rng.randint(1, 6)) / Fraction(p) ** k
            if float(abs_value(place, x)) <= escape_radius(f, place):
                continue
            lhs = abs_value(place, f.evaluate(x)).value
            rhs = abs_value(place, f.leading_coefficient).value * abs_value(place, x).value ** d
            self.assertEqual(lhs, rhs, (str(f), x, p))
            checked += 1
        self.assertGreater(checked, 50)

    def test_order_independence(self):
        rng = random.Random(5)
        batch = []
        for _ in range(200):
            f = RatPoly([Fraction(rng.randint(-9, 9), rng.choice([1, 2, 3, 4, 9])), 0, 1])
            x = Fraction(rng.randint(-9, 9), rng.choice([1, 2, 3]))
            batch.append((f, x, rng.choice([2, 3])))
        forward = local_heights_nonarch(batch)
        order = list(range(len(batch)))
        rng.shuffle(order)
        shuffled = local_heights_nonarch([batch[i] for i in order])
        for pos, i in enumerate(order):
            self.assertEqual(shuffled[pos].coefficient, forward[i].coefficient)
            self.assertEqual(shuffled[pos].exact, forward[i].exact)

    def test_functional_equation_is_exact(self):
        f = RatPoly([Fraction(1, 2), 0, 1])
        report = check_functional_equation(f, Fraction(1, 2), place=Place.prime(2))
        self.assertTrue(report.passed)


class TestGlobalHeight(unittest.TestCase):
    def test_preperiodic_point_has_height_zero(self):
        # 1 -> -1 -> -1 under x^2 - 2
        h = canonical_height(RatPoly([-2, 0, 1]), 1)
        self.assertEqual(h.value, 0.0)
        self.assertTrue(h.exact_finite)

    def test_finite_places_contribute(self):
        family = parse_family("x^2+l")
        h = global_height(family, Fraction(1, 2), Fraction(1, 2))
        self.assertIn(2, h.finite)
        self.assertEqual(h.finite[2].coefficient, 1)
        self.assertGreater(h.value, math.log(2))
        self.assertLessEqual(h.error_bound, 1e-7)

    def test_power_map_gives_weil_height(self):
        rng = random.Random(17)
        for _ in range(100):
            x = Fraction(rng.choice([1, -1]) * rng.randint(1, 1000), rng.randint(1, 1000))
            weil = math.log(max(abs(x.numerator), x.denominator))
            for d in (2, 3):
                f = RatPoly([0] * d + [1])
                h = canonical_height(f, x, tol=1e-12)
                self.assertFalse(h.inconclusive, (x, d))
                self.assertLessEqual(abs(h.value - weil), h.error_bound + 1e-9, (x, d))

    def test_requires_rational_input(self):
        with self.assertRaises(TypeError):
            global_height(parse_family("x^2+l"), 0.5, Fraction(1))


if __name__ == "__main__":
    unittest.main()
