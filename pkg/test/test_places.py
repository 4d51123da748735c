#!/usr/bin/env python
"""
Tests for places, absolute values, escape radii and good-place classification.

Run with:
    python -m unittest test.test_places
"""

import logging
import math
import random
import unittest
from fractions import Fraction

from dynmand.grammar import parse_family, parse_lam_poly
from dynmand.places import (
    ARCH,
    INFINITE_VALUATION,
    Place,
    abs_value,
    escape_exponent,
    escape_radius,
    good_places,
    log_abs,
    product_formula_check,
    relevant_primes,
    valuation,
)
from dynmand.poly_core import RatPoly

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger("test_places")


class TestPlaces(unittest.TestCase):
    def test_prime_validation(self):
        self.assertEqual(Place.prime(7).p, 7)
        with self.assertRaises(ValueError):
            Place.prime(9)
        with self.assertRaises(ValueError):
            Place("arch", 2)

    def test_json_round_trip(self):
        for place in (ARCH, Place.prime(5)):
            self.assertEqual(Place.from_json(place.to_json()), place)


class TestAbsoluteValues(unittest.TestCase):
    def test_valuations(self):
        self.assertEqual(valuation(Fraction(12, 5), 2), 2)
        self.assertEqual(valuation(Fraction(12, 5), 5), -1)
        self.assertEqual(valuation(Fraction(12, 5), 7), 0)
        self.assertIs(valuation(0, 3), INFINITE_VALUATION)
        self.assertGreater(INFINITE_VALUATION, 10 ** 9)

    def test_padic_abs_is_exact(self):
        a = abs_value(Place.prime(2), Fraction(3, 8))
        self.assertEqual(a.value, 8)
        self.assertAlmostEqual(a.log, 3 * math.log(2))
        self.assertEqual(abs_value(Place.prime(3), 0).value, 0)
        self.assertEqual(log_abs(Place.prime(3), 0), -math.inf)

    def test_archimedean_abs(self):
        self.assertEqual(abs_value(ARCH, Fraction(-3, 2)), 1.5)
        self.assertAlmostEqual(abs_value(ARCH, 3 + 4j), 5.0)
        self.assertAlmostEqual(log_abs(ARCH, Fraction(1, 2)), -math.log(2))

    def test_relevant_primes(self):
        self.assertEqual(relevant_primes([Fraction(12, 35), 0, 1, Fraction(-1, 2)]), [2, 3, 5, 7])

    def test_product_formula(self):
        rng = random.Random(7)
        for _ in range(1000):
            alpha = Fraction(rng.randint(1, 10 ** 6) * rng.choice([1, -1]), rng.randint(1, 10 ** 6))
            report = product_formula_check(alpha)
            self.assertTrue(report.exact_ok, alpha)
            self.assertLess(abs(report.log_sum), 1e-9)
        with self.assertRaises(ValueError):
            product_formula_check(0)


class TestEscapeRadius(unittest.TestCase):
    def test_archimedean(self):
        self.assertAlmostEqual(escape_radius(RatPoly([-2, 0, 1]), ARCH), math.sqrt(2))
        self.assertAlmostEqual(escape_radius([4j, 0, 1], ARCH), 2.0)
        self.assertAlmostEqual(escape_radius(RatPoly([0, 0, 4]), ARCH), 0.25)

    def test_nonarchimedean(self):
        f = RatPoly([Fraction(1, 2), 0, 1])
        self.assertEqual(escape_exponent(f, 2), Fraction(1, 2))
        self.assertAlmostEqual(escape_radius(f, Place.prime(2)), math.sqrt(2))
        # good reduction: r_p = 1
        self.assertEqual(escape_exponent(RatPoly([3, 5, 1]), 2), 0)
        # leading coefficient p: |a_d|^{-1/(d-1)} = p
        self.assertEqual(escape_exponent(RatPoly([1, 0, 3]), 3), 1)

    def test_degree_check(self):
        with self.assertRaises(ValueError):
            escape_radius(RatPoly([1, 1]), ARCH)


class TestGoodPlaces(unittest.TestCase):
    def test_classical_family_everything_good(self):
        result = good_places(parse_family("x^2+l"), parse_lam_poly("l"))
        self.assertEqual(result.bad_primes, [])
        self.assertIn("every prime is good", result.certificate)

    def test_half_lambda(self):
        result = good_places(parse_family("x^2+l"), parse_lam_poly("l/2"))
        self.assertEqual(result.bad_primes, [2])
        self.assertEqual(result.reports[0].reasons, [
            "non-integral coefficient in marked point c",
            "leading coefficient q_m is not a unit",
        ])

    def test_non_unit_leading_coefficient(self):
        result = good_places(parse_family("x^2+l"), parse_lam_poly("3l^2"))
        self.assertEqual(result.bad_primes, [3])
        self.assertEqual(result.reports[0].reasons, ["leading coefficient q_m is not a unit"])

    def test_non_integral_family(self):
        result = good_places(parse_family("x^2 + l/3 + 5"), parse_lam_poly("l"))
        self.assertEqual(result.bad_primes, [3])
        self.assertEqual(result.reports[0].reasons, ["non-integral coefficient in c_0"])
        good = {r.place.p: r.is_good for r in result.reports}
        self.assertTrue(good[5])


if __name__ == "__main__":
    unittest.main()
