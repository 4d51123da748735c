#!/usr/bin/env python
"""
Tests for the polynomial and family text grammar.

Run with:
    python -m unittest test.test_grammar
"""

import logging
import unittest
from fractions import Fraction

from dynmand.errors import FamilyParseError
from dynmand.grammar import parse_bivariate, parse_family, parse_lam_poly, parse_polynomial, tokenize
from dynmand.poly_core import LamPoly, RatPoly

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger("test_grammar")


class TestTokenizer(unittest.TestCase):
    def test_positions_and_lambda_synonym(self):
        tokens = tokenize("x^2 + λ")
        self.assertEqual([t.kind for t in tokens], ["var", "op", "num", "op", "var", "end"])
        self.assertEqual(tokens[4].text, "l")
        self.assertEqual(tokens[4].position, 6)

    def test_bad_character(self):
        with self.assertRaises(FamilyParseError) as ctx:
            tokenize("x^2 + y")
        self.assertEqual(ctx.exception.position, 6)


class TestPolynomials(unittest.TestCase):
    def test_bivariate_terms(self):
        terms = parse_bivariate("x^3 + (2*l^2+1) + l*x")
        self.assertEqual(terms, {(3, 0): 1, (0, 2): 2, (0, 0): 1, (1, 1): 1})

    def test_implicit_multiplication_and_division(self):
        self.assertEqual(parse_lam_poly("3/2 l^2 - 2l"), LamPoly([0, -2, Fraction(3, 2)]))
        self.assertEqual(parse_polynomial("2x^2 + 4x + 1"), RatPoly([1, 4, 2]))
        self.assertEqual(parse_polynomial("(x+1)^2/4"), RatPoly([Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)]))

    def test_decimal_coefficients_are_exact(self):
        self.assertEqual(parse_lam_poly("0.25*l"), LamPoly([0, Fraction(1, 4)]))

    def test_cancellation(self):
        self.assertTrue(parse_lam_poly("l - l").is_zero())

    def test_wrong_variable(self):
        with self.assertRaises(FamilyParseError):
            parse_lam_poly("x + l")
        with self.assertRaises(FamilyParseError):
            parse_polynomial("x^2 + l")

    def test_division_by_polynomial_rejected(self):
        with self.assertRaises(FamilyParseError) as ctx:
            parse_polynomial("1/x")
        self.assertEqual(ctx.exception.position, 2)

    def test_bad_exponents(self):
        for text in ("x^-1", "x^1.5", "x^l"):
            with self.assertRaises(FamilyParseError, msg=text):
                parse_polynomial(text.replace("l", "x"))

    def test_huge_exponent_rejected(self):
        with self.assertRaises(FamilyParseError) as ctx:
            parse_lam_poly("l^1000000000")
        self.assertEqual(ctx.exception.position, 2)
        self.assertIn("degree cap", str(ctx.exception))
        with self.assertRaises(FamilyParseError):
            parse_polynomial("(x + 1)^2000000")

    def test_powers_expand(self):
        self.assertEqual(parse_lam_poly("(1+l)^3"), LamPoly([1, 3, 3, 1]))
        self.assertEqual(parse_lam_poly("(2l)^5"), LamPoly([0, 0, 0, 0, 0, 32]))
        self.assertEqual(parse_polynomial("(x/2)^0"), RatPoly([1]))

    def test_unbalanced_parenthesis(self):
        with self.assertRaises(FamilyParseError) as ctx:
            parse_polynomial("(x + 1")
        self.assertEqual(ctx.exception.position, 6)
        self.assertIn("^", str(ctx.exception))

    def test_empty_input(self):
        with self.assertRaises(FamilyParseError):
            parse_polynomial("   ")


class TestFamilies(unittest.TestCase):
    def test_classical_family(self):
        family = parse_family("x^2+l")
        self.assertEqual(family.d, 2)
        self.assertEqual(family.c, (LamPoly([0, 1]),))
        self.assertEqual(family.m_r, 1)

    def test_cubic_family(self):
        family = parse_family("x^3 + l^2 x + 1 - l")
        self.assertEqual(family.d, 3)
        self.assertEqual(family.c[0], LamPoly([1, -1]))
        self.assertEqual(family.c[1], LamPoly([0, 0, 1]))
        self.assertEqual(family.m_r, 2)

    def test_constant_family(self):
        family = parse_family("x^2 - 1")
        self.assertTrue(family.is_constant_family)

    def test_rejects_non_normal_input(self):
        for text in ("2x^2 + l", "x^2 + x + l", "l*x^2 + 1", "x + l", "l"):
            with self.assertRaises(FamilyParseError, msg=text):
                parse_family(text)


if __name__ == "__main__":
    unittest.main()
