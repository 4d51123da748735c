"""
Text grammar for polynomials and families.

Accepted input is a sum of terms in the variables ``x`` and ``l`` (``λ`` is
accepted as a synonym of ``l``) with exact rational coefficients, e.g.
``x^3 + (2*l^2+1) + l*x`` or ``3/2*l^2``. Supported operators are ``+ - * / ^``
and parentheses; ``/`` only divides by a nonzero constant and ``^`` only takes a
nonnegative integer exponent. Juxtaposition (``2l``, ``3x^2``) multiplies.
Whitespace is ignored. Coefficients are parsed exactly.
"""

import logging
import re
from fractions import Fraction
from typing import Dict, List, NamedTuple, Tuple

from dynmand.config import ALGEBRA_PARAMS
from dynmand.errors import FamilyParseError
from dynmand.poly_core import LamPoly, ParamFamily, RatPoly, decompose_family

logger = logging.getLogger(__name__)

# (power of x, power of l) -> coefficient
Bivariate = Dict[Tuple[int, int], Fraction]

_TOKEN_RE = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<var>[xlλ])|(?P<op>[-+*/^()]))")


class Token(NamedTuple):
    kind: str  # "num", "var", "op", "end"
    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise FamilyParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = match.lastgroup
        value = match.group(kind)
        start = match.start(kind)
        if kind == "var" and value == "λ":
            value = "l"
        tokens.append(Token(kind, value, start))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


def _add(p: Bivariate, q: Bivariate) -> Bivariate:
    out = dict(p)
    for key, value in q.items():
        out[key] = out.get(key, Fraction(0)) + value
        if out[key] == 0:
            del out[key]
    return out


def _scale(p: Bivariate, k: Fraction) -> Bivariate:
    if k == 0:
        return {}
    return {key: value * k for key, value in p.items()}


def _mul(p: Bivariate, q: Bivariate) -> Bivariate:
    out: Bivariate = {}
    for (i1, j1), a in p.items():
        for (i2, j2), b in q.items():
            key = (i1 + i2, j1 + j2)
            out[key] = out.get(key, Fraction(0)) + a * b
    return {key: value for key, value in out.items() if value != 0}


def _degree(p: Bivariate) -> int:
    return max((i + j for i, j in p), default=0)


def _pow(p: Bivariate, n: int) -> Bivariate:
    result: Bivariate = {(0, 0): Fraction(1)}
    while n:
        if n & 1:
            result = _mul(result, p)
        n >>= 1
        if n:
            p = _mul(p, p)
    return result


def _constant_value(p: Bivariate):
    if not p:
        return Fraction(0)
    if set(p) == {(0, 0)}:
        return p[(0, 0)]
    return None


class _Parser:
    """Recursive-descent parser over the token list."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def error(self, message: str, token: Token = None):
        token = token or self.current
        return FamilyParseError(message, token.position, self.text)

    def parse(self) -> Bivariate:
        if self.current.kind == "end":
            raise self.error("empty expression")
        result = self.expression()
        if self.current.kind != "end":
            raise self.error(f"unexpected {self.current.text!r}")
        return result

    def expression(self) -> Bivariate:
        sign = Fraction(1)
        if self.current.kind == "op" and self.current.text in "+-":
            sign = Fraction(-1 if self.advance().text == "-" else 1)
        result = _scale(self.term(), sign)
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.advance().text
            rhs = self.term()
            result = _add(result, rhs if op == "+" else _scale(rhs, Fraction(-1)))
        return result

    def _starts_factor(self) -> bool:
        tok = self.current
        return tok.kind in ("num", "var") or (tok.kind == "op" and tok.text == "(")

    def term(self) -> Bivariate:
        result = self.factor()
        while True:
            tok = self.current
            if tok.kind == "op" and tok.text == "*":
                self.advance()
                result = _mul(result, self.factor())
            elif tok.kind == "op" and tok.text == "/":
                self.advance()
                divisor_token = self.current
                divisor = _constant_value(self.factor())
                if divisor is None:
                    raise self.error("division by a non-constant", divisor_token)
                if divisor == 0:
                    raise self.error("division by zero", divisor_token)
                result = _scale(result, 1 / divisor)
            elif self._starts_factor():
                result = _mul(result, self.factor())
            else:
                return result

    def factor(self) -> Bivariate:
        tok = self.current
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return _scale(self.factor(), Fraction(-1))
        base = self.atom()
        if self.current.kind == "op" and self.current.text == "^":
            self.advance()
            exp_token = self.current
            if exp_token.kind != "num" or not exp_token.text.isdigit():
                raise self.error("exponent must be a nonnegative integer", exp_token)
            self.advance()
            exponent = int(exp_token.text)
            cap = ALGEBRA_PARAMS["degree_cap"]
            if max(_degree(base), 1) * exponent > cap:
                raise self.error(f"exponent {exponent} exceeds the degree cap {cap}", exp_token)
            base = _pow(base, exponent)
        return base

    def atom(self) -> Bivariate:
        tok = self.advance()
        if tok.kind == "num":
            return {(0, 0): Fraction(tok.text)} if Fraction(tok.text) != 0 else {}
        if tok.kind == "var":
            return {(1, 0): Fraction(1)} if tok.text == "x" else {(0, 1): Fraction(1)}
        if tok.kind == "op" and tok.text == "(":
            inner = self.expression()
            closing = self.current
            if not (closing.kind == "op" and closing.text == ")"):
                raise self.error("expected ')'", closing)
            self.advance()
            return inner
        if tok.kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected {tok.text!r}", tok)


def parse_bivariate(text: str) -> Bivariate:
    """Parse text into a sparse {(x power, l power): coefficient} mapping."""
    return _Parser(text).parse()


def parse_polynomial(text: str, variable: str = "x") -> RatPoly:
    """
    Parse a univariate polynomial.

    Args:
        text: Polynomial text
        variable: "x" for a RatPoly, "l" for a LamPoly

    Returns:
        RatPoly or LamPoly

    Raises:
        FamilyParseError: On malformed text or when the other variable appears
    """
    if variable not in ("x", "l"):
        raise ValueError(f"variable must be 'x' or 'l' (got {variable!r})")
    terms = parse_bivariate(text)
    other = 1 if variable == "x" else 0
    for key in terms:
        if key[other]:
            other_name = "l" if variable == "x" else "x"
            pos = max(text.find(other_name), text.find("λ") if other_name == "l" else -1, 0)
            raise FamilyParseError(f"variable {other_name!r} is not allowed here", pos, text)
    axis = 0 if variable == "x" else 1
    top = max((key[axis] for key in terms), default=-1)
    coeffs = [terms.get((k, 0) if axis == 0 else (0, k), Fraction(0)) for k in range(top + 1)]
    return RatPoly(coeffs) if variable == "x" else LamPoly(coeffs)


def parse_lam_poly(text: str) -> LamPoly:
    return parse_polynomial(text, variable="l")


def parse_family(text: str) -> ParamFamily:
    """
    Parse a family x^d + sum c_i(l) x^i given in normal form.

    Raises:
        FamilyParseError: On malformed text, a non-monic or non-normal leading part,
            or degree below 2
    """
    terms = parse_bivariate(text)
    if not terms:
        raise FamilyParseError("family is the zero polynomial", 0, text)
    d = max(i for i, _ in terms)
    end = len(text)
    if d < 2:
        raise FamilyParseError(f"family must have degree >= 2 in x (got {d})", end, text)
    top = {j: v for (i, j), v in terms.items() if i == d}
    if top != {0: Fraction(1)}:
        raise FamilyParseError(f"coefficient of x^{d} must be exactly 1", end, text)
    if any(i == d - 1 for i, _ in terms):
        raise FamilyParseError(f"family is not in normal form: x^{d - 1} term present", end, text)

    c = []
    for i in range(d - 1):
        powers = {j: v for (xi, j), v in terms.items() if xi == i}
        top_j = max(powers, default=-1)
        c.append(LamPoly([powers.get(j, 0) for j in range(top_j + 1)]))
    family = decompose_family(c, d)
    logger.debug(f"parsed family {text!r} -> {family}")
    return family
