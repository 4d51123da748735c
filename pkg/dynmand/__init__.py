"""
dynmand: canonical heights, Green's functions and preperiodic parameters for
one-parameter families of polynomials f_l(x) = x^d + c_{d-2}(l) x^{d-2} + ... + c_0(l).
"""

from dynmand.errors import (
    CertificationError,
    DegreeCapExceeded,
    DegreeError,
    DynmandError,
    FamilyParseError,
    HypothesisError,
    OutsideCertifiedDomain,
    RootFindingError,
)
from dynmand.grammar import parse_family, parse_lam_poly, parse_polynomial
from dynmand.guard import ResourceGuard, resource_guard
from dynmand.poly_core import (
    LamPoly,
    ParamFamily,
    RatPoly,
    check_degree_law,
    decompose_family,
    iterate_param,
    normalize_polynomial,
)

__version__ = "0.1.0"
