import logging
from typing import Optional, Tuple

from dynmand.config import ALGEBRA_PARAMS, NUMERIC_PARAMS
from dynmand.errors import DegreeCapExceeded

logger = logging.getLogger(__name__)


class ResourceGuard:
    """
    Keep symbolic and iterative computations inside configured limits.
    """

    def __init__(self, degree_cap=None, iter_cap=None, nonarch_iter_cap=None):
        """
        Initialize the ResourceGuard.

        Args:
            degree_cap: Largest degree a symbolic iterate may reach (defaults to ALGEBRA_PARAMS)
            iter_cap: Archimedean iteration cap (defaults to NUMERIC_PARAMS)
            nonarch_iter_cap: p-adic iteration cap (defaults to NUMERIC_PARAMS)
        """
        self.degree_cap = degree_cap or ALGEBRA_PARAMS["degree_cap"]
        self.iter_cap = iter_cap or NUMERIC_PARAMS["iter_cap"]
        self.nonarch_iter_cap = nonarch_iter_cap or NUMERIC_PARAMS["nonarch_iter_cap"]

    def predicted_iterate_degree(self, m: int, d: int, n: int) -> int:
        """
        Degree of g_{c,n} = f^n(c) when the degree law applies.

        Args:
            m: Degree of the marked point in lambda
            d: Degree of the family in x
            n: Number of iterations

        Returns:
            int: m * d**n (at least the degree of c itself)
        """
        return max(m, 1) * d ** n

    def can_expand(self, predicted_degree: int) -> Tuple[bool, str]:
        """
        Check whether a symbolic expansion of the given degree is allowed.

        Args:
            predicted_degree: Degree the expansion is expected to reach

        Returns:
            tuple: (allowed, reason)
        """
        if predicted_degree > self.degree_cap:
            return False, f"Degree cap reached: {predicted_degree}/{self.degree_cap}"
        return True, "Expansion allowed"

    def check_expand(self, predicted_degree: int):
        """
        Raise DegreeCapExceeded when an expansion is not allowed.

        Args:
            predicted_degree: Degree the expansion is expected to reach
        """
        allowed, reason = self.can_expand(predicted_degree)
        if not allowed:
            logger.warning(reason)
            raise DegreeCapExceeded(predicted_degree, self.degree_cap)

    def max_iterations(self, nonarchimedean: bool = False, requested: Optional[int] = None) -> int:
        cap = self.nonarch_iter_cap if nonarchimedean else self.iter_cap
        if requested is None:
            return cap
        return min(requested, cap)


# Create a singleton instance
resource_guard = ResourceGuard()
