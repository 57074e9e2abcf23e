import math
from fractions import Fraction

from ..errors import ParameterError

SIGNIFICANT_TL = "significant_tl"
SIGNIFICANT_REFERENT = "significant_referent"
NOT_SIGNIFICANT = "not_significant"


def sign_test_critical(n):
    """Smallest win count significant at the 5% level: ceil((n + 1.96 sqrt(n)) / 2)."""
    if n < 1:
        raise ParameterError("sign test needs at least one case")
    root = math.isqrt(n)
    if root * root == n:
        # exact rational arithmetic so e.g. n=100 -> 59.8 rounds correctly
        return math.ceil((n + Fraction(196, 100) * root) / 2)
    return math.ceil((n + 1.96 * math.sqrt(n)) / 2)


def sign_test(wins, losses):
    if wins < 0 or losses < 0 or wins + losses < 1:
        raise ParameterError("need non-negative counts with at least one decided case")
    crit = sign_test_critical(wins + losses)
    if wins >= crit:
        return SIGNIFICANT_TL
    if losses >= crit:
        return SIGNIFICANT_REFERENT
    return NOT_SIGNIFICANT
