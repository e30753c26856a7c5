"""Chi-square preference test against the equal-split null.

The p-value comes from the regularized upper incomplete gamma function
Q(a, x), computed with the classic split: power series for x < a + 1,
Lentz continued fraction otherwise. Accurate to well past 10 significant
digits over the tested range, and cross-checkable against erfc since a
1-df chi-square survival function is erfc(sqrt(x/2)).
"""

from __future__ import annotations

import math
from typing import Tuple

from ..errors import DomainError

_MAX_ITER = 500
_EPS = 1e-16
_TINY = 1e-300


def _gamma_series_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a,x) by power series."""
    term = 1.0 / a
    total = term
    for n in range(1, _MAX_ITER):
        term *= x / (a + n)
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a,x) by Lentz continued fraction."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) for a > 0, x >= 0."""
    if a <= 0:
        raise DomainError(f"gammaincc needs a > 0, got {a}")
    if x < 0:
        raise DomainError(f"gammaincc needs x >= 0, got {x}")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series_p(a, x)
    return _gamma_cf_q(a, x)


def chi2_sf(x: float, df: int = 1) -> float:
    """Survival function of the chi-square distribution."""
    if df < 1:
        raise DomainError(f"df must be >= 1, got {df}")
    if x < 0:
        raise DomainError(f"chi-square statistic must be >= 0, got {x}")
    return gammaincc(df / 2.0, x / 2.0)


def chi_square_preference(votes_a: int, votes_b: int) -> Tuple[float, float]:
    """1-df goodness-of-fit of (votes_a, votes_b) against a 50/50 split."""
    if votes_a < 0 or votes_b < 0:
        raise DomainError("vote counts must be nonnegative")
    total = votes_a + votes_b
    if total == 0:
        raise DomainError("chi-square needs at least one vote")
    expected = total / 2.0
    stat = ((votes_a - expected) ** 2 + (votes_b - expected) ** 2) / expected
    return stat, chi2_sf(stat, df=1)
