"""Chi-square machinery against closed forms and an erfc cross-check."""

import math

import pytest

from crfgan.errors import DomainError
from crfgan.study.stats import chi2_sf, chi_square_preference, gammaincc


def test_preference_215_vs_145():
    stat, p = chi_square_preference(215, 145)
    assert abs(stat - 13.611) <= 0.001
    assert abs(p - 2.26e-4) <= 1e-5


def test_preference_is_symmetric():
    s1, p1 = chi_square_preference(215, 145)
    s2, p2 = chi_square_preference(145, 215)
    assert s1 == s2 and p1 == p2


def test_preference_even_split_is_null():
    stat, p = chi_square_preference(180, 180)
    assert stat == 0.0
    assert p == 1.0


def test_critical_value_3_841():
    # the classic 5% critical value for 1 df, both directions
    assert abs(chi2_sf(3.841, df=1) - 0.05) <= 1e-3
    lo, hi = 3.0, 5.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if chi2_sf(mid, df=1) > 0.05:
            lo = mid
        else:
            hi = mid
    assert abs(0.5 * (lo + hi) - 3.841) <= 1e-3


def test_df1_matches_erfc():
    # for 1 df the survival function is erfc(sqrt(x/2))
    for x in (0.01, 0.5, 1.0, 3.841, 10.0, 13.611, 30.0, 80.0):
        want = math.erfc(math.sqrt(x / 2.0))
        assert abs(chi2_sf(x, df=1) - want) <= 1e-10 * max(want, 1e-30)


def test_df2_closed_form():
    # 2 df chi-square is Exp(1/2): sf(x) = exp(-x/2)
    for x in (0.1, 1.0, 2.0, 5.991, 20.0):
        assert abs(chi2_sf(x, df=2) - math.exp(-x / 2.0)) <= 1e-12


def test_even_df_closed_form():
    # df=2k: sf(x) = exp(-x/2) * sum_{j<k} (x/2)^j / j!
    for df in (4, 6, 10):
        k = df // 2
        for x in (0.5, 3.0, 12.0):
            want = math.exp(-x / 2.0) * sum(
                (x / 2.0) ** j / math.factorial(j) for j in range(k))
            assert abs(chi2_sf(x, df=df) - want) <= 1e-12


def test_gammaincc_boundaries():
    assert gammaincc(1.0, 0.0) == 1.0
    assert gammaincc(2.5, 1e-12) == pytest.approx(1.0, abs=1e-10)
    # Q(1, x) = exp(-x)
    for x in (0.2, 1.0, 5.0, 40.0):
        assert abs(gammaincc(1.0, x) - math.exp(-x)) <= 1e-13


def test_sf_monotone_decreasing():
    xs = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
    vals = [chi2_sf(x, df=1) for x in xs]
    assert vals[0] == 1.0
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 0.0


def test_domain_errors():
    with pytest.raises(DomainError):
        chi2_sf(-1.0)
    with pytest.raises(DomainError):
        chi2_sf(1.0, df=0)
    with pytest.raises(DomainError):
        gammaincc(0.0, 1.0)
    with pytest.raises(DomainError):
        gammaincc(1.0, -1.0)
    with pytest.raises(DomainError):
        chi_square_preference(-1, 5)
    with pytest.raises(DomainError):
        chi_square_preference(0, 0)


def test_preference_statistic_formula():
    # (a - n/2)^2/(n/2) + (b - n/2)^2/(n/2) with a+b = n
    stat, _ = chi_square_preference(30, 10)
    assert stat == pytest.approx((30 - 20) ** 2 / 20 + (10 - 20) ** 2 / 20)
    # doubling both counts doubles the statistic
    s1, _ = chi_square_preference(30, 10)
    s2, _ = chi_square_preference(60, 20)
    assert s2 == pytest.approx(2.0 * s1)
