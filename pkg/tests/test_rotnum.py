import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hermanlab import rotnum, sector
from hermanlab.errors import ConvergentOverflow, DomainError, RationalWithinResolution
from hermanlab.rotnum import GOLDEN as g, SILVER

import oracles

bounded_terms = st.lists(st.integers(min_value=1, max_value=12), min_size=30, max_size=40)


def theta_of(terms):
    return float(oracles.value_of_terms(terms))


class TestContinuedFractions:
    def test_golden_terms(self):
        assert rotnum.cf_expand(g, 10).terms == (1,) * 10

    def test_silver_terms(self):
        # hand value: 1/(sqrt2 - 1) = sqrt2 + 1, so every term is 2
        assert rotnum.cf_expand(SILVER, 6).terms == (2,) * 6

    def test_near_half_is_rational(self):
        with pytest.raises(RationalWithinResolution, match="rational within resolution"):
            rotnum.cf_expand(0.5 + 1e-18, 3)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5, float("nan"), float("inf")])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            rotnum.cf_expand(bad, 3)

    def test_depth_limit(self):
        with pytest.raises(DomainError):
            rotnum.cf_expand(g, 65)

    def test_value_reconstruction_bound(self):
        cf = rotnum.cf_expand(SILVER, 12)
        q = rotnum.best_approximants(cf, 12).q
        assert abs(cf.value - SILVER) < 1.0 / q[-1] ** 2

    def test_terms_validated(self):
        with pytest.raises(DomainError):
            rotnum.ContinuedFraction((1, 0, 2), 0.5)

    @settings(max_examples=200, deadline=None)
    @given(bounded_terms)
    def test_round_trip(self, terms):
        theta = theta_of(terms)
        n = min(rotnum.reliable_depth(theta), 20)
        cf = rotnum.cf_expand(theta, n)
        q = oracles.denominators(terms[:n + 1])
        assert abs(rotnum.cf_value(cf.terms) - theta) < 1.0 / (q[n - 1] * q[n]) + 1e-15

    @settings(max_examples=100, deadline=None)
    @given(bounded_terms)
    def test_expand_recovers_terms(self, terms):
        theta = theta_of(terms)
        depth = min(rotnum.reliable_depth(theta), 20)
        assert rotnum.cf_expand(theta, depth).terms == tuple(terms[:depth])

    def test_periodic_value(self):
        assert rotnum.periodic_cf_value([1]) == pytest.approx(g, abs=1e-15)
        assert rotnum.periodic_cf_value([2]) == pytest.approx(SILVER, abs=1e-15)
        assert rotnum.periodic_cf_value([1, 2]) == pytest.approx(math.sqrt(3) - 1, abs=1e-15)


class TestConvergents:
    def test_fibonacci(self):
        assert rotnum.best_approximants(g, 6).q == (1, 2, 3, 5, 8, 13)

    def test_silver_denominators(self):
        # integer recurrence by hand: 2, 2*2+1, 2*5+2, 2*12+5
        assert rotnum.best_approximants(SILVER, 4).q == (2, 5, 12, 29)

    @settings(max_examples=100, deadline=None)
    @given(bounded_terms)
    def test_first_denominator_is_first_term(self, terms):
        assert rotnum.best_approximants(theta_of(terms), 1).q == (terms[0],)

    @settings(max_examples=100, deadline=None)
    @given(bounded_terms)
    def test_recurrence_and_error_bound(self, terms):
        theta = theta_of(terms)
        n = min(rotnum.reliable_depth(theta), 15)
        conv = rotnum.best_approximants(theta, n)
        assert list(conv.q) == oracles.denominators(terms[:n])
        for k in range(n):
            assert math.gcd(conv.p[k], conv.q[k]) == 1
        for k in range(n - 1):
            assert abs(theta - conv.p[k] / conv.q[k]) < 1.0 / (conv.q[k] * conv.q[k + 1])
        assert all(a < b for a, b in zip(conv.q[1:], conv.q[2:]))

    def test_overflow_reported(self):
        with pytest.raises(ConvergentOverflow):
            rotnum.best_approximants([10**9] * 3, 3)

    def test_errors_alternate(self):
        err = rotnum.convergent_errors(g, 8)
        assert err[0] == -1.0 and err[1] == pytest.approx(g)
        assert np.all(np.sign(err[1:]) == (-1.0) ** np.arange(9))


class TestMaps:
    def test_gauss(self):
        assert rotnum.gauss(g) == pytest.approx(g, abs=1e-15)
        assert rotnum.gauss(SILVER) == pytest.approx(SILVER, abs=1e-14)
        with pytest.raises(RationalWithinResolution):
            rotnum.gauss(1 / 3)
        with pytest.raises(DomainError):
            rotnum.gauss(1.0)

    def test_r_prm_examples(self):
        assert rotnum.r_prm(1 / 3) == pytest.approx(0.5, abs=1e-15)
        assert rotnum.r_prm(g) == pytest.approx(0.3819660113, abs=1e-10)
        assert abs(rotnum.r_prm(rotnum.r_prm(g)) - g) < 1e-12
        assert rotnum.r_prm(0.0) == 0.0
        with pytest.raises(DomainError):
            rotnum.r_prm(1.0)

    def test_r_prm_period(self):
        assert rotnum.r_prm_period(g, 10) == 2
        # brute iteration in 50-digit arithmetic gives 4
        assert rotnum.r_prm_period(SILVER, 64) == 4
        assert rotnum.r_prm_period(0.123456789, 10) is None

    def test_r_prm_matches_exact_rationals(self):
        for x in (Fraction(1, 3), Fraction(5, 7), Fraction(2, 9), Fraction(11, 13)):
            assert rotnum.r_prm(float(x)) == pytest.approx(float(oracles.rprm_exact(x)), abs=1e-15)

    @settings(max_examples=1000, deadline=None)
    @given(st.floats(min_value=1e-3, max_value=1 - 1e-3))
    def test_r_prm_equals_pair_step(self, theta):
        # u = theta, v = 1 - theta; the pair's rotation is v/(u+v) = 1 - theta
        if abs(theta - 0.5) < 1e-9:
            return
        pair = sector.TranslationPair(1 - theta, theta)
        new, _ = sector.prime_renorm_pair(pair)
        assert abs(sector.rotation_of_pair(new) - rotnum.r_prm(theta)) < 1e-12

    def test_gauss_and_prm_periods(self):
        rc = rotnum.rotation_class(g)
        assert (rc.kind, rc.gauss_period, rc.prm_period) == ("periodic", 1, 2)
        rc = rotnum.rotation_class(SILVER)
        assert (rc.kind, rc.gauss_period, rc.prm_period) == ("periodic", 1, 4)
        rc = rotnum.rotation_class(math.sqrt(3) - 1)
        assert (rc.gauss_period, rc.prm_period) == (2, 3)

    def test_classification_chain(self):
        pre = 1.0 / (3.0 + g)
        rc = rotnum.rotation_class(pre)
        assert rc.kind == "pre-periodic" and rc.is_bounded
        assert rotnum.rotation_class(g).is_bounded
        assert rotnum.smallest_even_gauss_period(g) == 2
        assert rotnum.smallest_even_gauss_period(math.sqrt(3) - 1) == 2


class TestClosestReturns:
    def test_golden(self):
        assert rotnum.closest_returns_rotation(g, 100) == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]

    def test_silver(self):
        # the tie at time 1 vs 2 is resolved by strict improvement: both are recorded
        assert rotnum.closest_returns_rotation(SILVER, 30) == [1, 2, 5, 12, 29]

    def test_n_one(self):
        assert rotnum.closest_returns_rotation(0.3, 1) == [1]

    def test_exact_rational_tie_keeps_earlier(self):
        # 5*8 = 40 = 1 mod 13 and 8*8 = 64 = 12 mod 13 tie; time 5 wins
        assert rotnum.closest_returns_rotation(Fraction(8, 13), 13) == [1, 2, 3, 5, 13]

    def test_limit(self):
        with pytest.raises(DomainError):
            rotnum.closest_returns_rotation(g, 10**6 + 1)

    @settings(max_examples=100, deadline=None)
    @given(bounded_terms)
    def test_subset_of_denominators(self, terms):
        theta = theta_of(terms)
        ret = rotnum.closest_returns_rotation(theta, 1000)
        assert ret == oracles.closest_returns_brute(theta, 1000)
        q = set(oracles.denominators(terms)) | {1}
        assert set(ret) <= q


class TestParsing:
    def test_named(self):
        assert rotnum.theta_from_string("golden") == g
        assert rotnum.theta_from_string("SILVER") == SILVER

    def test_decimal_matches_named(self):
        assert rotnum.theta_from_string("0.6180339887498949") == g

    def test_cf_list_is_one_period(self):
        assert rotnum.theta_from_string("cf:1") == pytest.approx(g, abs=1e-15)
        assert rotnum.theta_from_string("cf:1,2") == pytest.approx(math.sqrt(3) - 1, abs=1e-15)

    @pytest.mark.parametrize("bad", ["bronze", "cf:1,x", "cf:0", "2.5", ""])
    def test_bad(self, bad):
        with pytest.raises(DomainError):
            rotnum.theta_from_string(bad)
