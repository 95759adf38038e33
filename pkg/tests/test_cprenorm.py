import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hermanlab import cprenorm, ratmap, rotnum, sector
from hermanlab.errors import (DomainError, IncompatibleCombinatorics, InsufficientOrbit)
from hermanlab.ratmap import MapParams
from hermanlab.rotnum import GOLDEN as g, SILVER

SQRT3 = math.sqrt(3) - 1        # [0; 1, 2, 1, 2, ...]
B32 = complex(-1.144208, -0.964454)
THETAS = [g, SILVER, SQRT3, rotnum.periodic_cf_value([2, 1, 3])]


def rigid(theta, n=20000):
    return cprenorm.rigid_orbit(theta, n)


@pytest.fixture(scope="module")
def herman():
    orb = ratmap.orbit(MapParams.of(3, 2, B32), 4000)
    return cprenorm.herman_orbit(orb)


class TestRigidModel:
    @pytest.mark.parametrize("theta", THETAS)
    def test_samples_are_the_model(self, theta):
        z = rigid(theta)
        for n in range(2, 9):
            p = cprenorm.build_pair(z, theta, n)
            assert np.max(np.abs(p.w - p.t)) < 1e-12
            assert abs(p.e - p.e_model) < 1e-12
            assert p.t[0] == pytest.approx(-1.0, abs=1e-12)
            assert p.minus_endpoint == pytest.approx(-1.0, abs=1e-12)

    @pytest.mark.parametrize("theta", THETAS)
    def test_branches_are_translations(self, theta):
        z = rigid(theta)
        for n in range(2, 8):
            p = cprenorm.build_pair(z, theta, n)
            t, w, ti, wi = p.branch("-")
            assert len(t) and np.allclose(ti - t, p.e_model, atol=1e-11)
            t, w, ti, wi = p.branch("+")
            assert len(t) and np.allclose(ti - t, -1.0, atol=1e-11)

    @pytest.mark.parametrize("theta", THETAS)
    def test_matches_translation_pairs(self, theta):
        # the normalized level-n pair translates by e_n and -1; prime steps on
        # (1, e_n) up to the flag switch must give the level n+1 pair.  Compared
        # level by level: chaining the Gauss map would amplify rounding.
        z = rigid(theta, rotnum.best_approximants(theta, 13).q[-1] + 2)
        pairs = [cprenorm.build_pair(z, theta, n) for n in range(2, 13)]
        for a, b in zip(pairs, pairs[1:]):
            (pair, steps), = sector.standard_renormalizations(
                sector.TranslationPair(1.0, a.e_model), 1)
            assert abs(b.e_model - min(pair.u, pair.v) / max(pair.u, pair.v)) < 1e-10
            assert steps == cprenorm.chi_of_pair(a)

    @pytest.mark.parametrize("theta", THETAS)
    def test_renormalization_commutes(self, theta):
        z = rigid(theta)
        for n in range(2, 7):
            r = cprenorm.renormalize_pair(cprenorm.build_pair(z, theta, n))
            b = cprenorm.build_pair(z, theta, n + 1)
            assert r.level == b.level and r.q_minus == b.q_minus
            assert abs(r.e - b.e) < 1e-12
            assert cprenorm.pair_distance(r, b) < 1e-12

    def test_chi(self):
        zg, zs, z3 = rigid(g), rigid(SILVER), rigid(SQRT3)
        assert [cprenorm.chi_of_pair(cprenorm.build_pair(zg, g, n)) for n in range(2, 9)] == [1] * 7
        assert [cprenorm.chi_of_pair(cprenorm.build_pair(zs, SILVER, n)) for n in range(2, 7)] == [2] * 5
        chis = [cprenorm.chi_of_pair(cprenorm.build_pair(z3, SQRT3, n)) for n in range(2, 9)]
        assert set(chis) == {1, 2}
        assert all(a != b for a, b in zip(chis, chis[1:]))

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(1, 4), min_size=1, max_size=3))
    def test_chi_is_next_term(self, period):
        theta = rotnum.periodic_cf_value(period)
        terms = rotnum.cf_expand(theta, 10).terms
        z = rigid(theta, 5000)
        for n in range(2, 7):
            try:
                p = cprenorm.build_pair(z, theta, n)
                chi = cprenorm.chi_of_pair(p)
            except InsufficientOrbit:
                break
            assert chi == terms[n]

    def test_scaling_rigid(self):
        s = cprenorm.scaling_ratios(rigid(g), g, 12)
        assert np.allclose(s, -g, atol=1e-9)
        mu = cprenorm.mu_estimate(rigid(g), g, 2, 10)
        assert np.allclose(mu, g**2, atol=1e-9)


class TestErrors:
    def test_degenerate_first_level(self):
        with pytest.raises(DomainError):
            cprenorm.build_pair(rigid(g), g, 1)

    def test_short_orbit(self):
        with pytest.raises(InsufficientOrbit):
            cprenorm.build_pair(rigid(g, 30), g, 8)

    def test_incompatible(self):
        z3 = rigid(SQRT3)
        a = cprenorm.build_pair(z3, SQRT3, 2)
        b = cprenorm.build_pair(z3, SQRT3, 3)
        with pytest.raises(IncompatibleCombinatorics):
            cprenorm.pair_distance(a, b)

    def test_branch_name(self):
        with pytest.raises(DomainError):
            cprenorm.build_pair(rigid(g), g, 3).branch("x")


class TestHermanOrbit:
    def test_truncation(self, herman):
        assert 500 < len(herman) < 4000
        assert np.all(np.abs(herman) > 0.9) and np.all(np.abs(herman) < 1.6)

    def test_returns(self, herman):
        assert cprenorm.check_returns(herman, g, 12)

    def test_normalization_shape(self, herman):
        for n in range(2, 9):
            p = cprenorm.build_pair(herman, g, n)
            assert p.minus_endpoint == pytest.approx(-1.0, abs=1e-12)
            assert np.all(np.diff(p.t) > 0)
            assert cprenorm.chi_of_pair(p) == 1

    def test_diagnostics(self, herman):
        d = cprenorm.diagnostics(herman, g, 2, 2, 8)
        assert d.levels == tuple(range(2, 9))
        assert np.all(np.diff(d.delta) < 0)
        assert np.all(np.abs(np.abs(d.s) - 0.79) < 0.05)
        text = cprenorm.diagnostics_table(d)
        assert text.split("\n")[0] == "n,q_n,re_s,im_s,re_mu,im_mu,delta"
