"""Profiles, norms, the product ball and its gauge."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from rsext.errors import PreconditionError
from rsext.geometry import (Norm, ProductPoint, ProfileSpec, SpacePair, ball_contains, gauge,
                            product_norm, profile_eval, sample_ball, sample_product_ball)

EUCLID = SpacePair.power(1, 1, 2, 2)
R1 = SpacePair.power(1, 1, 2, 1)


def pt(x, y):
    return ProductPoint.of([x], [y])


class TestProfile:
    def test_endpoints(self):
        p = ProfileSpec(2, 2)
        assert profile_eval(p, 0.0) == 1.0
        assert profile_eval(p, 1.0) == 0.0

    def test_r1_value(self):
        assert profile_eval(ProfileSpec(2, 1), 0.6) == pytest.approx(0.64, abs=1e-15)

    def test_custom_profile_validated(self):
        ProfileSpec(func=lambda s: 1 - s).validate()
        with pytest.raises(PreconditionError):
            ProfileSpec(func=lambda s: 1 - s * s + 0.3 * np.sin(7 * s) * s * (1 - s)).validate()

    def test_rejects_bad_exponents(self):
        with pytest.raises(PreconditionError):
            ProfileSpec(0.5, 2)

    @given(st.floats(1, 6), st.floats(1, 6))
    @settings(max_examples=40, deadline=None)
    def test_decreasing(self, q, r):
        s = np.linspace(0, 1, 200)
        v = ProfileSpec(q, r)(s)
        assert np.all(np.diff(v) <= 1e-15)


class TestBallContains:
    def test_center(self):
        assert ball_contains(EUCLID, pt(0, 0)) == 1.0

    def test_boundary(self):
        assert ball_contains(EUCLID, pt(0.6, 0.8)) == pytest.approx(0.0, abs=1e-15)

    def test_r1(self):
        assert ball_contains(R1, pt(0.5, 0.5)) == pytest.approx(0.25, abs=1e-15)

    def test_outside_x(self):
        assert ball_contains(EUCLID, pt(1.2, 0)) == -np.inf


class TestProductNorm:
    def test_axes(self):
        assert product_norm(EUCLID, pt(0.37, 0)) == pytest.approx(0.37, rel=1e-14)
        assert product_norm(EUCLID, pt(0, 0.42j)) == pytest.approx(0.42, rel=1e-14)

    def test_pythagoras(self):
        assert product_norm(EUCLID, pt(3, 4)) == pytest.approx(5.0, rel=1e-12)

    @given(st.floats(0, 5), st.floats(0, 5))
    @settings(max_examples=60, deadline=None)
    def test_r1_closed_form(self, a, b):
        # q = 2, r = 1: b = lam - a^2 / lam
        expected = 0.5 * (b + np.hypot(b, 2 * a))
        assert gauge(ProfileSpec(2, 1), a, b) == pytest.approx(expected, rel=1e-12, abs=1e-300)

    @given(st.floats(1, 4), st.floats(1, 4), st.floats(0.01, 3), st.floats(0.01, 3))
    @settings(max_examples=40, deadline=None)
    def test_against_brentq(self, q, r, a, b):
        prof = ProfileSpec(q, r)
        lam = brentq(lambda l: l * prof(min(a / l, 1.0)) - b, a, a + b + 1, xtol=1e-15, rtol=1e-14)
        assert gauge(prof, a, b) == pytest.approx(lam, rel=1e-11)

    @given(st.floats(1, 4), st.floats(1, 4), st.floats(0.05, 0.95))
    @settings(max_examples=30, deadline=None)
    def test_unit_sphere(self, q, r, a):
        sp = SpacePair.power(1, 1, q, r)
        b = float(sp.profile(a))
        assert product_norm(sp, pt(a, b)) == pytest.approx(1.0, rel=1e-12)

    @given(st.floats(0.01, 3), st.floats(0.01, 3), st.floats(0.1, 10))
    @settings(max_examples=40, deadline=None)
    def test_homogeneous(self, a, b, c):
        sp = SpacePair.power(1, 1, 3, 1.5)
        n1 = product_norm(sp, pt(a, b))
        n2 = product_norm(sp, pt(c * a, c * b))
        assert n2 == pytest.approx(c * n1, rel=1e-11)


class TestNorm:
    @pytest.mark.parametrize("s", [1.0, 1.5, 2.0, 3.0, np.inf])
    def test_axioms(self, s):
        assert Norm(s).check_axioms(3) <= 1e-12

    def test_dual(self):
        assert Norm(1).dual.s == np.inf
        assert Norm(3).dual.s == pytest.approx(1.5)

    def test_rejects_s_below_one(self):
        with pytest.raises(PreconditionError):
            Norm(0.5)


class TestSampling:
    def test_sample_ball_radii(self):
        pts = sample_ball(2, 100, seed=3)
        assert np.all(np.linalg.norm(pts, axis=-1) < 1)

    def test_axis_probes(self):
        pts = sample_ball(1, 40, seed=1)
        k = 18
        assert np.allclose(pts[:k, 0].imag, 0) and np.all(pts[:k, 0].real > 0)
        assert np.all(pts[k:2 * k, 0].real < 0)

    def test_sample_ball_deterministic(self):
        assert np.array_equal(sample_ball(2, 10, seed=9), sample_ball(2, 10, seed=9))

    @pytest.mark.parametrize("q,r", [(2, 2), (2, 1), (3, 1.5)])
    def test_product_samples_on_shells(self, q, r):
        sp = SpacePair.power(2, 1, q, r)
        radii = np.array([0.2, 0.5, 0.9])
        p = sample_product_ball(sp, 30, seed=2, radii=radii)
        norms = product_norm(sp, p)
        assert np.allclose(norms, radii[np.arange(30) % 3], rtol=1e-11)
        assert np.all(ball_contains(sp, p) > 0)

    def test_stack_split_roundtrip(self):
        p = sample_product_ball(SpacePair.power(2, 3), 5)
        q = ProductPoint.split(p.stack(), 2)
        assert np.array_equal(q.x, p.x) and np.array_equal(q.y, p.y)

    def test_dimension_checked(self):
        with pytest.raises(PreconditionError):
            SpacePair(0, 1)
