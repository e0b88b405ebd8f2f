"""Gamma variants, appropriateness checks and the transported Gamma on images."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsext.errors import PreconditionError
from rsext.gamma import (BoundaryRatioBiholo, BoundaryRatioSelf, JacobianPower, Product, RatioPower,
                         affine_contraction, auxiliary_monotone, biholomorphic_boundary,
                         biholomorphic_normalized, check_appropriate_biholo, check_appropriate_selfmap,
                         continued_anchors, gamma_eval, gamma_from_dict, gamma_log, gamma_omega,
                         rs_selfmap, selfmaps_fixing_boundary, selfmaps_fixing_zero)
from rsext.geometry import SpacePair, sample_ball
from rsext.holo import catalog as cat
from rsext.holo.inversion import inverse_map
from rsext.holo.maps import HoloMap, compose, linear_map
from rsext.linalg import matrix_exp

X = sample_ball(1, 200, seed=4)


class TestGammaEval:
    @pytest.mark.parametrize("spec", [JacobianPower(0.5), JacobianPower(1.3), RatioPower(0.7),
                                      BoundaryRatioSelf((1.0,), 2.0), BoundaryRatioSelf((1.0,), 1.0)])
    def test_identity_gives_one(self, spec):
        assert np.allclose(gamma_eval(spec, cat.identity(1), X), 1.0, atol=1e-15)

    def test_biholo_rejects_identity(self):
        # <id(0), tau> = 0, so this variant is not defined for the identity
        with pytest.raises(PreconditionError):
            gamma_eval(BoundaryRatioBiholo((1.0,), 2.0), cat.identity(1), 0.3)

    @pytest.mark.parametrize("beta", [0.0, 0.3, 1.0])
    def test_ratio_power_at_origin(self, beta):
        h = cat.mobius_contraction(0.3)
        assert gamma_eval(RatioPower(beta), h, 0.0) == pytest.approx(0.7 ** beta, rel=1e-12)

    def test_ratio_power_needs_fixed_origin(self):
        with pytest.raises(PreconditionError):
            gamma_eval(RatioPower(0.5), cat.flip(), 0.2)

    def test_ratio_power_smooth_at_origin(self):
        h = cat.koebe()
        near = gamma_eval(RatioPower(1.0), h, 1e-9)
        assert near == pytest.approx(1.0, abs=1e-8)

    def test_biholo_flip_is_one(self):
        assert gamma_eval(BoundaryRatioBiholo((1.0,), 2.0), cat.flip(), 0.4) == pytest.approx(1.0, abs=1e-15)

    def test_koebe_root_is_principal_on_real_segment(self):
        # k' > 0 on [0, 0.5], so the principal square root is the oracle
        assert gamma_eval(JacobianPower(0.5), cat.koebe(), 0.5) == pytest.approx(np.sqrt(12.0), abs=1e-12)

    @given(st.floats(0, 0.9), st.floats(0, 2 * np.pi), st.floats(-2, 2))
    @settings(max_examples=40, deadline=None)
    def test_jacobian_power_matches_quadrature(self, r, a, alpha):
        k = cat.koebe()
        from rsext.holo.branch import continuous_log
        z = np.array([[r * np.exp(1j * a)]])
        oracle = np.exp(alpha * continuous_log(lambda p: k.jac(p)[..., 0, 0], z, method="quad"))
        got = gamma_eval(JacobianPower(alpha), k, z)
        assert np.allclose(got, oracle, rtol=1e-9)

    def test_product_adds_exponents(self):
        a = gamma_eval(JacobianPower(0.2) * JacobianPower(0.3), cat.koebe(), X)
        b = gamma_eval(JacobianPower(0.5), cat.koebe(), X)
        assert np.allclose(a, b, rtol=1e-12)

    def test_two_dimensional_jacobian_power(self):
        f = rs_selfmap(0.4)
        x = sample_ball(2, 20, seed=1)
        det = np.linalg.det(f.jac(x))
        # det J = (1-c)^(3/2) / (1 - c z1)^3 has positive real part here, so principal roots agree
        assert np.allclose(gamma_eval(JacobianPower(1 / 3), f, x), det ** (1 / 3), rtol=1e-12)

    @pytest.mark.parametrize("spec", [JacobianPower(0.25), RatioPower(0.5), BoundaryRatioSelf((1.0,), 1.5),
                                      Product((JacobianPower(0.1), RatioPower(0.2)))])
    def test_describe_roundtrip(self, spec):
        assert gamma_from_dict(spec.describe()).describe() == spec.describe()


class TestContinuedAnchors:
    def test_complex_generator(self):
        a = np.array([[1 + 2j]])
        fam = lambda t: linear_map(matrix_exp(a, t))
        spec = JacobianPower(0.5)
        t = 4.0
        logs = continued_anchors(spec, fam, t)
        # log det e^{-tA} = -t A continued from 0, not the principal value
        assert logs[0] == pytest.approx(-(1 + 2j) * t, abs=1e-12)
        val = np.exp(gamma_log(spec, fam(t), np.array([[0.3]]), anchors=logs))
        assert val[0] == pytest.approx(np.exp(-(1 + 2j) * t / 2), rel=1e-12)


class TestAppropriateSelfmap:
    @pytest.mark.parametrize("n,r", [(1, 1), (1, 2), (2, 1), (2, 2)])
    def test_jacobian_power_example(self, n, r):
        spec = JacobianPower(2 / (r * (n + 1)))
        rep = check_appropriate_selfmap(spec, selfmaps_fixing_zero(n), SpacePair.power(n, 1, 2, r), samples=500)
        assert rep.passed, rep.conditions
        assert set(rep.conditions) == {"identity", "chain-rule", "nonvanishing", "norm-bound"}

    @pytest.mark.parametrize("q", [1.0, 2.0, 4.0])
    def test_ratio_power_norm_bound(self, q):
        rep = check_appropriate_selfmap(RatioPower(1.0), selfmaps_fixing_zero(1), SpacePair.power(1, 1, q, 2),
                                        samples=500)
        assert rep.conditions["norm-bound"]["verdict"] == "pass"

    def test_schwarz_pick_case(self):
        rep = check_appropriate_selfmap(JacobianPower(1.0), selfmaps_fixing_zero(1), SpacePair.power(1, 1, 2, 1),
                                        samples=500)
        assert rep.passed
        # tight: the identity attains equality
        assert rep.conditions["norm-bound"]["worst_margin"] < 1e-12

    def test_negative_exponent_violates_bound(self):
        rep = check_appropriate_selfmap(JacobianPower(-1.0), selfmaps_fixing_zero(1), SpacePair.power(1, 1, 2, 2),
                                        samples=200)
        assert rep.verdict == "violation"
        assert rep.conditions["norm-bound"]["verdict"] == "violation"
        assert rep.witnesses

    def test_boundary_family(self):
        fam = selfmaps_fixing_boundary()
        assert fam.check_members() == []
        rep = check_appropriate_selfmap(BoundaryRatioSelf((1.0,), 2.0), fam, SpacePair.power(1, 1, 2, 2),
                                        samples=500)
        assert rep.passed, rep.conditions

    def test_family_predicates(self):
        for n in (1, 2):
            assert selfmaps_fixing_zero(n).check_members() == []
        assert biholomorphic_normalized().check_members() == []
        assert biholomorphic_boundary().check_members() == []


class TestAppropriateBiholo:
    def test_jacobian_power_chain_rule(self):
        spec = JacobianPower(0.5)
        rep = check_appropriate_biholo(spec, spec, biholomorphic_normalized(), selfmaps_fixing_zero(1),
                                       samples=300, nesting=[(cat.halving(), cat.identity(1))])
        assert rep.passed, rep.conditions
        assert rep.conditions["chain-rule"]["worst_margin"] >= -1e-9

    @pytest.mark.parametrize("r", [1.0, 2.0])
    def test_boundary_ratio_pair(self, r):
        rep = check_appropriate_biholo(BoundaryRatioSelf((1.0,), r), BoundaryRatioBiholo((1.0,), r),
                                       biholomorphic_boundary(), selfmaps_fixing_boundary(), samples=300)
        assert rep.passed, rep.conditions


class TestGammaOmega:
    def test_identity_map(self):
        h = cat.koebe()
        w = h.func(X[:50])
        assert np.allclose(gamma_omega(JacobianPower(0.5), h, cat.identity(1), w), 1.0, atol=1e-12)

    def test_inverse(self):
        h = cat.koebe()
        spec = JacobianPower(0.5)
        z = X[:50]
        w = h.func(z)
        expected = 1 / gamma_eval(spec, h, z)
        assert np.allclose(gamma_omega(spec, h, inverse_map(h), w), expected, rtol=1e-10)
        # the generic composition path, with an unflagged inverse
        inv = HoloMap(h.inverse_hint, 1, None, "k-inverse", domain_radius=None)
        assert np.allclose(gamma_omega(spec, h, inv, w, preimage=z), expected, rtol=1e-8)

    @pytest.mark.parametrize("a", [0.3, -0.2 + 0.4j])
    def test_well_defined_under_reparametrization(self, a):
        h = cat.koebe()
        phi = cat.disk_automorphism(a)
        h2 = compose(h, phi)
        spec = JacobianPower(0.5)
        psi = linear_map(np.array([[np.exp(-0.7)]]))
        z = X[:100]
        w = h.func(z)
        v1 = gamma_omega(spec, h, psi, w, preimage=z)
        v2 = gamma_omega(spec, h2, psi, w, preimage=phi.inverse_hint(z))
        assert np.max(np.abs(v1 - v2)) <= 1e-8


class TestAuxiliary:
    def test_admissible_nondecreasing(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            q = rng.uniform(1, 2)
            r = rng.uniform(1, 4)
            n = int(rng.integers(1, 5))
            alpha = rng.uniform(0, 2 / (r * (n + 1)))
            t, v = auxiliary_monotone(q, r, alpha, n)
            assert len(t) == 1000
            assert np.min(np.diff(v)) >= -1e-12

    def test_fails_outside_range(self):
        t, v = auxiliary_monotone(3.0, 1.0, 1.0, 1)
        assert np.min(np.diff(v)) < -1e-6
