"""Sampled invariance verifiers, C derivation, figure data and Bloch bounds."""
import csv
import io

import numpy as np
import pytest

from rsext.errors import PreconditionError, UnsupportedError
from rsext.extension import classic, extend
from rsext.gamma import BoundaryRatioBiholo, BoundaryRatioSelf, JacobianPower, RatioPower
from rsext.geometry import SpacePair
from rsext.holo import catalog as cat
from rsext.semigroups import IdentityFlow, LinearFlow
from rsext.verify import (Affine, Linear, Sampler, Shift, SpirallikeClaim, bloch_bounds, check_affine_invariance,
                          check_convex_in_direction, check_extended_spirallike, check_spirallike, derive_C,
                          export_invariance_manifold)

SMALL = Sampler(n_points=200)
EUCLID = SpacePair.power(1, 1, 2, 2)


class TestSpirallike:
    def test_koebe_starlike(self):
        rep = check_spirallike(SpirallikeClaim(cat.koebe(), np.eye(1), SMALL))
        assert rep.passed and rep.unknown_fraction <= 0.05

    def test_flip_starlike_wrt_boundary(self):
        assert check_spirallike(SpirallikeClaim(cat.flip(), np.eye(1), SMALL)).passed

    def test_flip_expanding_violates(self):
        rep = check_spirallike(SpirallikeClaim(cat.flip(), -np.eye(1), SMALL))
        assert rep.verdict == "violation"
        w = rep.witnesses[0]
        assert w["margin"] < 0 and "t" in w and "point" in w

    def test_spiral_in_disk(self):
        # the disk is A-spirallike for A = 1 + 3i: |e^{-tA} w| = e^{-t}|w|
        assert check_spirallike(SpirallikeClaim(cat.identity(1), np.array([[1 + 3j]]), SMALL)).passed

    def test_marginal_operator_inconclusive(self):
        rep = check_spirallike(SpirallikeClaim(cat.identity(1), np.array([[1j]]), SMALL))
        assert rep.verdict == "inconclusive"

    def test_dimension_checked(self):
        with pytest.raises(PreconditionError):
            SpirallikeClaim(cat.koebe(), np.eye(2))


class TestDeriveC:
    @pytest.mark.parametrize("n,r", [(1, 2), (2, 1)])
    def test_jacobian_power_trace(self, n, r):
        a = np.diag(np.arange(1, n + 1) * (1 + 0.5j))
        alpha = 2 / (r * (n + 1))
        c, rep = derive_C(JacobianPower(alpha), Linear(a))
        assert c == pytest.approx(2 * np.trace(a) / (r * (n + 1)))
        assert rep.passed and rep.worst_margin >= -1e-9

    def test_shift_zero(self):
        c, rep = derive_C(JacobianPower(0.5), Shift((1.0,)))
        assert c == 0 and rep.passed

    @pytest.mark.parametrize("lam,r", [(1.0, 2.0), (1.0, 1.0), (2 + 1j, 2.0)])
    def test_boundary_ratio(self, lam, r):
        c, rep = derive_C(BoundaryRatioBiholo((1.0,), r), Linear(np.array([[lam]])))
        assert c == pytest.approx(2 * lam / r)
        assert rep.passed and rep.worst_margin >= -1e-9

    def test_affine_motion(self):
        c, rep = derive_C(JacobianPower(0.5), Affine(np.array([[2.0]]), 1.0, (1.0,)), h=cat.cayley())
        assert c == pytest.approx(1.0) and rep.passed

    def test_product_adds(self):
        g = JacobianPower(0.5) * BoundaryRatioBiholo((1.0,), 2.0)
        c, rep = derive_C(g, Linear(np.eye(1)))
        assert c == pytest.approx(0.5 + 1.0) and rep.passed

    def test_eigenvector_required(self):
        a = np.array([[1.0, 1.0], [0.0, 2.0]])
        with pytest.raises(PreconditionError):
            derive_C(BoundaryRatioBiholo((1.0, 0.0), 2.0), Linear(a))

    def test_unsupported(self):
        with pytest.raises(UnsupportedError):
            derive_C(RatioPower(0.5), Linear(np.eye(1)), h=cat.koebe())


class TestExtendedSpirallike:
    def test_rs_koebe_starlike(self):
        rep = check_extended_spirallike(cat.koebe(), JacobianPower(0.5), np.eye(1), [[0.5]], EUCLID, SMALL)
        assert rep.passed
        assert rep.params["C"] == pytest.approx(0.5)
        assert np.allclose(rep.params["block"], np.eye(2))

    @pytest.mark.parametrize("mu", [0.0, 1.0])
    def test_flip_boundary(self, mu):
        rep = check_extended_spirallike(cat.flip(), BoundaryRatioBiholo((1.0,), 2.0), np.eye(1), [[mu]],
                                        EUCLID, SMALL)
        assert rep.passed
        assert rep.params["block"][1, 1] == pytest.approx(mu + 1.0)

    def test_wrong_block_violates(self):
        # B = -1 makes B + C negative, so the fibre expands
        rep = check_extended_spirallike(cat.koebe(), JacobianPower(0.5), np.eye(1), [[-1.0]], EUCLID, SMALL,
                                        verify_base=False)
        assert rep.verdict == "violation"


class TestConvex:
    def test_cayley_base(self):
        assert check_convex_in_direction(cat.cayley(), (1.0,), SMALL).passed

    def test_cayley_extension(self):
        em = extend(JacobianPower(0.5), cat.cayley(), EUCLID)
        rep = check_convex_in_direction(em, (1.0,), SMALL, b=np.zeros((1, 1)))
        assert rep.passed and rep.params["C"] == 0

    def test_koebe_backwards_violates(self):
        rep = check_convex_in_direction(cat.koebe(), (-1.0,), SMALL)
        assert rep.verdict == "violation"
        w = rep.witnesses[0]
        assert w["margin"] < -1e-9

    def test_koebe_forward_passes(self):
        assert check_convex_in_direction(cat.koebe(), (1.0,), SMALL).passed


class TestAffineInvariance:
    def test_flip_linear(self):
        rep = check_affine_invariance(cat.flip(), BoundaryRatioBiholo((1.0,), 2.0), Linear(np.eye(1)),
                                      LinearFlow(np.array([[0.5]])), EUCLID, SMALL)
        assert rep.passed, rep.conditions
        assert set(rep.conditions) == {"base-invariance", "C-identity", "curve-containment"}

    def test_shift_reduces_to_convexity(self):
        rep = check_affine_invariance(cat.cayley(), JacobianPower(0.5), Shift((1.0,)), IdentityFlow(1), EUCLID,
                                      SMALL)
        assert rep.passed and rep.params["C"] == 0


class TestManifold:
    def test_spiral_segment(self):
        em = classic("RS", cat.koebe())
        base = em.stacked(np.array([0.3, 0.4]))
        table, rep = export_invariance_manifold(em, Linear(np.eye(1)), base)
        assert rep.passed and np.all(table.margin > -1e-9)
        first = table.points[0]
        assert table.t[0] == 0 and table.s[0] == 0.25
        row = [r for r, s, t in zip(table.points, table.s, table.t) if s == 1.0 and t == 0][0]
        assert np.allclose(row, base)

    def test_cylinder(self):
        em = extend(JacobianPower(0.5), cat.cayley(), EUCLID)
        base = em.stacked(np.array([0.2j, 0.5]))
        table, rep = export_invariance_manifold(em, Shift((1.0,)), base)
        assert rep.passed and np.all(table.margin > -1e-9)
        assert np.allclose(np.abs(table.points[table.s == 1.0, 1]), abs(base[1]))

    def test_csv(self):
        em = classic("RS", cat.koebe())
        table, _ = export_invariance_manifold(em, Linear(np.eye(1)), em.stacked(np.array([0.3, 0.4])),
                                              t_grid=[0.0, 1.0])
        rows = list(csv.reader(io.StringIO(table.to_csv())))
        assert rows[0] == ["t", "coord0_re", "coord0_im", "coord1_re", "coord1_im", "margin"]
        assert len(rows) == 1 + 2 * 4
        assert all(float(r[-1]) > 0 for r in rows[1:])

    def test_base_point_outside(self):
        em = classic("RS", cat.koebe())
        with pytest.raises(PreconditionError):
            export_invariance_manifold(em, Linear(np.eye(1)), np.array([2.0, 5.0]))


class TestBloch:
    def test_identity(self):
        rep = bloch_bounds(cat.identity(1), JacobianPower(0.5))
        sup = rep.params["suprema"]
        assert sup["derivative"] == pytest.approx(1.0)
        assert sup["gamma"] == pytest.approx(1.0)
        assert sup["gamma-derivative"] == pytest.approx(0.0, abs=1e-9)
        assert sup["extended"] <= 2 + 1e-9
        assert rep.passed

    def test_log(self):
        rep = bloch_bounds(cat.log_map(), JacobianPower(0.5))
        sup = rep.params["suprema"]
        assert sup["derivative"] <= 2.0
        assert sup["extended"] <= sup["derivative"] + sup["gamma"] + sup["gamma-derivative"] + 1e-9
        assert all(v < 0.05 for v in rep.params["relative_change"].values())
        assert rep.passed

    def test_derivative_closed_form_bound(self):
        # (1 - |z|^2) / |1 - z| <= 1 + |z| < 2 on the grid
        z = 0.99 * np.exp(1j * np.linspace(0, 2 * np.pi, 400))
        assert np.max((1 - np.abs(z) ** 2) / np.abs(1 - z)) <= 2
