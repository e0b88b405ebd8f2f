"""Holomorphic maps, branch continuation, Newton inversion and image membership."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsext.errors import AmbiguityError, DomainError, NotFoundError, PreconditionError, ZeroOnPathError
from rsext.holo import catalog as cat
from rsext.holo.branch import BranchTracker, branch_power, continuous_log
from rsext.holo.inversion import (FOUND, INSIDE, NOT_FOUND, OUTSIDE, UNKNOWN, RHO_LADDER, argument_principle,
                                  image_contains, image_contains_many, invert, invert_many, inverse_map,
                                  winding_number)
from rsext.holo.maps import (HoloMap, cauchy_riemann_residual, compose, diagonal, fd_jacobian, linear_map,
                             scalar_map)

disk_pts = st.builds(lambda r, a: r * np.exp(1j * a), st.floats(0, 0.95), st.floats(0, 2 * np.pi))


def strip_image(f):
    """The same map without its exact image test or inverse formula."""
    return HoloMap(f.func, f.dim, f.jac_func, f.name + "-bare", None, None, f.domain_radius, f.entire)


class TestEval:
    def test_koebe(self):
        assert cat.koebe()(0.5) == pytest.approx(2.0, abs=1e-15)

    def test_identity(self):
        z = np.array([0.1 + 0.2j, -0.3j])
        assert np.array_equal(cat.identity(2)(z), z)

    def test_flip(self):
        assert cat.flip()(0.3j) == pytest.approx(1 - 0.3j)

    def test_domain_checked(self):
        with pytest.raises(DomainError):
            cat.koebe()(1.2)

    def test_batch_shapes(self):
        z = np.linspace(-0.5, 0.5, 6).reshape(2, 3)
        assert cat.koebe()(z).shape == (2, 3)


class TestJacobian:
    def test_koebe(self):
        assert cat.koebe().jacobian(0.5) == pytest.approx(12.0, rel=1e-14)

    def test_identity(self):
        assert cat.identity(1).jacobian(0.3 + 0.1j) == 1

    def test_halving_against_fd(self):
        h = cat.halving()
        exact = h.jacobian(0.3)
        assert exact == pytest.approx(2 / 1.7 ** 2, rel=1e-14)
        fd = fd_jacobian(h.func, np.array([[0.3 + 0j]]))[0, 0, 0]
        assert abs(fd - exact) <= 1e-6

    @pytest.mark.parametrize("name", ["koebe", "cayley", "log", "half-plane", "halving"])
    def test_catalog_jacobians_against_fd(self, name):
        f = cat.catalog_map(name)
        z = 0.6 * np.exp(1j * np.linspace(0, 6, 7))[:, None]
        exact = f.jac(z)
        fd = fd_jacobian(f.func, z)
        assert np.max(np.abs(exact - fd)) <= 1e-6 * np.max(np.abs(exact))

    def test_cauchy_riemann(self):
        z = 0.5 * np.exp(1j * np.linspace(0, 6, 5))[:, None]
        assert cauchy_riemann_residual(cat.koebe(), z) < 1e-6

    def test_compose_chain_rule(self):
        f, g = cat.koebe(), cat.halving()
        fg = compose(f, g)
        z = np.array([[0.2 + 0.3j]])
        assert fg.jac(z)[0, 0, 0] == pytest.approx(f.jac(g.func(z))[0, 0, 0] * g.jac(z)[0, 0, 0], rel=1e-13)

    def test_diagonal(self):
        d = diagonal(cat.koebe(), cat.flip())
        z = np.array([0.5, 0.3j])
        assert np.allclose(d(z), [2.0, 1 - 0.3j])
        assert np.allclose(d.jacobian(z), np.diag([12.0, -1.0]))

    def test_linear_map(self):
        m = np.array([[1, 2j], [0, 3]])
        f = linear_map(m, offset=[1, 0])
        assert np.allclose(f.jacobian(np.zeros(2)), m)


class TestBranch:
    def test_constant_one(self):
        g = lambda z: np.ones(z.shape[:-1], dtype=complex)
        assert branch_power(g, 0.37 + 2j, np.array([[0.4j]]))[0] == pytest.approx(1.0)

    def test_koebe_derivative_sqrt(self):
        k = cat.koebe()
        val = branch_power(lambda z: k.jac(z)[..., 0, 0], 0.5, np.array([[0.5]]))[0]
        assert abs(val - np.sqrt(12.0)) <= 1e-9

    def test_integer_power(self):
        val = branch_power(lambda z: 1 - z[..., 0], 2, np.array([[0.5]]))[0]
        assert val == pytest.approx(0.25, abs=1e-15)

    def test_winds_past_principal_branch(self):
        # g(z) = exp(5 i z) has log 5 i z, far from the principal value at z = 0.9
        g = lambda z: np.exp(5j * z[..., 0])
        assert continuous_log(g, np.array([[0.9]]))[0] == pytest.approx(4.5j, abs=1e-12)

    @given(disk_pts)
    @settings(max_examples=50, deadline=None)
    def test_unwrap_matches_quadrature(self, z):
        k = cat.koebe()
        g = lambda p: k.jac(p)[..., 0, 0]
        a = continuous_log(g, np.array([[z]]))
        b = continuous_log(g, np.array([[z]]), method="quad")
        assert abs(a[0] - b[0]) <= 1e-9

    def test_zero_on_path(self):
        with pytest.raises(ZeroOnPathError):
            continuous_log(lambda z: z[..., 0] - 0.3, np.array([[0.6]]))

    def test_tracker(self):
        t = BranchTracker(lambda z: 1 + z[..., 0])
        assert t.power(0.5, np.array([[0.44]]))[0] == pytest.approx(1.2)

    def test_principal_anchor_ignores_zero_sign(self):
        g = lambda z: np.full(z.shape[:-1], complex(-1.0, -0.0))
        assert continuous_log(g, np.array([[0.2]]))[0] == pytest.approx(1j * np.pi)

    def test_anchor_override(self):
        g = lambda z: np.full(z.shape[:-1], -1.0 + 0j)
        assert continuous_log(g, np.array([[0.2]]), log0=-1j * np.pi)[0] == pytest.approx(-1j * np.pi)


class TestInvert:
    def test_flip(self):
        assert invert(cat.flip(), 0.5) == pytest.approx(0.5)

    def test_identity(self):
        assert invert(cat.identity(1), 0.2 + 0.1j) == pytest.approx(0.2 + 0.1j)

    def test_koebe(self):
        assert invert(cat.koebe(), 2.0) == pytest.approx(0.5, abs=1e-12)

    def test_koebe_without_hint(self):
        assert invert(strip_image(cat.koebe()), 2.0) == pytest.approx(0.5, abs=1e-12)

    def test_not_found(self):
        with pytest.raises(NotFoundError):
            invert(cat.flip(), 2.5)

    def test_ambiguity(self):
        sq = scalar_map(lambda z: z * z, lambda z: 2 * z, "square")
        with pytest.raises(AmbiguityError):
            invert(sq, 0.25)

    @given(st.builds(lambda r, a: r * np.exp(1j * a), st.floats(1e-3, 0.95), st.floats(0, 2 * np.pi)))
    @settings(max_examples=40, deadline=None)
    def test_koebe_roots_oracle(self, z):
        # preimage oracle: the root in the disk of w (1 - z)^2 - z = 0
        k = strip_image(cat.koebe())
        w = complex(cat.koebe()(z))
        roots = np.roots([w, -(2 * w + 1), w])
        inside = roots[np.abs(roots) < 1]
        got = invert(k, w)
        assert abs(got - inside[np.argmin(np.abs(inside - z))]) <= 1e-8 * max(1, abs(w))

    def test_two_dimensional(self):
        f = cat.ball_map(np.array([[0.5, 0.1], [0.0, 0.6]]))
        z = np.array([[0.2 + 0.1j, -0.3j]])
        back, status = invert_many(f, f.func(z))
        assert status[0] == FOUND and np.allclose(back, z, atol=1e-12)

    def test_inverse_map(self):
        kinv = inverse_map(cat.koebe())
        assert kinv(2.0) == pytest.approx(0.5)
        assert np.isnan(kinv(-0.5))


class TestMembership:
    def test_flip_inside(self):
        assert image_contains(cat.flip(), 0.5).label() == "inside"

    def test_flip_outside(self):
        assert image_contains(cat.flip(), 2.5).label() == "outside"

    def test_koebe_slit_outside(self):
        assert image_contains(cat.koebe(), -0.5).label() == "outside"

    def test_koebe_slit_argument_principle_oracle(self):
        # the winding number of k(rho e^{i theta}) + 0.5 is 0 on every circle
        for rho in RHO_LADDER:
            wn, dist, resolved = winding_number(cat.koebe(), -0.5, rho)
            assert resolved and wn == 0 and dist > 0

    def test_argument_principle_inside(self):
        state, margin = argument_principle(cat.koebe(), 2.0)
        assert state == INSIDE

    def test_argument_principle_far_outside(self):
        state, margin = argument_principle(cat.flip(), 5.0)
        assert state == OUTSIDE and margin < 0

    def test_bare_flip_agrees_with_descriptor(self):
        f = cat.flip()
        bare = strip_image(f)
        w = 1 + 1.6 * np.exp(1j * np.linspace(0, 6, 13)) * np.linspace(0.1, 1.0, 13)
        exact = image_contains_many(f, w[:, None]).state
        got = image_contains_many(bare, w[:, None]).state
        decided = got != UNKNOWN
        assert decided.mean() >= 0.8
        assert np.array_equal(got[decided], exact[decided])

    def test_preimage_returned(self):
        mem = image_contains_many(cat.koebe(), np.array([[2.0]]))
        assert mem.preimage[0, 0] == pytest.approx(0.5)
