"""Extension operators Phi[h](x, y) = (h(x), Gamma(h, x) y) on product balls."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotFoundError, PreconditionError
from .gamma import GammaSpec, JacobianPower, RatioPower, gamma_log
from .geometry import ProductPoint, SpacePair, ball_contains, sample_product_ball
from .holo.inversion import FOUND, INSIDE, OUTSIDE, UNKNOWN, Membership, image_contains_many, invert_many
from .holo.maps import HoloMap, compose
from .report import CheckReport, combine, from_margins

DGAMMA_STEP = 1e-5


def _as_point(pt, n: int) -> ProductPoint:
    if isinstance(pt, ProductPoint):
        return ProductPoint.of(pt.x, pt.y)
    return ProductPoint.split(pt, n)


@dataclass(frozen=True, eq=False)
class ExtendedMap:
    """The map (x, y) -> (base(x), Gamma(base, x) y) on Z = C^n x C^m."""

    base: HoloMap
    gamma: GammaSpec
    space: SpacePair
    name: str = ""

    def __post_init__(self):
        if self.base.dim != self.space.n:
            raise PreconditionError(f"base map has dimension {self.base.dim}, space expects n={self.space.n}")
        if not self.name:
            object.__setattr__(self, "name", f"Φ[{self.base.name}]")

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def m(self) -> int:
        return self.space.m

    def scalar(self, x) -> np.ndarray:
        """Gamma(base, x) for points x of shape (..., n)."""
        return np.exp(gamma_log(self.gamma, self.base, np.asarray(x, dtype=complex)))

    def __call__(self, pt) -> ProductPoint:
        pt = _as_point(pt, self.n)
        x = np.asarray(pt.x, dtype=complex)
        self.base.check_domain(x)
        c = self.scalar(x)
        return ProductPoint(self.base.func(x), c[..., None] * pt.y)

    def stacked(self, v):
        return self(ProductPoint.split(v, self.n)).stack()

    def dgamma(self, x, step: float = DGAMMA_STEP) -> np.ndarray:
        """Complex gradient of Gamma(base, .) at x, shape (..., n), by central differences."""
        x = np.asarray(x, dtype=complex)
        cols = []
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = step
            cols.append((self.scalar(x + e) - self.scalar(x - e)) / (2 * step))
        return np.stack(cols, axis=-1)

    def jacobian(self, pt) -> np.ndarray:
        """Block Jacobian [[J_h, 0], [y dGamma, Gamma I]] of shape (..., n+m, n+m)."""
        pt = _as_point(pt, self.n)
        x = np.asarray(pt.x, dtype=complex)
        y = np.asarray(pt.y, dtype=complex)
        n, m = self.n, self.m
        lead = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
        out = np.zeros(lead + (n + m, n + m), dtype=complex)
        out[..., :n, :n] = self.base.jac(x)
        out[..., n:, :n] = y[..., :, None] * self.dgamma(x)[..., None, :]
        c = self.scalar(x)
        idx = np.arange(n, n + m)
        out[..., idx, idx] = c[..., None]
        return out

    def as_holomap(self) -> HoloMap:
        """The extension as a HoloMap on C^(n+m), without a domain check."""
        return HoloMap(self.stacked, self.n + self.m, lambda v: self.jacobian(ProductPoint.split(v, self.n)),
                       self.name, None, None, None, False, {"extended": self})

    def inverse(self, pt) -> ProductPoint:
        return extended_inverse(self, pt)

    def membership(self, pt) -> Membership:
        return extended_membership_many(self, pt)


def extend(gamma: GammaSpec, f: HoloMap, space: Optional[SpacePair] = None) -> ExtendedMap:
    """Build Phi[f] for the given Gamma; preconditions of Gamma are checked at x = 0."""
    space = space or SpacePair.power(f.dim, 1)
    em = ExtendedMap(f, gamma, space)
    em.scalar(np.zeros((1, f.dim), dtype=complex))
    return em


def classic(kind: str, f: HoloMap, param: Optional[float] = None, m: int = 1) -> ExtendedMap:
    """Classical operators on the Euclidean ball of C^(n+m).

    ``"RS"``: Gamma = f'(x)^(1/2); ``"GKK"``: f'(x)^alpha with alpha in
    [0, 1/2]; ``"PS"``: det J_f(x)^(1/(n+1)) for n-dimensional f;
    ``"GK"``: (f(x)/x)^beta with beta in [0, 1].
    """
    kind = kind.upper()
    if kind in ("RS", "GKK", "GK") and f.dim != 1:
        raise PreconditionError(f"{kind} extends maps of one variable")
    if kind == "RS":
        gamma = JacobianPower(0.5)
    elif kind == "GKK":
        alpha = 0.5 if param is None else float(param)
        if not 0 <= alpha <= 0.5:
            raise PreconditionError(f"GKK parameter alpha must lie in [0, 1/2], got {alpha}")
        gamma = JacobianPower(alpha)
    elif kind == "PS":
        gamma = JacobianPower(1.0 / (f.dim + 1))
    elif kind == "GK":
        beta = 1.0 if param is None else float(param)
        if not 0 <= beta <= 1:
            raise PreconditionError(f"GK parameter beta must lie in [0, 1], got {beta}")
        gamma = RatioPower(beta)
    else:
        raise PreconditionError(f"unknown classical operator {kind!r}")
    space = SpacePair.power(f.dim, m, 2.0, 2.0)
    em = extend(gamma, f, space)
    object.__setattr__(em, "name", f"{kind}[{f.name}]")
    return em


def extended_inverse(em: ExtendedMap, pt, extra_seeds=None) -> ProductPoint:
    """(h^{-1}(z), w / Gamma(h, h^{-1}(z))); raises NotFoundError off the image of h."""
    pt = _as_point(pt, em.n)
    z = np.asarray(pt.x, dtype=complex)
    lead = z.shape[:-1]
    x, status = invert_many(em.base, z.reshape(-1, em.n), extra_seeds=extra_seeds)
    if np.any(status != FOUND):
        raise NotFoundError("first coordinate has no unique preimage under the base map")
    x = x.reshape(lead + (em.n,))
    return ProductPoint(x, pt.y / em.scalar(x)[..., None])


def extended_membership_many(em: ExtendedMap, pt, extra_seeds=None) -> Membership:
    """Membership in Phi[h](D) via the inverse formula.

    Inside iff the base oracle finds a preimage x of z and
    ``||w / Gamma(h, x)|| < p(||x||)``.  The margin is
    ``p(||x||) - ||w / Gamma(h, x)||`` for points over the image of h, the
    base margin otherwise, and NaN when undecided.  ``preimage`` stacks
    (x, y) along the last axis.
    """
    pt = _as_point(pt, em.n)
    lead = np.broadcast_shapes(pt.x.shape[:-1], pt.y.shape[:-1])
    z = np.broadcast_to(pt.x, lead + (em.n,)).reshape(-1, em.n)
    w = np.broadcast_to(pt.y, lead + (em.m,)).reshape(-1, em.m)
    base = image_contains_many(em.base, z, extra_seeds=extra_seeds)
    state = base.state.copy()
    margin = np.where(base.state == OUTSIDE, base.margin, np.nan)
    pre = np.full((len(z), em.n + em.m), np.nan, dtype=complex)
    ok = (base.state == INSIDE) & np.all(np.isfinite(base.preimage), axis=-1)
    state[(base.state == INSIDE) & ~ok] = UNKNOWN
    if np.any(ok):
        x = base.preimage[ok]
        y = w[ok] / em.scalar(x)[..., None]
        pp = ProductPoint(x, y)
        mm = ball_contains(em.space, pp)
        margin[ok] = mm
        state[ok] = np.where(mm > 0, INSIDE, OUTSIDE)
        pre[ok] = pp.stack()
    return Membership(state, margin, pre)


def extended_membership(em: ExtendedMap, pt) -> Membership:
    """Single-point membership in Phi[h](D)."""
    pt = _as_point(pt, em.n)
    return extended_membership_many(em, ProductPoint(np.asarray(pt.x).reshape(1, em.n),
                                                     np.asarray(pt.y).reshape(1, em.m)))


def _deviation(a: ProductPoint, b: ProductPoint):
    da = a.stack() - b.stack()
    return np.linalg.norm(da, axis=-1) / np.maximum(1.0, np.linalg.norm(b.stack(), axis=-1))


def check_selfmapping(em: ExtendedMap, samples: int = 10_000, seed: int = 0, tol: float = 1e-12) -> CheckReport:
    """Sampled check that the extension maps the product ball into itself."""
    pts = sample_product_ball(em.space, samples, seed)
    out = em(pts)
    margins = ball_contains(em.space, out)
    return from_margins("self-mapping", margins, pts.stack(), tol=tol,
                        params={"map": em.name, "gamma": em.gamma.describe(), "samples": samples, "tol": tol})


def check_composition_laws(hat: GammaSpec, spec: GammaSpec, f: HoloMap, g: HoloMap,
                           h: Optional[HoloMap], space: SpacePair, samples: int = 1000,
                           seed: int = 0, tol: float = 1e-9) -> CheckReport:
    """Deviations in the laws Phi-hat[f o g] = Phi-hat[f] o Phi-hat[g] and Phi[h o g] = Phi[h] o Phi-hat[g].

    Deviations are scaled by max(1, |reference|).
    """
    pts = sample_product_ball(space, samples, seed)
    parts = {}
    ef, eg = ExtendedMap(f, hat, space), ExtendedMap(g, hat, space)
    lhs = ExtendedMap(compose(f, g), hat, space)(pts)
    parts["selfmap-composition"] = from_margins("selfmap-composition", -_deviation(ef(eg(pts)), lhs),
                                                pts.stack(), tol=tol, params={"tol": tol})
    if h is not None:
        eh = ExtendedMap(h, spec, space)
        lhs = ExtendedMap(compose(h, g), spec, space)(pts)
        parts["biholo-composition"] = from_margins("biholo-composition", -_deviation(eh(eg(pts)), lhs),
                                                   pts.stack(), tol=tol, params={"tol": tol})
    return combine("composition-laws", parts, params={
        "gamma_hat": hat.describe(), "gamma": spec.describe(), "f": f.name, "g": g.name,
        "h": None if h is None else h.name, "samples": samples, "seed": seed})


def check_inverse_roundtrip(em: ExtendedMap, samples: int = 1000, seed: int = 0,
                            tol: float = 1e-8, radii=None) -> CheckReport:
    """extended_inverse(em(pt)) = pt on interior samples."""
    pts = sample_product_ball(em.space, samples, seed, radii=radii)
    back = extended_inverse(em, em(pts))
    return from_margins("inverse-roundtrip", -_deviation(back, pts), pts.stack(), tol=tol,
                        params={"map": em.name, "samples": samples, "tol": tol})
