"""Scalar operator-valued mappings Gamma(h, x) = c(h, x) id_Y.

Every variant is a power ``g(x)**e`` of a zero-free scalar function built
from ``h``; the power is continued radially from the principal value at
``x = 0``.  :class:`Product` multiplies variants.  Families of maps on which
the appropriateness axioms are checked live here as well.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import PreconditionError, ZeroOnPathError
from .geometry import SpacePair, sample_ball
from .holo import catalog as cat
from .holo.branch import continuous_log
from .holo.inversion import FOUND, invert_many
from .holo.maps import HoloMap, compose, diagonal, linear_map, scalar_map
from .report import CheckReport, combine, from_margins

ZERO_TOL = 1e-12
SMALL_X = 1e-7


def _inner(a, tau):
    """<a, tau> = sum a_j conj(tau_j) over the last axis."""
    return np.sum(a * np.conj(tau), axis=-1)


def _tau(tau, n):
    t = np.atleast_1d(np.asarray(tau, dtype=complex))
    if t.shape != (n,):
        if t.size == 1:
            t = np.concatenate([t, np.zeros(n - 1, dtype=complex)])
        else:
            raise PreconditionError(f"direction tau must have {n} entries")
    if abs(np.linalg.norm(t) - 1) > 1e-12:
        raise PreconditionError("direction tau must be a unit vector")
    return t


class GammaSpec:
    """Base class for scalar Gamma variants.

    A variant lists its factors through ``terms(h)``: pairs ``(g, e)`` with
    ``g`` zero-free on the ball, so that Gamma(h, x) = prod g(x)**e.  Each
    factor is continued along [0, x] from an anchor logarithm of g(0),
    the principal one unless ``anchors`` says otherwise.
    """

    kind = "gamma"

    def terms(self, h: HoloMap) -> list:
        raise NotImplementedError

    def log_value(self, h: HoloMap, x: np.ndarray, anchors=None) -> np.ndarray:
        out = np.zeros(x.shape[:-1], dtype=complex)
        for k, (g, e) in enumerate(self.terms(h)):
            log0 = None if anchors is None else anchors[k]
            out = out + e * continuous_log(g, x, log0=log0)
        return out

    def anchor_values(self, h: HoloMap) -> np.ndarray:
        """g(0) for every factor, in the order of ``terms``."""
        z0 = np.zeros((1, h.dim), dtype=complex)
        return np.array([complex(np.asarray(g(z0))[0]) for g, _ in self.terms(h)])

    def describe(self) -> dict:
        return {"kind": self.kind}

    def __mul__(self, other: "GammaSpec") -> "Product":
        left = self.parts if isinstance(self, Product) else (self,)
        right = other.parts if isinstance(other, Product) else (other,)
        return Product(tuple(left) + tuple(right))


@dataclass(frozen=True)
class JacobianPower(GammaSpec):
    """(det J_h(x))**alpha."""

    alpha: float
    kind = "jacobian-power"

    def terms(self, h):
        return [] if self.alpha == 0 else [(h.jacdet, self.alpha)]

    def describe(self):
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class RatioPower(GammaSpec):
    """(h(x)/x)**beta in one variable; equal to h'(0)**beta at x = 0."""

    beta: float
    kind = "ratio-power"

    def terms(self, h):
        if h.dim != 1:
            raise PreconditionError("ratio power is defined for one-dimensional maps only")
        h0 = complex(h.func(np.zeros((1, 1), dtype=complex))[0, 0])
        if abs(h0) > ZERO_TOL:
            raise PreconditionError("ratio power needs h(0) = 0")
        if self.beta == 0:
            return []

        def g(z):
            z = np.asarray(z, dtype=complex)
            small = np.abs(z[..., 0]) < SMALL_X
            safe = np.where(small[..., None], SMALL_X, z)
            ratio = h.func(safe)[..., 0] / safe[..., 0]
            # h(z)/z = h'(z/2) + O(z^2) near the removable singularity
            near = h.jac(0.5 * z)[..., 0, 0]
            return np.where(small, near, ratio)

        return [(g, self.beta)]

    def describe(self):
        return {"kind": self.kind, "beta": self.beta}


@dataclass(frozen=True)
class BoundaryRatioSelf(GammaSpec):
    """((1 - <h(x), tau>) / (1 - <x, tau>))**(2/r) for self-maps fixing tau."""

    tau: tuple = (1.0,)
    r: float = 2.0
    kind = "boundary-ratio-self"

    def terms(self, h):
        t = _tau(self.tau, h.dim)

        def g(z):
            return (1 - _inner(h.func(z), t)) / (1 - _inner(z, t))

        return [(g, 2.0 / self.r)]

    def describe(self):
        return {"kind": self.kind, "tau": list(np.atleast_1d(self.tau)), "r": self.r}


@dataclass(frozen=True)
class BoundaryRatioBiholo(GammaSpec):
    """(<h(x), tau> / (1 - <x, tau>))**(2/r) for maps with <h(x), tau> != 0."""

    tau: tuple = (1.0,)
    r: float = 2.0
    kind = "boundary-ratio-biholo"

    def terms(self, h):
        t = _tau(self.tau, h.dim)

        def g(z):
            return _inner(h.func(z), t) / (1 - _inner(z, t))

        return [(g, 2.0 / self.r)]

    def log_value(self, h, x, anchors=None):
        t = _tau(self.tau, h.dim)
        ends = np.concatenate([np.zeros((1, h.dim), dtype=complex), x.reshape(-1, h.dim)])
        if np.any(np.abs(_inner(h.func(ends), t)) < ZERO_TOL):
            raise PreconditionError("<h(x), tau> vanishes; the boundary ratio needs it nonzero")
        try:
            return super().log_value(h, x, anchors)
        except ZeroOnPathError as exc:
            raise PreconditionError(f"<h(x), tau> vanishes on the path: {exc}") from None

    def describe(self):
        return {"kind": self.kind, "tau": list(np.atleast_1d(self.tau)), "r": self.r}


@dataclass(frozen=True)
class Product(GammaSpec):
    """Pointwise product of scalar variants."""

    parts: tuple = ()
    kind = "product"

    def terms(self, h):
        return [t for p in self.parts for t in p.terms(h)]

    def log_value(self, h, x, anchors=None):
        out = np.zeros(x.shape[:-1], dtype=complex)
        k = 0
        for p in self.parts:
            n_terms = len(p.terms(h))
            out = out + p.log_value(h, x, None if anchors is None else anchors[k:k + n_terms])
            k += n_terms
        return out

    def describe(self):
        return {"kind": self.kind, "parts": [p.describe() for p in self.parts]}


GAMMA_VARIANTS = {
    "jacobian-power": (JacobianPower, {"alpha": "real"}),
    "ratio-power": (RatioPower, {"beta": "real, one-dimensional maps with h(0) = 0"}),
    "boundary-ratio-self": (BoundaryRatioSelf, {"tau": "unit vector", "r": "real >= 1"}),
    "boundary-ratio-biholo": (BoundaryRatioBiholo, {"tau": "unit vector", "r": "real >= 1"}),
    "product": (Product, {"parts": "list of gamma specs"}),
}


def gamma_from_dict(d: dict) -> GammaSpec:
    """Build a spec from its ``describe()`` form."""
    kind = d.get("kind")
    if kind == "product":
        return Product(tuple(gamma_from_dict(p) for p in d["parts"]))
    if kind == "jacobian-power":
        return JacobianPower(float(d["alpha"]))
    if kind == "ratio-power":
        return RatioPower(float(d["beta"]))
    if kind in ("boundary-ratio-self", "boundary-ratio-biholo"):
        cls = BoundaryRatioSelf if kind == "boundary-ratio-self" else BoundaryRatioBiholo
        tau = d.get("tau", [1.0])
        tau = tuple(complex(*t) if isinstance(t, (list, tuple)) else complex(t) for t in tau)
        return cls(tau, float(d.get("r", 2.0)))
    raise PreconditionError(f"unknown gamma variant {kind!r}")


def gamma_log(spec: GammaSpec, h: HoloMap, x, anchors=None) -> np.ndarray:
    """Branch-continuous log of Gamma(h, x); see :meth:`GammaSpec.log_value`."""
    pts, _ = h._points(x)
    h.check_domain(pts)
    return spec.log_value(h, pts, anchors)


def continued_anchors(spec: GammaSpec, family: Callable[[float], HoloMap], t: float,
                      nodes: int = 16, max_nodes: int = 1 << 12) -> np.ndarray:
    """Logs of the factor values g(0) for family(t), continued in s from s = 0.

    ``family(0)`` should be a map whose principal anchors are the intended
    ones (typically the identity).  This keeps Gamma(F_t, x) continuous in t
    for a semigroup F_t, which the principal anchor alone does not.
    """
    k = nodes
    while True:
        s = np.linspace(0.0, t, k + 1)
        vals = np.stack([spec.anchor_values(family(si)) for si in s])
        if np.any(np.abs(vals) < ZERO_TOL):
            raise ZeroOnPathError("a factor of Gamma vanishes at x = 0 along the family")
        inc = np.angle(vals[1:] / vals[:-1])
        if np.max(np.abs(inc), initial=0.0) <= 0.5:
            break
        k *= 4
        if k > max_nodes:
            raise ZeroOnPathError("anchor continuation in t did not resolve")
    theta = np.angle(vals[0] + 0j) + inc.sum(axis=0)
    return np.log(np.abs(vals[-1])) + 1j * theta


def gamma_eval(spec: GammaSpec, h: HoloMap, x):
    """The scalar c with Gamma(h, x) = c id_Y, for one point or a batch.

    For one-dimensional maps ``x`` may be a complex scalar or an array of
    scalars; otherwise the last axis holds coordinates.
    """
    val = np.exp(gamma_log(spec, h, x))
    return complex(val) if np.ndim(val) == 0 else val


# ---------------------------------------------------------------------------
# families of maps


def affine_contraction(s: float) -> HoloMap:
    """1 - s (1 - z): a self-map of the disk fixing the boundary point 1."""
    if not 0 < s <= 1:
        raise PreconditionError("affine contraction needs s in (0, 1]")
    return scalar_map(lambda z: 1 - s * (1 - z), lambda z: np.full_like(z, s), f"affine({s:g})",
                      inverse=lambda w: 1 - (1 - w) / s, entire=True, param=s)


def rs_selfmap(c: float) -> HoloMap:
    """(f(z1), sqrt(f'(z1)) z2) for f the Mobius contraction; a self-map of the 2-ball."""
    f = cat.mobius_contraction(c)
    root = np.sqrt(1 - c)

    def func(z):
        z1, z2 = z[..., 0], z[..., 1]
        return np.stack([(1 - c) * z1 / (1 - c * z1), root * z2 / (1 - c * z1)], axis=-1)

    def jac(z):
        z1, z2 = z[..., 0], z[..., 1]
        out = np.zeros(z.shape[:-1] + (2, 2), dtype=complex)
        out[..., 0, 0] = (1 - c) / (1 - c * z1) ** 2
        out[..., 1, 0] = root * c * z2 / (1 - c * z1) ** 2
        out[..., 1, 1] = root / (1 - c * z1)
        return out

    return HoloMap(func, 2, jac, f"rs-selfmap({c:g})", meta={"base": f})


def square_flip() -> HoloMap:
    """(1 - z)**2, biholomorphic on the disk with 0 on the boundary of the image."""
    return scalar_map(lambda z: (1 - z) ** 2, lambda z: -2 * (1 - z), "flip²",
                      inverse=lambda w: 1 - np.sqrt(w), entire=True)


@dataclass(frozen=True)
class MapFamily:
    """A labelled family of maps of the unit ball of C^dim with sample members."""

    label: str
    dim: int
    members: tuple
    predicate: Callable[[HoloMap], bool]
    tau: Optional[tuple] = None
    notes: tuple = ()

    def pairs(self, limit: Optional[int] = None):
        """Ordered pairs (f, g) of distinct members, in a fixed order."""
        out = [(f, g) for i, f in enumerate(self.members) for j, g in enumerate(self.members) if i != j]
        return out if limit is None else out[:limit]

    def check_members(self) -> list:
        return [f.name for f in self.members if not self.predicate(f)]


def _probe_points(dim, count=400, seed=7):
    return sample_ball(dim, count, seed, radii=np.linspace(0.05, 0.99, 12))


def _is_selfmap(f: HoloMap) -> bool:
    z = _probe_points(f.dim)
    return bool(np.all(np.linalg.norm(f.func(z), axis=-1) < 1))


def _fixes_zero(f: HoloMap) -> bool:
    return bool(np.linalg.norm(f.func(np.zeros((1, f.dim), dtype=complex))) < 1e-12)


def _radial_limit(f: HoloMap, tau, rho=(0.999, 0.99999, 0.9999999)):
    """Numerical probe of lim f(rho tau) as rho -> 1; returns the last value and the spread."""
    t = np.asarray(tau, dtype=complex)
    vals = f.func(np.asarray(rho)[:, None] * t[None])
    return vals[-1], float(np.linalg.norm(vals[-1] - vals[-2]))


def selfmaps_fixing_zero(n: int = 1) -> MapFamily:
    if n == 1:
        members = (cat.identity(1), cat.rotation(0.7), cat.dilation(0.8), cat.dilation(0.6 * np.exp(0.4j)),
                   cat.mobius_contraction(0.3), cat.halving(), cat.mobius_contraction(0.8),
                   compose(cat.rotation(-0.5), cat.mobius_contraction(0.6)).with_name("rot∘contr"))
    elif n == 2:
        theta = 0.6
        u = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]) * np.exp(0.3j)
        members = (cat.identity(2), cat.unitary(u),
                   diagonal(cat.mobius_contraction(0.3), cat.rotation(0.5)),
                   diagonal(cat.dilation(0.8), cat.halving()),
                   linear_map([[0.5, 0.2], [0.0, 0.6]], name="linear-contraction"),
                   rs_selfmap(0.4), rs_selfmap(0.7))
    else:
        members = (cat.identity(n), linear_map(0.5 * np.eye(n), name="half"))

    def pred(f):
        return f.dim == n and _fixes_zero(f) and _is_selfmap(f)

    return MapFamily("self-maps-fixing-0", n, members, pred)


def selfmaps_fixing_boundary(tau=(1.0,)) -> MapFamily:
    """One-dimensional self-maps with boundary fixed point 1 and angular derivative <= 1."""
    members = (cat.identity(1), cat.hyperbolic_automorphism(0.3), cat.hyperbolic_automorphism(0.7),
               affine_contraction(0.5), affine_contraction(0.9),
               compose(cat.hyperbolic_automorphism(0.4), affine_contraction(0.8)).with_name("hyp∘affine"))

    def pred(f):
        lim, spread = _radial_limit(f, tau)
        return f.dim == 1 and _is_selfmap(f) and abs(lim[0] - 1) < 1e-5 and spread < 1e-4

    return MapFamily("self-maps-fixing-tau-boundary", 1, members, pred, tuple(tau),
                     ("boundary fixed point detected by a radial-limit probe, not proven",))


def biholomorphic_normalized() -> MapFamily:
    members = (cat.identity(1), cat.koebe(), cat.cayley(), cat.log_map())

    def pred(f):
        z0 = np.zeros((1, f.dim), dtype=complex)
        return _fixes_zero(f) and np.allclose(f.jac(z0)[0], np.eye(f.dim), atol=1e-10)

    return MapFamily("biholomorphic-normalized", 1, members, pred)


def biholomorphic_boundary(tau=(1.0,)) -> MapFamily:
    members = (cat.flip(), cat.right_half_plane(), square_flip())

    def pred(f):
        z = _probe_points(1)
        lim, _ = _radial_limit(f, tau)
        return bool(np.all(np.abs(f.func(z)[..., 0]) > 0)) and abs(lim[0]) < 1e-3

    return MapFamily("biholomorphic-boundary-tau", 1, members, pred, tuple(tau))


FAMILIES = {
    "self-maps-fixing-0": selfmaps_fixing_zero,
    "self-maps-fixing-tau-boundary": selfmaps_fixing_boundary,
    "biholomorphic-normalized": biholomorphic_normalized,
    "biholomorphic-boundary-tau": biholomorphic_boundary,
}


# ---------------------------------------------------------------------------
# appropriateness checks


def _relative_dev(a, b):
    return np.abs(a - b) / np.maximum(1.0, np.abs(b))


def check_appropriate_selfmap(spec: GammaSpec, family: MapFamily, space: SpacePair,
                              samples: int = 1000, seed: int = 0, pair_limit: int = 10,
                              chain_tol: float = 1e-9, bound_tol: float = 1e-12) -> CheckReport:
    """Sampled check of the four axioms for a Gamma-hat on self-maps.

    (i) Gamma(id, x) = 1; (ii) chain rule Gamma(f, g(x)) Gamma(g, x) =
    Gamma(f o g, x) on member pairs; (iii) |Gamma| > 1e-12; (iv)
    |Gamma(f, x)| <= p(||f(x)||) / p(||x||) with the space's profile.
    """
    n = family.dim
    x = sample_ball(n, samples, seed)
    p = space.profile._raw
    ident = cat.identity(n)
    parts = {}

    dev = np.abs(gamma_eval(spec, ident, x) - 1.0)
    parts["identity"] = from_margins("identity", -dev, x, tol=chain_tol, params={"tol": chain_tol})

    margins_ii = []
    for f, g in family.pairs(pair_limit):
        lhs = np.exp(gamma_log(spec, f, g.func(x)) + gamma_log(spec, g, x))
        rhs = np.exp(gamma_log(spec, compose(f, g), x))
        margins_ii.append(-_relative_dev(lhs, rhs))
    mii = np.stack(margins_ii, axis=1) if margins_ii else np.zeros((len(x), 0))
    parts["chain-rule"] = from_margins("chain-rule", mii, x, tol=chain_tol, params={"tol": chain_tol})

    m3, m4 = [], []
    for f in family.members:
        val = np.abs(gamma_eval(spec, f, x))
        m3.append(val - ZERO_TOL)
        nx = np.linalg.norm(x, axis=-1)
        nf = np.linalg.norm(f.func(x), axis=-1)
        m4.append(p(np.minimum(nf, 1.0)) / p(nx) - val)
    parts["nonvanishing"] = from_margins("nonvanishing", np.stack(m3, 1), x, tol=0.0, params={"tol": 0.0})
    parts["norm-bound"] = from_margins("norm-bound", np.stack(m4, 1), x, tol=bound_tol,
                                       params={"tol": bound_tol})
    bad = family.check_members()
    notes = list(family.notes)
    if bad:
        notes.append(f"members failing the family predicate: {bad}")
    return combine("appropriate-selfmap", parts, params={
        "gamma": spec.describe(), "family": family.label, "n": n, "samples": samples, "seed": seed,
        "q": space.profile.q, "r": space.profile.r}, notes=notes)


def check_appropriate_biholo(hat: GammaSpec, spec: GammaSpec, family: MapFamily, selfmaps: MapFamily,
                             samples: int = 1000, seed: int = 0, nesting: Sequence = (),
                             chain_tol: float = 1e-9) -> CheckReport:
    """Sampled check of the axioms tying Gamma on biholomorphic maps to Gamma-hat.

    (i) for each certificate ``(h1, h2)`` claiming h1(ball) inside h2(ball),
    ||h2^{-1}(h1(z))|| < 1 on samples; (ii) Gamma(h, g(x)) Gamma-hat(g, x) =
    Gamma(h o g, x) for h in ``family`` and g in ``selfmaps``; (iii)
    Gamma(h, x) does not vanish.
    """
    n = family.dim
    x = sample_ball(n, samples, seed)
    parts = {}
    notes = ["family closure is checked only on supplied nesting certificates"]

    if nesting:
        mi = []
        for h1, h2 in nesting:
            z, status = invert_many(h2, h1.func(x))
            radius = np.linalg.norm(z, axis=-1)
            mi.append(np.where(status == FOUND, 1.0 - radius, np.nan))
        parts["nesting"] = from_margins("nesting", np.stack(mi, 1), x, tol=0.0, params={"tol": 0.0})

    m2, m3 = [], []
    for h in family.members:
        m3.append(np.abs(gamma_eval(spec, h, x)) - ZERO_TOL)
        for g in selfmaps.members:
            lhs = np.exp(gamma_log(spec, h, g.func(x)) + gamma_log(hat, g, x))
            rhs = np.exp(gamma_log(spec, compose(h, g), x))
            m2.append(-_relative_dev(lhs, rhs))
    parts["chain-rule"] = from_margins("chain-rule", np.stack(m2, 1), x, tol=chain_tol,
                                       params={"tol": chain_tol})
    parts["nonvanishing"] = from_margins("nonvanishing", np.stack(m3, 1), x, tol=0.0, params={"tol": 0.0})
    return combine("appropriate-biholo", parts, params={
        "gamma_hat": hat.describe(), "gamma": spec.describe(), "family": family.label,
        "selfmaps": selfmaps.label, "samples": samples, "seed": seed}, notes=notes)


def gamma_omega(spec: GammaSpec, h: HoloMap, f: HoloMap, x, preimage=None):
    """Gamma transported to Omega = h(ball): Gamma(f o h, z) / Gamma(h, z) with z = h^{-1}(x).

    ``f`` is a map of Omega (for instance a linear flow map or h^{-1}).  A
    known preimage can be passed to skip the inversion.
    """
    pts, scalar = h._points(x)
    flat = pts.reshape(-1, h.dim)
    if preimage is None:
        z, status = invert_many(h, flat)
        if np.any(status != FOUND):
            from .errors import NotFoundError
            raise NotFoundError("point of Omega has no preimage under h")
    else:
        z = np.asarray(preimage, dtype=complex).reshape(-1, h.dim)
    if f.meta.get("inverse_of") is h:
        logv = -gamma_log(spec, h, z)
    else:
        logv = gamma_log(spec, compose(f, h), z) - gamma_log(spec, h, z)
    out = np.exp(logv).reshape(pts.shape[:-1])
    return complex(out) if out.ndim == 0 else out


def auxiliary_monotone(q: float, r: float, alpha: float, n: int, grid: int = 1000):
    """Values of (1 - t^2)^((n+1) alpha / 2) / (1 - t^q)^(1/r) on an open grid of (0, 1)."""
    t = np.linspace(0.0, 1.0, grid + 2)[1:-1]
    return t, (1 - t * t) ** ((n + 1) * alpha / 2) / (1 - t ** q) ** (1 / r)
