"""One-parameter semigroups of holomorphic maps and their extensions.

A flow object evaluates ``flow(t, z)`` for points of shape (..., dim) and
returns the time-t map as a :class:`HoloMap` through ``map_at(t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import PreconditionError
from .extension import ExtendedMap
from .gamma import GammaSpec, continued_anchors, gamma_log
from .geometry import ProductPoint, SpacePair, ball_contains, sample_product_ball
from .holo import catalog as cat
from .holo.inversion import FOUND, invert_many
from .holo.maps import HoloMap, compose, linear_map
from .linalg import LinearOperatorSpec, expm, matrix_exp
from .report import INCONCLUSIVE, PASS, CheckReport, combine, from_margins

INVERTIBLE_TOL = 1e-10
SERIES_TOL = 1e-14
T_SEQ = (1e-3, 1e-4, 1e-5)


class Flow:
    """Base class for t -> F_t."""

    dim: int = 1
    linear: bool = False

    def map_at(self, t: float) -> HoloMap:
        raise NotImplementedError

    def __call__(self, t: float, z):
        if t < 0:
            raise PreconditionError("semigroup time must be non-negative")
        return self.map_at(t).func(np.asarray(z, dtype=complex))

    def generator(self, z) -> Optional[np.ndarray]:
        """Closed-form generator where known, else None."""
        return None

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


@dataclass(frozen=True, eq=False)
class LinearFlow(Flow):
    """F_t(z) = e^{-tA} z."""

    op: LinearOperatorSpec
    linear = True

    def __post_init__(self):
        object.__setattr__(self, "op", LinearOperatorSpec.of(self.op))

    @property
    def dim(self):
        return self.op.dim

    def matrix(self, t: float) -> np.ndarray:
        return matrix_exp(self.op, t)

    def map_at(self, t):
        return linear_map(self.matrix(t), name=f"exp(-{t:g}A)")

    def generator(self, z):
        return np.asarray(z, dtype=complex) @ self.op.matrix.T

    def describe(self):
        return {"kind": "linear", "A": self.op.matrix}


@dataclass(frozen=True, eq=False)
class ContractionFlow(LinearFlow):
    """e^{-tB} on Y for accretive B; ||e^{-tB} y|| <= ||y|| needs a nonnegative Hermitian part."""

    def __post_init__(self):
        super().__post_init__()
        if not self.op.accretive():
            raise PreconditionError("contraction flow needs an accretive operator")

    def describe(self):
        return {"kind": "contraction", "B": self.op.matrix}


def affine_integral(a, t: float) -> np.ndarray:
    """I(t) = int_0^t e^{-sA} ds.

    Closed form A^{-1}(id - e^{-tA}) when every eigenvalue has modulus above
    1e-10, otherwise the series sum_k (-1)^k t^(k+1) A^k / (k+1)!.
    """
    op = LinearOperatorSpec.of(a)
    m = op.matrix
    n = op.dim
    if np.min(np.abs(op.eigenvalues)) > INVERTIBLE_TOL:
        return np.linalg.solve(m, np.eye(n) - matrix_exp(op, t))
    term = t * np.eye(n, dtype=complex)
    total = term.copy()
    for k in range(1, 2000):
        term = -term @ m * (t / (k + 1))
        total = total + term
        if np.linalg.norm(term) <= SERIES_TOL * max(1.0, np.linalg.norm(total)):
            break
    return total


def affine_integral_block(a, t: float) -> np.ndarray:
    """Cross-check of I(t) from the exponential of [[-A, I], [0, 0]]."""
    m = np.atleast_2d(np.asarray(LinearOperatorSpec.of(a).matrix))
    n = m.shape[0]
    big = np.zeros((2 * n, 2 * n), dtype=complex)
    big[:n, :n] = -m
    big[:n, n:] = np.eye(n)
    return expm(t * big)[:n, n:]


@dataclass(frozen=True, eq=False)
class AffineFlow(Flow):
    """Psi_t(z) = e^{-tA} z + lam I(t) tau."""

    op: LinearOperatorSpec
    lam: float = 0.0
    tau: tuple = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "op", LinearOperatorSpec.of(self.op))
        if self.lam < 0:
            raise PreconditionError("affine flow needs lam >= 0")
        t = np.atleast_1d(np.asarray(self.tau, dtype=complex))
        if t.shape != (self.op.dim,) or abs(np.linalg.norm(t) - 1) > 1e-12:
            raise PreconditionError("affine flow direction must be a unit vector of matching dimension")
        object.__setattr__(self, "tau", tuple(t))

    @property
    def dim(self):
        return self.op.dim

    @property
    def linear(self):
        return self.lam == 0

    def offset(self, t):
        return self.lam * affine_integral(self.op, t) @ np.asarray(self.tau)

    def map_at(self, t):
        return linear_map(matrix_exp(self.op, t), self.offset(t), name=f"Psi_{t:g}")

    def generator(self, z):
        return np.asarray(z, dtype=complex) @ self.op.matrix.T - self.lam * np.asarray(self.tau)

    def describe(self):
        return {"kind": "affine", "A": self.op.matrix, "lam": self.lam, "tau": list(self.tau)}


def affine_flow(flow: AffineFlow, t: float, z):
    return flow(t, z)


@dataclass(frozen=True, eq=False)
class IdentityFlow(Flow):
    dim: int = 1
    linear = True

    def map_at(self, t):
        return cat.identity(self.dim)

    def generator(self, z):
        return np.zeros_like(np.asarray(z, dtype=complex))

    def describe(self):
        return {"kind": "identity", "dim": self.dim}


@dataclass(frozen=True, eq=False)
class CatalogFlow(Flow):
    """A flow given by a factory t -> HoloMap and, optionally, its generator."""

    name: str
    factory: Callable[[float], HoloMap]
    gen: Optional[Callable] = None
    dim: int = 1

    def map_at(self, t):
        return self.factory(t)

    def generator(self, z):
        return None if self.gen is None else self.gen(np.asarray(z, dtype=complex))

    def describe(self):
        return {"kind": "catalog", "name": self.name}


def hyperbolic_flow() -> CatalogFlow:
    """(z + tanh(t/2)) / (1 + tanh(t/2) z): automorphisms with attracting boundary point 1."""
    return CatalogFlow("hyperbolic", lambda t: cat.hyperbolic_automorphism(math.tanh(t / 2)),
                       lambda z: -(1 - z * z) / 2)


def boundary_contraction_flow() -> CatalogFlow:
    """1 - e^{-t}(1 - z), the affine semigroup fixing the boundary point 1."""
    from .gamma import affine_contraction
    return CatalogFlow("boundary-contraction", lambda t: affine_contraction(math.exp(-t)),
                       lambda z: z - 1)


FLOW_CATALOG = {
    "hyperbolic": hyperbolic_flow,
    "boundary-contraction": boundary_contraction_flow,
}


@dataclass(frozen=True, eq=False)
class ConjugatedFlow(Flow):
    """F_t = h^{-1} o Psi_t o h for a biholomorphic h whose image Psi_t keeps invariant."""

    h: HoloMap
    inner: Flow

    @property
    def dim(self):
        return self.h.dim

    def map_at(self, t):
        h, psi = self.h, self.inner.map_at(t)

        def func(z):
            z = np.asarray(z, dtype=complex)
            flat = z.reshape(-1, h.dim)
            x, status = invert_many(h, psi.func(h.func(flat)), extra_seeds=flat[None])
            x = np.where((status == FOUND)[:, None], x, np.nan)
            return x.reshape(z.shape)

        def jac(z):
            fz = func(z)
            return np.linalg.solve(h.jac(fz), psi.jac(h.func(z)) @ h.jac(z))

        return HoloMap(func, h.dim, jac, f"{h.name}⁻¹∘Psi_{t:g}∘{h.name}")

    def generator(self, z):
        g = self.inner.generator(self.h.func(np.asarray(z, dtype=complex)))
        if g is None:
            return None
        return np.linalg.solve(self.h.jac(np.asarray(z, dtype=complex)), g[..., None])[..., 0]

    def describe(self):
        return {"kind": "conjugated", "h": self.h.name, "inner": self.inner.describe()}


@dataclass(frozen=True, eq=False)
class ExtendedFlow:
    """F~_t(x, y) = (F_t(x), Gamma-hat(F_t, x) G_t(y)) on the product ball."""

    base: Flow
    hat: GammaSpec
    g: Flow
    space: SpacePair
    _anchors: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.base.dim != self.space.n or self.g.dim != self.space.m:
            raise PreconditionError("flow dimensions do not match the product space")

    def anchors(self, t: float) -> np.ndarray:
        """Factor logs at x = 0 continued in time from F_0 = id."""
        if t not in self._anchors:
            self._anchors[t] = continued_anchors(self.hat, self.base.map_at, t)
        return self._anchors[t]

    def scalar(self, t: float, x) -> np.ndarray:
        """Gamma-hat(F_t, x), with the branch continuous in t as well as along [0, x]."""
        if t == 0:
            return np.ones(np.asarray(x).shape[:-1], dtype=complex)
        return np.exp(gamma_log(self.hat, self.base.map_at(t), np.asarray(x, dtype=complex),
                                anchors=self.anchors(t)))

    def __call__(self, t: float, pt) -> ProductPoint:
        if t < 0:
            raise PreconditionError("semigroup time must be non-negative")
        pt = pt if isinstance(pt, ProductPoint) else ProductPoint.split(pt, self.space.n)
        if t == 0:
            return ProductPoint(np.asarray(pt.x, dtype=complex), np.asarray(pt.y, dtype=complex))
        x = np.asarray(pt.x, dtype=complex)
        c = self.scalar(t, x)
        return ProductPoint(self.base(t, x), c[..., None] * self.g(t, pt.y))

    def describe(self):
        return {"base": self.base.describe(), "gamma_hat": self.hat.describe(), "G": self.g.describe()}


def extended_flow(ext: ExtendedFlow, t: float, pt) -> ProductPoint:
    return ext(t, pt)


def conjugate_extended_flow(h: HoloMap, spec: GammaSpec, psi: Flow, g: Flow, t: float, pt,
                            space: Optional[SpacePair] = None, preimage=None) -> ProductPoint:
    """Psi~_t(z, w) = (Psi_t(z), Gamma_Omega(Psi_t, z) G~_t(z, w)).

    G~_t(z, w) = Gamma(h, x) G_t(w / Gamma(h, x)) with x = h^{-1}(z); for a
    linear G this is G_t(w) and the shortcut is taken.
    """
    pt = pt if isinstance(pt, ProductPoint) else ProductPoint.split(pt, h.dim)
    z = np.asarray(pt.x, dtype=complex)
    w = np.asarray(pt.y, dtype=complex)
    flat = z.reshape(-1, h.dim)
    if preimage is None:
        x, status = invert_many(h, flat)
        if np.any(status != FOUND):
            from .errors import NotFoundError
            raise NotFoundError("first coordinate is not in the image of h")
    else:
        x = np.asarray(preimage, dtype=complex).reshape(-1, h.dim)
    if t == 0:
        return ProductPoint(z, w)
    psi_t = psi.map_at(t)
    log_h = gamma_log(spec, h, x)
    anchors = continued_anchors(spec, lambda s: compose(psi.map_at(s), h), t)
    log_omega = gamma_log(spec, compose(psi_t, h), x, anchors=anchors) - log_h
    lead = z.shape[:-1]
    omega = np.exp(log_omega).reshape(lead)
    if g.linear:
        gw = g(t, w)
    else:
        gh = np.exp(log_h).reshape(lead)[..., None]
        gw = gh * g(t, w / gh)
    return ProductPoint(psi_t.func(z), omega[..., None] * gw)


# ---------------------------------------------------------------------------
# generators


@dataclass
class GeneratorEstimate:
    """Difference quotients (pt - F_t pt)/t on a decreasing t ladder.

    ``limit`` is the Richardson extrapolation of the last two quotients;
    ``ratios`` holds successive error ratios against ``reference`` (or
    against ``limit`` when no reference was given).
    """

    t_seq: tuple
    quotients: np.ndarray
    limit: np.ndarray
    errors: np.ndarray
    ratios: np.ndarray
    order: np.ndarray

    def table(self) -> list:
        return [{"t": t, "error": float(e)} for t, e in zip(self.t_seq, self.errors)]


def richardson(q1, q2, ratio: float):
    """Eliminate the first-order term from quotients at t and t/ratio."""
    return (ratio * q2 - q1) / (ratio - 1)


def difference_ladder(evaluate: Callable[[float], np.ndarray], base: np.ndarray, t_seq=T_SEQ,
                      reference=None) -> GeneratorEstimate:
    """Estimate lim (base - evaluate(t))/t with Richardson and an order table."""
    t_seq = tuple(float(t) for t in t_seq)
    if any(b >= a for a, b in zip(t_seq, t_seq[1:])) or min(t_seq) <= 0:
        raise PreconditionError("t_seq must be positive and decreasing")
    q = np.stack([(base - evaluate(t)) / t for t in t_seq])
    limit = richardson(q[-2], q[-1], t_seq[-2] / t_seq[-1])
    ref = limit if reference is None else np.asarray(reference)
    errors = np.array([float(np.max(np.abs(qk - ref))) for qk in q])
    ratios = errors[:-1] / np.maximum(errors[1:], 1e-300)
    decades = np.log10(np.array(t_seq[:-1]) / np.array(t_seq[1:]))
    order = np.log10(np.maximum(ratios, 1e-300)) / decades
    return GeneratorEstimate(t_seq, q, limit, errors, ratios, order)


def generator(sg, pt, t_seq=T_SEQ, reference=None) -> GeneratorEstimate:
    """Generator of a flow or an extended flow at ``pt`` by one-sided differences."""
    if isinstance(sg, ExtendedFlow):
        pt = pt if isinstance(pt, ProductPoint) else ProductPoint.split(pt, sg.space.n)
        base = pt.stack()
        return difference_ladder(lambda t: sg(t, pt).stack(), base, t_seq, reference)
    z = np.asarray(pt, dtype=complex)
    return difference_ladder(lambda t: sg(t, z), z, t_seq, reference)


def gamma_derivative_at_identity(ext: ExtendedFlow, x, t_seq=T_SEQ) -> GeneratorEstimate:
    """-d/dt Gamma-hat(F_t, x) at t = 0+, as (1 - Gamma-hat(F_t, x))/t with Richardson."""
    x = np.asarray(x, dtype=complex)
    one = np.ones(x.shape[:-1], dtype=complex)
    return difference_ladder(lambda t: ext.scalar(t, x), one, t_seq)


def extended_generator_formula(ext: ExtendedFlow, pt, t_seq=T_SEQ) -> np.ndarray:
    """(f(x), dGamma-hat(id, x)[f] y + g(y)) with each piece estimated separately.

    Closed-form generators are used for f and g when the flows provide
    them; the Gamma-hat derivative is always a difference estimate.
    """
    pt = pt if isinstance(pt, ProductPoint) else ProductPoint.split(pt, ext.space.n)
    x = np.asarray(pt.x, dtype=complex)
    y = np.asarray(pt.y, dtype=complex)
    f = ext.base.generator(x)
    if f is None:
        f = generator(ext.base, x, t_seq).limit
    gy = ext.g.generator(y)
    if gy is None:
        gy = generator(ext.g, y, t_seq).limit
    dgamma = gamma_derivative_at_identity(ext, x, t_seq).limit
    return np.concatenate([f, dgamma[..., None] * y + gy], axis=-1)


# ---------------------------------------------------------------------------
# checks


def _rel(a, b):
    return np.linalg.norm(a - b, axis=-1) / np.maximum(1.0, np.linalg.norm(b, axis=-1))


def check_commutation(ext: ExtendedFlow, pts, times=(0.1, 0.5, 1.0), tol: float = 1e-8) -> Optional[CheckReport]:
    """Pointwise check of Gamma-hat(F_t, x) G_s(y) = G_s(Gamma-hat(F_t, x) y) on samples.

    Returns None when G is linear, where the identity holds automatically
    for a scalar Gamma-hat.  Pairs with ||c y|| >= 1 leave the domain of
    G_s and count as unknown.
    """
    if isinstance(ext.g, (LinearFlow, IdentityFlow)):
        return None
    pts = pts if isinstance(pts, ProductPoint) else ProductPoint.split(pts, ext.space.n)
    x = np.asarray(pts.x, dtype=complex)
    y = np.asarray(pts.y, dtype=complex)
    margins = []
    for t in times:
        cy = ext.scalar(t, x)[..., None] * y
        inside = np.linalg.norm(cy, axis=-1) < 1
        safe = np.where(inside[..., None], cy, 0)
        for s in times:
            lhs = ext.scalar(t, x)[..., None] * ext.g(s, y)
            rhs = ext.g(s, safe)
            margins.append(np.where(inside, -_rel(lhs, rhs), np.nan))
    return from_margins("commutation", np.stack(margins, 1), pts.stack(), tol=tol,
                        params={"times": list(times), "tol": tol, "G": ext.g.describe()})


def _require_commutation(rep: CheckReport, ext: ExtendedFlow, pts, times) -> CheckReport:
    comm = check_commutation(ext, pts, times)
    if comm is None:
        return rep
    rep.conditions["commutation"] = {"verdict": comm.verdict, "worst_margin": comm.worst_margin}
    if comm.verdict != PASS and rep.verdict == PASS:
        rep.verdict = INCONCLUSIVE
        rep.notes.append("G does not commute with Gamma-hat on samples; the extension result does not apply")
    return rep


def check_semigroup_law(flow, pts, times=(0.1, 0.5, 1.0), tol: float = 1e-8) -> CheckReport:
    """F_{t+s} = F_t o F_s and F_0 = id on the given points."""
    extended = isinstance(flow, ExtendedFlow)

    def ev(t, p):
        return flow(t, p).stack() if extended else flow(t, p)

    def wrap(v):
        return ProductPoint.split(v, flow.space.n) if extended else v

    base = pts.stack() if extended else np.asarray(pts, dtype=complex)
    margins = [-_rel(ev(0.0, wrap(base)), base)]
    for t in times:
        for s in times:
            margins.append(-_rel(ev(t, wrap(ev(s, wrap(base)))), ev(t + s, wrap(base))))
    rep = from_margins("semigroup-law", np.stack(margins, 1), base, tol=tol,
                       params={"times": list(times), "tol": tol,
                               "flow": flow.describe()})
    return _require_commutation(rep, flow, pts, times) if extended else rep


def check_contraction(flow: LinearFlow, samples: int = 1000, seed: int = 0,
                      times=(0.01, 0.1, 1.0, 10.0), tol: float = 1e-12) -> CheckReport:
    """||G_t(y)|| <= ||y|| on samples."""
    rng = np.random.default_rng(seed)
    y = rng.normal(size=(samples, flow.dim)) + 1j * rng.normal(size=(samples, flow.dim))
    ny = np.linalg.norm(y, axis=-1)
    margins = np.stack([ny - np.linalg.norm(flow(t, y), axis=-1) for t in times], 1) / ny[:, None]
    return from_margins("contraction", margins, y, times, tol=tol, params={"tol": tol})


def check_intertwining(h: HoloMap, spec: GammaSpec, hat: GammaSpec, psi: Flow, g: Flow, space: SpacePair,
                       times=(0.1, 0.5, 1.0), samples: int = 100, seed: int = 0,
                       tol: float = 1e-8) -> CheckReport:
    """Phi[h] o F~_t = Psi~_t o Phi[h] with F_t = h^{-1} o Psi_t o h."""
    pts = sample_product_ball(space, samples, seed)
    em = ExtendedMap(h, spec, space)
    ext = ExtendedFlow(ConjugatedFlow(h, psi), hat, g, space)
    image = em(pts)
    margins = []
    for t in times:
        lhs = em(ext(t, pts)).stack()
        rhs = conjugate_extended_flow(h, spec, psi, g, t, image, preimage=pts.x).stack()
        margins.append(-_rel(lhs, rhs))
    rep = from_margins("intertwining", np.stack(margins, 1), pts.stack(), times, tol=tol,
                       params={"h": h.name, "gamma": spec.describe(), "gamma_hat": hat.describe(),
                               "times": list(times), "samples": samples, "tol": tol})
    return _require_commutation(rep, ext, pts, times)


def check_stationary_sets(ext: ExtendedFlow, candidates, t_grid=(0.1, 0.5, 1.0, 2.0),
                          samples: int = 200, seed: int = 0, tol: float = 1e-9) -> CheckReport:
    """Stationary points of F~ versus those of the base flow.

    Lower inclusion: (x, 0) is fixed by F~_t for each candidate x fixed by
    F_t (candidates are verified to 1e-10 first).  Upper inclusion: every
    sampled point fixed by F~_t for all t has a first coordinate fixed by F_t.
    """
    cands = np.asarray(candidates, dtype=complex).reshape(-1, ext.space.n)
    base_res = np.stack([np.linalg.norm(ext.base(t, cands) - cands, axis=-1) for t in t_grid], 1)
    if np.any(base_res > 1e-10):
        raise PreconditionError("a candidate is not stationary for the base flow")
    zero_y = np.zeros((len(cands), ext.space.m), dtype=complex)
    lower = np.stack([-np.linalg.norm(ext(t, ProductPoint(cands, zero_y)).stack()
                                      - ProductPoint(cands, zero_y).stack(), axis=-1) for t in t_grid], 1)
    parts = {"lower": from_margins("lower", lower, cands, t_grid, tol=tol, params={"tol": tol})}

    sample = sample_product_ball(ext.space, samples, seed)
    rng = np.random.default_rng(seed + 1)
    ys = rng.normal(size=(len(cands), ext.space.m)) * 0.1
    probes = ProductPoint(np.concatenate([cands, cands, sample.x]),
                          np.concatenate([zero_y, ys, sample.y]))
    moved = np.stack([np.linalg.norm(ext(t, probes).stack() - probes.stack(), axis=-1) for t in t_grid], 1)
    fixed = np.all(moved <= tol, axis=1)
    xs = probes.x[fixed]
    if len(xs):
        upper = np.stack([-np.linalg.norm(ext.base(t, xs) - xs, axis=-1) for t in t_grid], 1)
    else:
        upper = np.zeros((0, len(t_grid)))
    parts["upper"] = from_margins("upper", upper if len(xs) else np.zeros(1), xs if len(xs) else None,
                                  tol=tol, params={"tol": tol})
    rep = combine("stationary-sets", parts, params={"t_grid": list(t_grid), "samples": samples})
    rep.data = {"fixed_points": probes.stack()[fixed]}
    rep.params["fixed_count"] = int(fixed.sum())
    return rep
