"""Sampled verification of invariance properties of images of (extended) maps.

A claim is never proven here; a pass means no decided probe found a margin
below -1e-9 at the sampled resolution and at most 5% of the probes were
undecided.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import PreconditionError, UnsupportedError
from .extension import ExtendedMap, extended_membership_many
from .gamma import (BoundaryRatioBiholo, GammaSpec, JacobianPower, Product, _tau, continued_anchors,
                    gamma_log)
from .geometry import ProductPoint, SpacePair, product_norm, sample_ball, sample_product_ball
from .holo import catalog as cat
from .holo.inversion import INSIDE, OUTSIDE, image_contains_many
from .holo.maps import HoloMap, compose, linear_map
from .linalg import LinearOperatorSpec, block_diag, matrix_exp
from .report import (INCONCLUSIVE, PASS, VIOLATION, CheckReport, combine, from_margins)
from .semigroups import AffineFlow, Flow, IdentityFlow, LinearFlow, affine_integral

Target = Union[HoloMap, ExtendedMap]

MARGIN_TOL = 1e-9
C_RESIDUAL_TOL = 1e-9


def default_t_grid(t_min: float = 0.01, t_max: float = 10.0, count: int = 25) -> np.ndarray:
    return np.geomspace(t_min, t_max, count)


@dataclass(frozen=True)
class Sampler:
    """Interior sample points on radius shells and the time grid."""

    n_points: int = 1000
    seed: int = 0
    radii: Optional[tuple] = None
    t_grid: tuple = tuple(default_t_grid())

    def points(self, target: Target):
        radii = None if self.radii is None else np.asarray(self.radii)
        if isinstance(target, ExtendedMap):
            return sample_product_ball(target.space, self.n_points, self.seed, radii)
        return sample_ball(target.dim, self.n_points, self.seed, radii)

    def describe(self) -> dict:
        return {"n_points": self.n_points, "seed": self.seed,
                "radii": None if self.radii is None else list(self.radii),
                "t_grid": [float(t) for t in self.t_grid]}


# ---------------------------------------------------------------------------
# motions


@dataclass(frozen=True, eq=False)
class Linear:
    """The motion w -> e^{-tA} w."""

    op: LinearOperatorSpec

    def __post_init__(self):
        object.__setattr__(self, "op", LinearOperatorSpec.of(self.op))

    def flow(self) -> Flow:
        return LinearFlow(self.op)


@dataclass(frozen=True, eq=False)
class Shift:
    """The motion w -> w + t tau."""

    tau: tuple = (1.0,)

    def flow(self) -> Flow:
        t = np.atleast_1d(np.asarray(self.tau, dtype=complex))
        return AffineFlow(np.zeros((len(t), len(t))), 1.0, tuple(t))


@dataclass(frozen=True, eq=False)
class Affine:
    """The motion w -> e^{-tA} w + lam I(t) tau."""

    op: LinearOperatorSpec
    lam: float = 0.0
    tau: tuple = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "op", LinearOperatorSpec.of(self.op))

    def flow(self) -> Flow:
        return AffineFlow(self.op, self.lam, self.tau)


def _motion(m) -> Union[Linear, Shift, Affine]:
    if isinstance(m, (Linear, Shift, Affine)):
        return m
    if isinstance(m, AffineFlow):
        if m.lam == 0:
            return Linear(m.op)
        if np.allclose(m.op.matrix, 0):
            return Shift(m.tau)
        return Affine(m.op, m.lam, m.tau)
    if isinstance(m, LinearFlow):
        return Linear(m.op)
    return Linear(LinearOperatorSpec.of(m))


# ---------------------------------------------------------------------------
# spirallike and related invariance checks


@dataclass(frozen=True, eq=False)
class SpirallikeClaim:
    """Claim that the image of ``target`` is invariant under e^{-tA}.

    ``relaxed`` accepts an operator whose spectrum is only nonnegative
    rather than bounded away from zero.
    """

    target: Target
    op: LinearOperatorSpec
    sampler: Sampler = field(default_factory=Sampler)
    relaxed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "op", LinearOperatorSpec.of(self.op))
        dim = self.target.n + self.target.m if isinstance(self.target, ExtendedMap) else self.target.dim
        if self.op.dim != dim:
            raise PreconditionError(f"operator has size {self.op.dim}, target lives in dimension {dim}")


def _membership(target: Target, w: np.ndarray, seeds=None):
    if isinstance(target, ExtendedMap):
        mem = extended_membership_many(target, ProductPoint.split(w, target.n), extra_seeds=seeds)
        pre = mem.preimage[:, :target.n]
    else:
        mem = image_contains_many(target, w, extra_seeds=seeds)
        pre = mem.preimage
    margin = np.where(mem.state == 0, np.nan, mem.margin)
    return margin, pre


def _image(target: Target, pts):
    if isinstance(target, ExtendedMap):
        return target(pts).stack(), np.asarray(pts.x)
    return target.func(pts), pts


def _track(target: Target, w0: np.ndarray, x0: np.ndarray, curve, t_grid) -> np.ndarray:
    """Margins of curve(t, w0) for t on an ascending grid, warm-starting inversion."""
    margins = np.empty((len(w0), len(t_grid)))
    seeds = x0
    for j, t in enumerate(t_grid):
        wt = curve(t, w0)
        m, pre = _membership(target, wt, seeds[None])
        margins[:, j] = m
        seeds = np.where(np.isfinite(pre), pre, seeds)
    return margins


def check_spirallike(claim: SpirallikeClaim, name: str = "spirallike") -> CheckReport:
    """Membership of e^{-tA} w in the image for sampled w and t."""
    target, op, sampler = claim.target, claim.op, claim.sampler
    pts = sampler.points(target)
    w0, x0 = _image(target, pts)
    t_grid = np.asarray(sampler.t_grid, dtype=float)
    mats = {t: matrix_exp(op, t) for t in t_grid}
    margins = _track(target, w0, x0, lambda t, w: w @ mats[t].T, t_grid)
    notes = [f"invariance checked up to t_max = {t_grid.max():g}; the tail beyond is not claimed"]
    rep = from_margins(name, margins, w0, t_grid, tol=MARGIN_TOL, params={
        "target": getattr(target, "name", "map"), "A": op.matrix, "spectral_margin": op.margin,
        "sampler": sampler.describe(), "t_max": float(t_grid.max())}, notes=notes)
    ok_margin = op.margin >= -1e-12 if claim.relaxed else op.bounded_away()
    if not ok_margin:
        rep.notes.append("operator spectrum is not bounded away from the imaginary axis")
        if rep.verdict == PASS:
            rep.verdict = INCONCLUSIVE
    return rep


def _identity_for(gamma: GammaSpec, n: int) -> HoloMap:
    if isinstance(gamma, BoundaryRatioBiholo) or (
            isinstance(gamma, Product) and any(isinstance(p, BoundaryRatioBiholo) for p in gamma.parts)):
        return cat.flip() if n == 1 else linear_map(-np.eye(n), offset=_tau(gamma_tau(gamma), n),
                                                    name="tau - z")
    return cat.koebe() if n == 1 else cat.identity(n)


def gamma_tau(gamma: GammaSpec):
    if isinstance(gamma, Product):
        for p in gamma.parts:
            if hasattr(p, "tau"):
                return p.tau
    return getattr(gamma, "tau", (1.0,))


def _closed_form_C(gamma: GammaSpec, motion) -> complex:
    if isinstance(gamma, Product):
        return sum(_closed_form_C(p, motion) for p in gamma.parts)
    if isinstance(gamma, JacobianPower):
        if isinstance(motion, Shift):
            return 0.0
        return gamma.alpha * motion.op.trace
    if isinstance(gamma, BoundaryRatioBiholo) and isinstance(motion, Linear):
        a = motion.op.matrix
        tau = _tau(gamma.tau, a.shape[0])
        mu = complex(np.vdot(tau, a.conj().T @ tau))
        if np.linalg.norm(a.conj().T @ tau - mu * tau) > 1e-10:
            raise PreconditionError("tau is not an eigenvector of the adjoint of A")
        return 2.0 * np.conj(mu) / gamma.r
    raise UnsupportedError(f"no closed form of C for {gamma.kind} under {type(motion).__name__}")


def derive_C(gamma: GammaSpec, motion, h: Optional[HoloMap] = None, samples: int = 100,
             seed: int = 0, t_max: float = 3.0):
    """Scalar C with Gamma(motion_t o h, x) = e^{-Ct} Gamma(h, x), and the residual report.

    Closed forms: JacobianPower(alpha) under e^{-tA} (or any affine motion
    with linear part e^{-tA}): C = alpha tr A; JacobianPower under a shift:
    C = 0; BoundaryRatioBiholo(tau, r) under e^{-tA} with A* tau = conj(lam)
    tau: C = 2 lam / r.  Products add.  The identity is evaluated on random
    (t, x) with the branch of Gamma continued in t.
    """
    motion = _motion(motion)
    c = complex(_closed_form_C(gamma, motion))
    n = motion.op.dim if hasattr(motion, "op") else len(np.atleast_1d(motion.tau))
    h = h or _identity_for(gamma, n)
    flow = motion.flow()
    rng = np.random.default_rng(seed)
    x = sample_ball(n, samples, seed, radii=np.linspace(0.05, 0.9, 10))
    ts = rng.uniform(0.0, t_max, samples)
    base = gamma_log(gamma, h, x)
    res = np.empty(samples)
    for k, (t, xk) in enumerate(zip(ts, x)):
        family = (lambda s: compose(flow.map_at(s), h))
        moved = gamma_log(gamma, family(t), xk[None], anchors=continued_anchors(gamma, family, t))[0]
        lhs = np.exp(moved)
        rhs = np.exp(-c * t + base[k])
        res[k] = abs(lhs - rhs) / max(1.0, abs(rhs))
    rep = from_margins("derive-C", -res, x, tol=C_RESIDUAL_TOL, params={
        "gamma": gamma.describe(), "motion": type(motion).__name__, "C": c, "h": h.name,
        "samples": samples, "tol": C_RESIDUAL_TOL})
    return c, rep


def check_extended_spirallike(h: HoloMap, gamma: GammaSpec, a, b, space: SpacePair,
                              sampler: Sampler = Sampler(), verify_base: bool = True,
                              relaxed: bool = False) -> CheckReport:
    """diag(A, B + C)-spirallikeness of Phi[h], with C from :func:`derive_C`."""
    a = LinearOperatorSpec.of(a)
    b = LinearOperatorSpec.of(np.atleast_2d(np.asarray(b, dtype=complex)) if not isinstance(b, LinearOperatorSpec) else b)
    notes = []
    pre = {}
    if verify_base:
        pre["base"] = check_spirallike(SpirallikeClaim(h, a, sampler, relaxed), "base-spirallike")
    c, c_rep = derive_C(gamma, Linear(a), h)
    pre["C-identity"] = c_rep
    bc = b.matrix + c * np.eye(b.dim)
    block = LinearOperatorSpec(block_diag(a.matrix, bc))
    expected = min(a.margin, LinearOperatorSpec(bc).margin)
    if abs(block.margin - expected) > 1e-10:
        notes.append("block spectrum margin differs from the union of the diagonal blocks")
    if not b.accretive():
        notes.append("B is not accretive")
    em = ExtendedMap(h, gamma, space)
    main = check_spirallike(SpirallikeClaim(em, block, sampler, relaxed), "extended-spirallike")
    failed_pre = [k for k, r in pre.items() if r.verdict != PASS] + (["B-accretive"] if not b.accretive() else [])
    rep = main
    rep.params.update({"C": c, "B": b.matrix, "block": block.matrix, "block_margin": block.margin,
                       "preconditions": {k: r.verdict for k, r in pre.items()}})
    rep.notes.extend(notes)
    if failed_pre and rep.verdict == PASS:
        rep.verdict = INCONCLUSIVE
        rep.notes.append(f"preconditions not confirmed: {failed_pre}")
    return rep


def _c_for_shift(target: ExtendedMap, tau) -> complex:
    try:
        return complex(_closed_form_C(target.gamma, Shift(tuple(np.atleast_1d(tau)))))
    except UnsupportedError:
        return 0.0


def check_convex_in_direction(target: Target, tau, sampler: Sampler = Sampler(), b=None,
                              c: Optional[complex] = None) -> CheckReport:
    """w + t tau stays in the image; for an extension the curve (z + t tau, e^{-(B+C)t} w)."""
    if isinstance(target, ExtendedMap):
        t_vec = np.atleast_1d(np.asarray(tau, dtype=complex))
        m = target.m
        bmat = np.zeros((m, m)) if b is None else np.atleast_2d(np.asarray(b, dtype=complex))
        c = _c_for_shift(target, tau) if c is None else c
        op = bmat + c * np.eye(m)
        n = target.n

        def curve(t, w):
            e = matrix_exp(op, t)
            return np.concatenate([w[:, :n] + t * t_vec, w[:, n:] @ e.T], axis=-1)
        params = {"tau": t_vec, "B": bmat, "C": c}
    else:
        t_vec = np.atleast_1d(np.asarray(tau, dtype=complex))

        def curve(t, w):
            return w + t * t_vec
        params = {"tau": t_vec}
    pts = sampler.points(target)
    w0, x0 = _image(target, pts)
    t_grid = np.asarray(sampler.t_grid, dtype=float)
    margins = _track(target, w0, x0, curve, t_grid)
    params.update({"target": getattr(target, "name", "map"), "sampler": sampler.describe(),
                   "t_max": float(t_grid.max())})
    return from_margins("convex-in-direction", margins, w0, t_grid, tol=MARGIN_TOL, params=params,
                        notes=[f"checked up to t_max = {t_grid.max():g}"])


def check_affine_invariance(h: HoloMap, gamma: GammaSpec, sigma, g: Flow, space: SpacePair,
                            sampler: Sampler = Sampler()) -> CheckReport:
    """The curve (Psi_t(z), e^{-Ct} G_t(w)) stays in Phi[h](D) for w = Phi[h](x, y)."""
    motion = _motion(sigma)
    flow = motion.flow()
    c, c_rep = derive_C(gamma, motion, h)
    t_grid = np.asarray(sampler.t_grid, dtype=float)
    base_pts = sample_ball(h.dim, sampler.n_points, sampler.seed)
    base_w = h.func(base_pts)
    base_margins = _track(h, base_w, base_pts, lambda t, w: flow(t, w), t_grid)
    base_rep = from_margins("base-invariance", base_margins, base_w, t_grid, tol=MARGIN_TOL)

    em = ExtendedMap(h, gamma, space)
    n = em.n

    def curve(t, w):
        return np.concatenate([flow(t, w[:, :n]), np.exp(-c * t) * g(t, w[:, n:])], axis=-1)

    pts = sampler.points(em)
    w0, x0 = _image(em, pts)
    margins = _track(em, w0, x0, curve, t_grid)
    main = from_margins("curve-containment", margins, w0, t_grid, tol=MARGIN_TOL)
    rep = combine("affine-invariance", {"base-invariance": base_rep, "C-identity": c_rep,
                                        "curve-containment": main},
                  params={"h": h.name, "gamma": gamma.describe(), "motion": type(motion).__name__,
                          "C": c, "G": g.describe(), "sampler": sampler.describe(),
                          "t_max": float(t_grid.max())},
                  notes=[f"checked up to t_max = {t_grid.max():g}"])
    return rep


# ---------------------------------------------------------------------------
# figure data


@dataclass
class CurveTable:
    """Rows of (t, coordinates, margin) with the fan parameter s kept separately."""

    t: np.ndarray
    s: np.ndarray
    points: np.ndarray
    margin: np.ndarray

    def header(self) -> list:
        k = self.points.shape[-1]
        cols = ["t"]
        for j in range(k):
            cols += [f"coord{j}_re", f"coord{j}_im"]
        return cols + ["margin"]

    def rows(self):
        for t, p, m in zip(self.t, self.points, self.margin):
            row = [float(t)]
            for v in p:
                row += [float(v.real), float(v.imag)]
            yield row + [float(m)]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        for row in self.rows():
            writer.writerow([repr(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            from .io_utils import atomic_write_text
            atomic_write_text(path, text)
        return text


def export_invariance_manifold(em: ExtendedMap, motion, base_point, t_grid=None,
                               fan=(0.25, 0.5, 0.75, 1.0), phases=(0.0,),
                               c: Optional[complex] = None):
    """Points (motion_t(z0), s e^{i phi} e^{-Re(C) t} w0) with their membership margins.

    For a linear motion e^{-tA} this samples the set |w| < e^{-t Re C}|w0|
    above the spiral through z0; for a shift it samples the cylinder
    |w| <= |w0| above the line z0 + t tau.  The phase of w0 is kept.
    Returns ``(table, report)``.
    """
    motion = _motion(motion)
    flow = motion.flow()
    pt = base_point if isinstance(base_point, ProductPoint) else ProductPoint.split(base_point, em.n)
    z0 = np.asarray(pt.x, dtype=complex).reshape(em.n)
    w0 = np.asarray(pt.y, dtype=complex).reshape(em.m)
    mem0 = extended_membership_many(em, ProductPoint(z0[None], w0[None]))
    if mem0.state[0] != INSIDE:
        raise PreconditionError("base point is not inside the image of the extension")
    if c is None:
        c = complex(_closed_form_C(em.gamma, motion))
    t_grid = np.linspace(0.0, 3.0, 31) if t_grid is None else np.asarray(t_grid, dtype=float)
    ts, ss, pts = [], [], []
    for t in t_grid:
        zt = flow(t, z0[None])[0]
        for s in fan:
            for phi in phases:
                ts.append(t)
                ss.append(s)
                pts.append(np.concatenate([zt, s * np.exp(1j * phi) * np.exp(-c.real * t) * w0]))
    pts = np.array(pts)
    mem = extended_membership_many(em, ProductPoint.split(pts, em.n))
    margin = np.where(mem.state == 0, np.nan, mem.margin)
    table = CurveTable(np.array(ts), np.array(ss), pts, margin)
    rep = from_margins("invariance-manifold", margin, pts, tol=MARGIN_TOL, max_unknown=0.0, params={
        "map": em.name, "motion": type(motion).__name__, "C": c, "base_point": np.concatenate([z0, w0]),
        "fan": list(fan), "rows": len(pts)})
    rep.data = table
    return table, rep


# ---------------------------------------------------------------------------
# Bloch-type bounds


def _polar_grid(n: int, nr: int, ntheta: int, seed: int = 0):
    radii = np.linspace(0.0, 0.99, nr)
    if n == 1:
        ang = 2 * np.pi * np.arange(ntheta) / ntheta
        return (radii[:, None] * np.exp(1j * ang)[None]).reshape(-1, 1)
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(ntheta, n)) + 1j * rng.normal(size=(ntheta, n))
    d[0] = np.eye(n)[0]
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    return (radii[:, None, None] * d[None]).reshape(-1, n)


def _bloch_suprema(em: ExtendedMap, nr: int, ntheta: int, y_fracs, n_dirs: int, seed: int):
    space = em.space
    x = _polar_grid(em.n, nr, ntheta, seed)
    nx = np.linalg.norm(x, axis=-1)
    px = space.profile._raw(nx)
    weight = 1 - nx ** 2
    jac_h = em.base.jac(x)
    op_h = np.linalg.norm(jac_h, ord=2, axis=(-2, -1))
    gam = em.scalar(x)
    dg = np.linalg.norm(em.dgamma(x), axis=-1)
    q1 = float(np.max(op_h * weight))
    q2 = float(np.max(np.abs(gam) * weight))
    q3 = float(np.max(dg * px * weight))

    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_dirs, em.n + em.m)) + 1j * rng.normal(size=(n_dirs, em.n + em.m))
    dn = product_norm(space, ProductPoint.split(dirs, em.n))
    dirs = dirs / dn[:, None]
    ydir = np.zeros(em.m, dtype=complex)
    ydir[0] = 1.0
    best = 0.0
    for frac in y_fracs:
        y = (frac * px)[:, None] * ydir[None]
        pt = ProductPoint(x, y)
        jm = em.jacobian(pt)
        img = np.einsum("kij,dj->kdi", jm, dirs)
        norms = product_norm(space, ProductPoint.split(img, em.n))
        opn = norms.max(axis=1)
        lam = product_norm(space, pt)
        best = max(best, float(np.max(opn * (1 - lam ** 2))))
    return q1, q2, q3, best


def bloch_bounds(h: HoloMap, gamma: GammaSpec, space: Optional[SpacePair] = None, grid=(10, 10),
                 refined=(40, 25), y_fracs=(0.0, 0.33, 0.66, 0.99), n_dirs: int = 100,
                 seed: int = 0, tol: float = 1e-9, stability: float = 0.05) -> CheckReport:
    """Grid suprema of the three component quantities and of the extended Bloch quantity.

    (i) ||h'(x)|| (1 - ||x||^2); (ii) |Gamma(h, x)| (1 - ||x||^2);
    (iii) ||d_x Gamma(h, x)|| p(||x||) (1 - ||x||^2); and
    ||Phi[h]'(x, y)|| (1 - ||(x, y)||^2), the operator norm on Z estimated
    over ``n_dirs`` random unit directions.  The extended supremum must not
    exceed the sum of the others by more than ``tol``, and every supremum
    must move by less than ``stability`` (relative) between ``grid`` and
    ``refined``.
    """
    space = space or SpacePair.power(h.dim, 1)
    em = ExtendedMap(h, gamma, space)
    coarse = _bloch_suprema(em, grid[0], grid[1], y_fracs, n_dirs, seed)
    fine = _bloch_suprema(em, refined[0], refined[1], y_fracs, n_dirs, seed)
    labels = ("derivative", "gamma", "gamma-derivative", "extended")
    q1, q2, q3, ext = fine
    finite = all(np.isfinite(v) for v in fine + coarse)
    change = [abs(f - c) / max(abs(f), 1e-300) for c, f in zip(coarse, fine)]
    parts = {
        "estimate": from_margins("estimate", np.array([q1 + q2 + q3 + tol - ext]), tol=0.0,
                                 params={"tol": tol}),
        "stability": from_margins("stability", stability - np.array(change), tol=0.0,
                                  params={"tol": stability}),
    }
    rep = combine("bloch-bounds", parts, params={
        "h": h.name, "gamma": gamma.describe(), "grid": list(grid), "refined": list(refined),
        "suprema": dict(zip(labels, fine)), "coarse_suprema": dict(zip(labels, coarse)),
        "relative_change": dict(zip(labels, change))})
    if not finite:
        rep.verdict = VIOLATION
        rep.notes.append("a supremum is not finite")
    rep.data = {"suprema": dict(zip(labels, fine)), "coarse": dict(zip(labels, coarse))}
    return rep
