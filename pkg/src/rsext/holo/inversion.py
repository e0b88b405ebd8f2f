"""Newton inversion of biholomorphic maps and membership in their images."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import AmbiguityError, NotFoundError
from .maps import HoloMap

FOUND, NOT_FOUND, AMBIGUOUS = 0, 1, 2
INSIDE, OUTSIDE, UNKNOWN = 1, -1, 0
_STATE_NAMES = {INSIDE: "inside", OUTSIDE: "outside", UNKNOWN: "unknown"}

RESIDUAL_TOL = 1e-10
AGREE_TOL = 1e-8
EDGE_BAND = 1e-6
RHO_LADDER = (0.9, 0.99, 0.999)
CONTOUR_NODES = 1 << 12


def default_seeds(n: int) -> np.ndarray:
    """The origin plus eight points of norm 0.5."""
    if n == 1:
        ang = 2 * np.pi * np.arange(8) / 8
        pts = 0.5 * np.exp(1j * ang)[:, None]
    else:
        rng = np.random.default_rng(12345)
        d = rng.normal(size=(8, n)) + 1j * rng.normal(size=(8, n))
        pts = 0.5 * d / np.linalg.norm(d, axis=-1, keepdims=True)
    return np.vstack([np.zeros((1, n), dtype=complex), pts])


def _newton(f: HoloMap, w: np.ndarray, z: np.ndarray, max_iter: int = 80):
    """Damped Newton on all seeds at once; ``z`` has shape (S, N, n), ``w`` (1, N, n).

    A seed stops once its residual is below 1e-14 max(1, ||w||) or when no
    damped step decreases the residual any more.
    """
    shape = z.shape
    n = shape[-1]
    z = z.reshape(-1, n).copy()
    wf = np.broadcast_to(w, shape).reshape(-1, n)
    done_tol = 1e-14 * np.maximum(1.0, np.linalg.norm(wf, axis=-1))
    constrain = not f.entire

    def residual(zz, ww):
        with np.errstate(all="ignore"):
            r = np.linalg.norm(f.func(zz) - ww, axis=-1)
        return np.where(np.isfinite(r), r, np.inf)

    res = residual(z, wf)
    active = res > done_tol
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        za, wa, ra = z[idx], wf[idx], res[idx]
        with np.errstate(all="ignore"):
            fz = f.func(za) - wa
            jm = f.jac(za)
            det_ok = np.isfinite(jm).all(axis=(-1, -2)) & np.isfinite(fz).all(axis=-1)
            jm = np.where(det_ok[:, None, None], jm, np.eye(n))
            fz = np.where(det_ok[:, None], fz, 0.0)
            try:
                step = np.linalg.solve(jm, fz[..., None])[..., 0]
            except np.linalg.LinAlgError:
                step = np.stack([np.linalg.lstsq(a, b, rcond=None)[0] for a, b in zip(jm, fz)])
        step = np.where(np.isfinite(step), step, 0.0)
        lam = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        new_z, new_r = za.copy(), ra.copy()
        for _ in range(40):
            todo = ~accepted
            cand = za[todo] - lam[todo, None] * step[todo]
            r = residual(cand, wa[todo])
            good = r < ra[todo]
            if constrain:
                good &= np.linalg.norm(cand, axis=-1) < 1.0
            sel = np.nonzero(todo)[0][good]
            new_z[sel] = cand[good]
            new_r[sel] = r[good]
            accepted[sel] = True
            if accepted.all():
                break
            lam = np.where(accepted, lam, 0.5 * lam)
        z[idx], res[idx] = new_z, new_r
        active[idx] = accepted & (new_r > done_tol[idx])
    return z.reshape(shape), res.reshape(shape[:-1])


def invert_many(f: HoloMap, w, extra_seeds=None, seeds=None):
    """Preimages of a batch ``w`` (shape (N, n)) under ``f``.

    Returns ``(z, status)`` with status FOUND, NOT_FOUND or AMBIGUOUS per
    point.  A seed succeeds when ``||f(z) - w|| <= 1e-10 max(1, ||w||)`` and
    ``||z|| < 1``; successful seeds must agree to 1e-8.
    """
    w = np.asarray(w, dtype=complex)
    n = f.dim
    if w.ndim == 1 and n == 1:
        w = w[:, None]
    w = w.reshape(-1, n)
    count = w.shape[0]
    base = default_seeds(n)
    start = [np.broadcast_to(base[:, None, :], (len(base), count, n))]
    if f.inverse_hint is not None:
        with np.errstate(all="ignore"):
            hint = np.asarray(f.inverse_hint(w), dtype=complex).reshape(count, n)
        hint = np.where(np.isfinite(hint), hint, 0.0)
        rad = np.linalg.norm(hint, axis=-1, keepdims=True)
        if not f.entire:
            hint = np.where(rad < 1, hint, hint * 0.999 / np.maximum(rad, 1e-300))
        start.append(hint[None])
    if extra_seeds is not None:
        es = np.asarray(extra_seeds, dtype=complex).reshape(-1, count, n)
        es = np.where(np.isfinite(es), es, 0.0)
        start.append(es)
    if seeds is not None:
        s = np.asarray(seeds, dtype=complex).reshape(-1, n)
        start = [np.broadcast_to(s[:, None, :], (len(s), count, n))]
    z0 = np.concatenate(start, axis=0).copy()
    z, res = _newton(f, w[None], z0)
    scale = np.maximum(1.0, np.linalg.norm(w, axis=-1))[None]
    ok = (res <= RESIDUAL_TOL * scale) & (np.linalg.norm(z, axis=-1) < 1.0)
    first = np.argmax(ok, axis=0)
    chosen = z[first, np.arange(count)]
    spread = np.where(ok, np.linalg.norm(z - chosen[None], axis=-1), 0.0).max(axis=0)
    status = np.full(count, NOT_FOUND)
    found = ok.any(axis=0)
    status[found] = FOUND
    status[found & (spread > AGREE_TOL * np.maximum(1.0, np.linalg.norm(chosen, axis=-1)))] = AMBIGUOUS
    chosen = np.where(found[:, None], chosen, np.nan)
    return chosen, status


def invert(f: HoloMap, w, seeds=None):
    """Preimage of a single point; raises NotFoundError or AmbiguityError."""
    pts, scalar = f._points(w)
    z, status = invert_many(f, pts.reshape(1, f.dim), seeds=seeds)
    if status[0] == NOT_FOUND:
        raise NotFoundError(f"no preimage of {w} under {f.name} inside the ball")
    if status[0] == AMBIGUOUS:
        raise AmbiguityError(f"{f.name} has two distinct preimages of {w}")
    return complex(z[0, 0]) if scalar else z[0]


def inverse_map(h: HoloMap) -> HoloMap:
    """h^{-1} on h(ball) as a HoloMap, via Newton; NaN where inversion fails."""

    def func(w):
        w = np.asarray(w, dtype=complex)
        z, status = invert_many(h, w.reshape(-1, h.dim))
        z = np.where((status == FOUND)[:, None], z, np.nan)
        return z.reshape(w.shape)

    def jac(w):
        return np.linalg.inv(h.jac(func(w)))

    return HoloMap(func, h.dim, jac, f"{h.name}⁻¹", None, None, None, False,
                   {"inverse_of": h})


def winding_number(f: HoloMap, w: complex, rho: float, nodes: int = CONTOUR_NODES):
    """Winding number of f(rho e^{i theta}) - w about 0.

    Returns ``(winding, distance, resolved)``: the phase increments between
    consecutive nodes are summed; ``resolved`` is False when any increment
    exceeds 2 rad, and ``distance`` is the smallest |f - w| on the contour.
    """
    theta = 2 * np.pi * np.arange(nodes + 1) / nodes
    vals = f.func((rho * np.exp(1j * theta))[:, None])[:, 0] - w
    inc = np.angle(vals[1:] / vals[:-1])
    total = inc.sum() / (2 * np.pi)
    return int(np.round(total)), float(np.min(np.abs(vals))), bool(np.max(np.abs(inc)) < 2.0)


def argument_principle(f: HoloMap, w: complex):
    """Decide membership of ``w`` in f(disk) from winding numbers on rho-circles."""
    dist = []
    for rho in RHO_LADDER:
        wn, d, ok = winding_number(f, w, rho)
        if ok and wn == 1:
            return INSIDE, d
        if not ok or wn != 0:
            return UNKNOWN, np.nan
        dist.append(d)
    d90, d99, d999 = dist
    if d999 > 0 and abs(d999 - d99) <= 0.5 * d999:
        return OUTSIDE, -d999
    return UNKNOWN, np.nan


@dataclass
class Membership:
    """Batch membership result; ``state`` holds INSIDE, OUTSIDE or UNKNOWN."""

    state: np.ndarray
    margin: np.ndarray
    preimage: np.ndarray

    def label(self, i: int = 0) -> str:
        return _STATE_NAMES[int(self.state.reshape(-1)[i])]


def image_contains_many(f: HoloMap, w, extra_seeds=None, need_preimage: bool = True) -> Membership:
    """Membership of a batch of points in f(ball).

    Order of strategies: the exact image descriptor; Newton inversion with
    the preimage at least 1e-6 inside the sphere; winding numbers on circles
    of radius 0.9, 0.99, 0.999 (one dimension only).
    """
    w = np.asarray(w, dtype=complex).reshape(-1, f.dim)
    count = w.shape[0]
    state = np.full(count, UNKNOWN)
    margin = np.full(count, np.nan)
    pre = np.full((count, f.dim), np.nan, dtype=complex)
    if f.image is not None:
        m = np.asarray(f.image(w), dtype=float)
        state = np.where(m > 0, INSIDE, OUTSIDE)
        margin = m
        if need_preimage and np.any(m > 0):
            idx = np.nonzero(m > 0)[0]
            es = None if extra_seeds is None else np.asarray(extra_seeds).reshape(-1, count, f.dim)[:, idx]
            z, status = invert_many(f, w[idx], extra_seeds=es)
            pre[idx] = np.where((status == FOUND)[:, None], z, np.nan)
        return Membership(state, margin, pre)

    z, status = invert_many(f, w, extra_seeds=extra_seeds)
    radius = np.linalg.norm(z, axis=-1)
    hit = (status == FOUND) & (radius < 1 - EDGE_BAND)
    state[hit] = INSIDE
    margin[hit] = 1 - radius[hit]
    pre[hit] = z[hit]
    if f.dim == 1:
        for i in np.nonzero(~hit & (status != AMBIGUOUS))[0]:
            state[i], margin[i] = argument_principle(f, complex(w[i, 0]))
    return Membership(state, margin, pre)


def image_contains(f: HoloMap, w) -> Membership:
    """Single-point version of :func:`image_contains_many`."""
    pts, _ = f._points(w)
    return image_contains_many(f, pts.reshape(1, f.dim))
