"""Product spaces Z = X x Y, profile functions and the induced ball norm.

The unit ball of Z is

    D = {(x, y) : ||x|| < 1, ||y|| < p(||x||)}

for a profile ``p`` that is decreasing and concave on [0, 1] with
``p(0) = 1`` and ``p(1) = 0``.  Its Minkowski gauge is the norm on Z.
All routines broadcast over leading axes; the last axis holds coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import DomainError, InternalInconsistencyError, PreconditionError

_GRID = 1001


@dataclass(frozen=True)
class ProfileSpec:
    """Profile ``p(s) = (1 - s**q)**(1/r)`` or a user supplied function.

    A general ``func`` must accept numpy arrays.  Conditions p(0)=1, p(1)=0,
    strict decrease and midpoint concavity are checked on a grid when the
    object is built; a violation raises :class:`PreconditionError`.
    """

    q: float = 2.0
    r: float = 2.0
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.func is None and (self.q < 1 or self.r < 1):
            raise PreconditionError(f"profile exponents must be >= 1, got q={self.q}, r={self.r}")
        self.validate()

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(s > 1):
            raise DomainError("profile argument must lie in [0, 1]")
        return self._raw(s)

    def _raw(self, s):
        if self.func is not None:
            return np.asarray(self.func(s), dtype=float)
        return np.clip(1.0 - s**self.q, 0.0, 1.0) ** (1.0 / self.r)

    def validate(self, tol: float = 1e-12) -> None:
        s = np.linspace(0.0, 1.0, _GRID)
        v = self._raw(s)
        if abs(v[0] - 1.0) > tol or abs(v[-1]) > tol:
            raise PreconditionError("profile must satisfy p(0) = 1 and p(1) = 0")
        d = np.diff(v)
        # flat steps are tolerated only where p has saturated at 1 in floating point
        flat = (d == 0) & (v[:-1] < 1.0 - 1e-15) & (v[:-1] > 0)
        if np.any(d > 1e-15) or np.any(flat):
            raise PreconditionError("profile must be strictly decreasing on [0, 1]")
        # neighbour triples on the fine grid, all pairs on a coarse one
        if np.any(v[1:-1] < 0.5 * (v[:-2] + v[2:]) - tol):
            raise PreconditionError("profile must be midpoint concave")
        c = s[::10]
        s1, s2 = np.meshgrid(c, c)
        if np.any(self._raw(0.5 * (s1 + s2)) < 0.5 * (self._raw(s1) + self._raw(s2)) - tol):
            raise PreconditionError("profile must be midpoint concave")


def profile_eval(p: ProfileSpec, s):
    """Evaluate the profile; raises :class:`DomainError` outside [0, 1]."""
    return p(s)


@dataclass(frozen=True)
class Norm:
    """The l^s norm on C^k (``s = 2`` is Euclidean, ``np.inf`` allowed)."""

    s: float = 2.0

    def __post_init__(self):
        if not self.s >= 1:
            raise PreconditionError(f"l^s norm needs s >= 1, got {self.s}")

    def __call__(self, v):
        v = np.asarray(v)
        if v.shape[-1] == 0:
            return np.zeros(v.shape[:-1])
        return np.linalg.norm(v, ord=self.s, axis=-1)

    @property
    def dual(self) -> "Norm":
        if self.s == 1:
            return Norm(np.inf)
        if np.isinf(self.s):
            return Norm(1.0)
        return Norm(self.s / (self.s - 1.0))

    def check_axioms(self, dim: int, samples: int = 200, seed: int = 0) -> float:
        """Largest violation of homogeneity or the triangle inequality on samples."""
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(samples, dim)) + 1j * rng.normal(size=(samples, dim))
        b = rng.normal(size=(samples, dim)) + 1j * rng.normal(size=(samples, dim))
        c = rng.normal(size=samples) + 1j * rng.normal(size=samples)
        homo = np.abs(self(c[:, None] * a) - np.abs(c) * self(a))
        tri = self(a + b) - self(a) - self(b)
        return float(max(homo.max(), tri.max(), 0.0))


class ProductPoint(NamedTuple):
    """A point (or a batch of points) of Z = X x Y."""

    x: np.ndarray
    y: np.ndarray

    @classmethod
    def of(cls, x, y) -> "ProductPoint":
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        if x.ndim == 0:
            x = x[None]
        if y.ndim == 0:
            y = y[None]
        return cls(x, y)

    def stack(self) -> np.ndarray:
        lead = np.broadcast_shapes(self.x.shape[:-1], self.y.shape[:-1])
        x = np.broadcast_to(self.x, lead + self.x.shape[-1:])
        y = np.broadcast_to(self.y, lead + self.y.shape[-1:])
        return np.concatenate([x, y], axis=-1)

    @classmethod
    def split(cls, v, n: int) -> "ProductPoint":
        v = np.asarray(v, dtype=complex)
        return cls(v[..., :n], v[..., n:])


@dataclass(frozen=True)
class SpacePair:
    """Dimensions, coordinate norms and profile of Z = C^n x C^m."""

    n: int = 1
    m: int = 1
    profile: ProfileSpec = field(default_factory=ProfileSpec)
    x_norm: Norm = field(default_factory=Norm)
    y_norm: Norm = field(default_factory=Norm)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise PreconditionError("dimensions n and m must be >= 1")

    @classmethod
    def power(cls, n=1, m=1, q=2.0, r=2.0, x_s=2.0, y_s=2.0) -> "SpacePair":
        return cls(n, m, ProfileSpec(q, r), Norm(x_s), Norm(y_s))

    def norms(self, pt: ProductPoint):
        return self.x_norm(pt.x), self.y_norm(pt.y)


def ball_contains(space: SpacePair, pt: ProductPoint):
    """Membership margin ``p(||x||) - ||y||``; ``-inf`` when ``||x|| >= 1``.

    The point lies in D exactly when the margin is positive.
    """
    a, b = space.norms(pt)
    a = np.asarray(a, dtype=float)
    inside = a < 1.0
    pa = space.profile._raw(np.where(inside, a, 1.0))
    out = np.where(inside, pa - b, -np.inf)
    return float(out) if out.ndim == 0 else out


def gauge(profile: ProfileSpec, a, b, rtol: float = 1e-13):
    """Solve ``b = lam * p(a / lam)`` for ``lam >= a`` by bisection.

    ``a`` and ``b`` are norms of the two components (arrays broadcast).
    The bracket starts at ``[a, a + b]`` and is doubled until it contains
    the root.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    a = a.astype(float).copy()
    b = b.astype(float).copy()
    lo = a.copy()
    hi = a + b
    zero = hi == 0
    hi = np.where(zero, 1.0, hi)

    def phi(lam):
        return lam * profile._raw(np.clip(a / lam, 0.0, 1.0)) - b

    for _ in range(64):
        bad = (phi(hi) < 0) & ~zero
        if not np.any(bad):
            break
        hi = np.where(bad, 2.0 * hi, hi)
    else:
        raise InternalInconsistencyError("gauge bracket did not close; profile is not monotone")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        pos = phi(np.where(mid > 0, mid, 1.0)) >= 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= rtol * np.maximum(hi, 1e-300)):
            break
    lam = np.where(zero, 0.0, 0.5 * (lo + hi))
    # exact endpoints: b == 0 gives lam == a, a == 0 gives lam == b
    lam = np.where(b == 0, a, lam)
    lam = np.where((a == 0) & ~zero, b, lam)
    return float(lam) if lam.ndim == 0 else lam


def product_norm(space: SpacePair, pt: ProductPoint):
    """Norm of ``pt`` in Z, the Minkowski functional of the product ball."""
    a, b = space.norms(pt)
    return gauge(space.profile, a, b)


def sample_ball(dim: int, count: int, seed: int = 0, radii=None, norm: Norm = Norm(),
                axis_probes: bool = True) -> np.ndarray:
    """Points of the open unit ball of C^dim on radius-stratified shells.

    Shell radii default to ``linspace(0.1, 0.95, 18)``; points cycle through
    the shells with uniformly random directions.  With ``axis_probes`` the
    first two points of each shell in dimension 1 sit on the real axis.
    """
    rng = np.random.default_rng(seed)
    radii = np.linspace(0.1, 0.95, 18) if radii is None else np.asarray(radii, dtype=float)
    rad = radii[np.arange(count) % len(radii)]
    d = rng.normal(size=(count, dim)) + 1j * rng.normal(size=(count, dim))
    d /= norm(d)[:, None]
    if axis_probes and dim == 1:
        k = len(radii)
        d[:k, 0] = 1.0
        d[k:2 * k, 0] = -1.0
    return rad[:, None] * d


def sample_product_ball(space: SpacePair, count: int, seed: int = 0, radii=None) -> ProductPoint:
    """Points of D with product norm on shells ``radii`` (0.1 ... 0.95).

    A boundary point ``(u, v)`` with ``||u|| = a`` and ``||v|| = p(a)`` is
    scaled by the shell radius, so each sample has exactly that norm.
    """
    rng = np.random.default_rng(seed)
    radii = np.linspace(0.1, 0.95, 18) if radii is None else np.asarray(radii, dtype=float)
    lam = radii[np.arange(count) % len(radii)]
    a = rng.uniform(0.0, 1.0, size=count)
    u = rng.normal(size=(count, space.n)) + 1j * rng.normal(size=(count, space.n))
    v = rng.normal(size=(count, space.m)) + 1j * rng.normal(size=(count, space.m))
    u *= (a / space.x_norm(u))[:, None]
    v *= (space.profile._raw(a) / space.y_norm(v))[:, None]
    return ProductPoint(lam[:, None] * u, lam[:, None] * v)
