"""Evaluable holomorphic maps on the unit ball of C^n."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from ..errors import DomainError

Array = np.ndarray


@dataclass(frozen=True)
class ImageDescriptor:
    """Exact membership test for the image of a map.

    ``margin`` takes points of shape (..., n) and returns a signed real
    number that is positive exactly on the image.
    """

    name: str
    margin: Callable[[Array], Array]

    def __call__(self, w):
        return self.margin(np.asarray(w, dtype=complex))


@dataclass(frozen=True, eq=False)
class HoloMap:
    """A holomorphic map z -> f(z) from the unit ball of C^dim into C^dim.

    ``func`` and ``jac_func`` work on arrays whose last axis holds the
    coordinates, so a whole batch of points is evaluated at once.  A missing
    ``jac_func`` falls back to central differences with one Richardson step.

    ``domain_radius`` bounds the points accepted by the public methods
    (``None`` disables the check); ``entire`` marks formulas that remain
    valid outside the ball, which lets Newton iterates leave it.

    For ``dim == 1`` the public methods also accept plain complex scalars or
    arrays of scalars and return values of the same shape.
    """

    func: Callable[[Array], Array]
    dim: int = 1
    jac_func: Optional[Callable[[Array], Array]] = None
    name: str = "map"
    image: Optional[ImageDescriptor] = None
    inverse_hint: Optional[Callable[[Array], Array]] = None
    domain_radius: Optional[float] = 1.0
    entire: bool = False
    meta: dict = field(default_factory=dict)

    # shape handling -------------------------------------------------
    def _points(self, z):
        z = np.asarray(z, dtype=complex)
        scalar = self.dim == 1 and (z.ndim == 0 or z.shape[-1] != 1)
        if scalar:
            z = z[..., None]
        elif z.shape[-1] != self.dim:
            raise ValueError(f"{self.name}: expected last axis of length {self.dim}, got {z.shape}")
        return z, scalar

    def check_domain(self, z: Array) -> None:
        if self.domain_radius is None:
            return
        r = np.linalg.norm(z, axis=-1)
        if np.any(~(r < self.domain_radius)):
            raise DomainError(f"{self.name}: point outside the open ball of radius {self.domain_radius}")

    # evaluation -----------------------------------------------------
    def raw(self, z: Array) -> Array:
        return self.func(z)

    def __call__(self, z):
        pts, scalar = self._points(z)
        self.check_domain(pts)
        out = self.func(pts)
        return out[..., 0] if scalar else out

    def jac(self, z: Array) -> Array:
        """Jacobian matrices, shape (..., n, n); no domain check."""
        if self.jac_func is not None:
            return self.jac_func(z)
        return fd_jacobian(self.func, z)

    def jacobian(self, z):
        """Complex Jacobian; a scalar derivative for one-dimensional maps."""
        pts, scalar = self._points(z)
        self.check_domain(pts)
        jm = self.jac(pts)
        return jm[..., 0, 0] if scalar else jm

    def jacdet(self, z: Array) -> Array:
        jm = self.jac(z)
        return jm[..., 0, 0] if self.dim == 1 else np.linalg.det(jm)

    def with_name(self, name: str) -> "HoloMap":
        return replace(self, name=name)


def fd_jacobian(func: Callable[[Array], Array], z: Array) -> Array:
    """Central differences with step 1e-6 (1 + |z|) and one Richardson level."""
    z = np.asarray(z, dtype=complex)
    n = z.shape[-1]
    h = 1e-6 * (1.0 + np.linalg.norm(z, axis=-1))[..., None]
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0

        def d(step):
            return (func(z + step * e) - func(z - step * e)) / (2.0 * step)

        cols.append((4.0 * d(h / 2) - d(h)) / 3.0)
    return np.stack(cols, axis=-1)


def cauchy_riemann_residual(f: HoloMap, z: Array, h: float = 1e-6) -> float:
    """Largest |df/dy - i df/dx| over the coordinates, by central differences."""
    z = np.asarray(z, dtype=complex)
    worst = 0.0
    for j in range(f.dim):
        e = np.zeros(f.dim)
        e[j] = 1.0
        dx = (f.func(z + h * e) - f.func(z - h * e)) / (2 * h)
        dy = (f.func(z + 1j * h * e) - f.func(z - 1j * h * e)) / (2 * h)
        scale = np.maximum(1.0, np.abs(dx))
        worst = max(worst, float(np.max(np.abs(dy - 1j * dx) / scale)))
    return worst


def scalar_map(f, df, name, inverse=None, image=None, entire=False, **meta) -> HoloMap:
    """Wrap elementwise functions of one complex variable as a 1-D HoloMap."""
    return HoloMap(
        func=lambda z: f(z),
        dim=1,
        jac_func=lambda z: df(z)[..., None],
        name=name,
        image=image,
        inverse_hint=(lambda w: inverse(w)) if inverse is not None else None,
        entire=entire,
        meta=meta,
    )


def compose(*maps: HoloMap) -> HoloMap:
    """``compose(f, g, h)`` is f o g o h; the domain is that of the innermost map."""
    if len(maps) == 1:
        return maps[0]
    outer = maps[0]
    inner = compose(*maps[1:])
    if outer.dim != inner.dim:
        raise ValueError("cannot compose maps of different dimension")

    def func(z):
        return outer.func(inner.func(z))

    def jac(z):
        return outer.jac(inner.func(z)) @ inner.jac(z)

    hint = None
    if outer.inverse_hint is not None and inner.inverse_hint is not None:
        def hint(w):
            return inner.inverse_hint(outer.inverse_hint(w))

    return HoloMap(func, inner.dim, jac, f"{outer.name}∘{inner.name}", None, hint,
                   inner.domain_radius, outer.entire and inner.entire, {"parts": (outer, inner)})


def linear_map(matrix, offset=None, name="linear", image=None) -> HoloMap:
    """Entire affine map z -> M z + b."""
    m = np.atleast_2d(np.asarray(matrix, dtype=complex))
    n = m.shape[0]
    b = np.zeros(n, dtype=complex) if offset is None else np.asarray(offset, dtype=complex).reshape(n)

    def func(z):
        return z @ m.T + b

    def jac(z):
        return np.broadcast_to(m, z.shape[:-1] + (n, n))

    def hint(w):
        return np.linalg.solve(m, (w - b)[..., None])[..., 0]

    return HoloMap(func, n, jac, name, image, hint, 1.0, True, {"matrix": m, "offset": b})


def scale(f: HoloMap, c: complex) -> HoloMap:
    """The scalar multiple c * f."""
    return compose(linear_map(c * np.eye(f.dim), name=f"{c}"), f).with_name(f"{c}·{f.name}")


def diagonal(*maps: HoloMap) -> HoloMap:
    """Product map (f1(z1), ..., fn(zn)) of one-dimensional maps."""
    n = len(maps)

    def func(z):
        return np.stack([f.func(z[..., j:j + 1])[..., 0] for j, f in enumerate(maps)], axis=-1)

    def jac(z):
        d = np.stack([f.jac(z[..., j:j + 1])[..., 0, 0] for j, f in enumerate(maps)], axis=-1)
        out = np.zeros(z.shape[:-1] + (n, n), dtype=complex)
        idx = np.arange(n)
        out[..., idx, idx] = d
        return out

    hint = None
    if all(f.inverse_hint is not None for f in maps):
        def hint(w):
            return np.stack([f.inverse_hint(w[..., j:j + 1])[..., 0] for j, f in enumerate(maps)], axis=-1)

    name = "×".join(f.name for f in maps)
    return HoloMap(func, n, jac, name, None, hint, 1.0, all(f.entire for f in maps), {"parts": maps})
