"""Catalog of concrete maps of the unit disk and ball, with exact image tests."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..errors import PreconditionError
from .maps import HoloMap, ImageDescriptor, linear_map, scalar_map


def _disk(center=0.0, radius=1.0, name="disk"):
    return ImageDescriptor(name, lambda w: radius - np.abs(w[..., 0] - center))


def _ball(name="ball"):
    return ImageDescriptor(name, lambda w: 1.0 - np.linalg.norm(w, axis=-1))


def _slit_margin(w):
    # C minus (-inf, -1/4]; on the slit the margin is minus the depth past the tip
    w = w[..., 0]
    on_slit = (w.imag == 0) & (w.real <= -0.25)
    inside = np.where(w.real <= -0.25, np.abs(w.imag), np.abs(w + 0.25))
    return np.where(on_slit, w.real + 0.25, inside)


def _log_margin(w):
    w = w[..., 0]
    with np.errstate(over="ignore", invalid="ignore"):
        disk = 1.0 - np.abs(np.exp(-w) - 1.0)
    strip = np.pi / 2 - np.abs(w.imag)
    out = np.minimum(disk, strip)
    return np.where(np.isfinite(out), out, -np.inf)


def identity(n: int = 1) -> HoloMap:
    f = linear_map(np.eye(n), name="identity", image=_ball("unit ball"))
    return replace(f, meta={"identity": True})


def koebe() -> HoloMap:
    """k(z) = z / (1 - z)^2; image is the plane minus (-inf, -1/4]."""

    def inv(w):
        w = np.asarray(w, dtype=complex)
        safe = np.where(w == 0, 1.0, w)
        z = (2 * safe + 1 - np.sqrt(4 * safe + 1)) / (2 * safe)
        return np.where(w == 0, 0.0, z)

    return scalar_map(lambda z: z / (1 - z) ** 2, lambda z: (1 + z) / (1 - z) ** 3, "koebe",
                      inverse=inv, image=ImageDescriptor("slit plane", _slit_margin),
                      normalized=True)


def flip() -> HoloMap:
    """1 - z; image is the disk |w - 1| < 1, with 0 on its boundary."""
    return scalar_map(lambda z: 1 - z, lambda z: -np.ones_like(z), "flip", inverse=lambda w: 1 - w,
                      image=_disk(1.0, 1.0, "|w-1|<1"), entire=True)


def cayley() -> HoloMap:
    """z / (1 - z); image is the half-plane Re w > -1/2."""
    return scalar_map(lambda z: z / (1 - z), lambda z: 1 / (1 - z) ** 2, "cayley",
                      inverse=lambda w: w / (1 + w),
                      image=ImageDescriptor("Re w > -1/2", lambda w: w[..., 0].real + 0.5),
                      normalized=True)


def right_half_plane() -> HoloMap:
    """(1 - z) / (1 + z); image is Re w > 0."""
    return scalar_map(lambda z: (1 - z) / (1 + z), lambda z: -2 / (1 + z) ** 2, "half-plane",
                      inverse=lambda w: (1 - w) / (1 + w),
                      image=ImageDescriptor("Re w > 0", lambda w: w[..., 0].real))


def disk_automorphism(a: complex) -> HoloMap:
    """(z - a) / (1 - conj(a) z)."""
    a = complex(a)
    if abs(a) >= 1:
        raise PreconditionError("automorphism parameter must lie in the open disk")
    ac = a.conjugate()
    return scalar_map(lambda z: (z - a) / (1 - ac * z), lambda z: (1 - abs(a) ** 2) / (1 - ac * z) ** 2,
                      f"aut({a:g})", inverse=lambda w: (w + a) / (1 + ac * w), image=_disk(),
                      param=a)


def mobius_contraction(c: float) -> HoloMap:
    """(1 - c) z / (1 - c z), a univalent self-map of the disk fixing 0 and 1.

    ``c = 1/2`` gives z / (2 - z).
    """
    if not 0 <= c < 1:
        raise PreconditionError("contraction parameter must lie in [0, 1)")
    return scalar_map(lambda z: (1 - c) * z / (1 - c * z), lambda z: (1 - c) / (1 - c * z) ** 2,
                      f"contr({c:g})", inverse=lambda w: w / (1 - c + c * w),
                      image=_disk(c / (1 + c), 1 / (1 + c)), param=c)


def halving() -> HoloMap:
    """z / (2 - z)."""
    return mobius_contraction(0.5).with_name("halving")


def hyperbolic_automorphism(c: float) -> HoloMap:
    """(z + c) / (1 + c z) for real c in (-1, 1); fixes +1 and -1."""
    if not -1 < c < 1:
        raise PreconditionError("hyperbolic parameter must lie in (-1, 1)")
    return scalar_map(lambda z: (z + c) / (1 + c * z), lambda z: (1 - c * c) / (1 + c * z) ** 2,
                      f"hyp({c:g})", inverse=lambda w: (w - c) / (1 - c * w), image=_disk(), param=c)


def log_map() -> HoloMap:
    """log(1 / (1 - z)), the principal branch."""
    return scalar_map(lambda z: -np.log(1 - z), lambda z: 1 / (1 - z), "log",
                      inverse=lambda w: 1 - np.exp(-w), image=ImageDescriptor("log image", _log_margin),
                      normalized=True)


def rotation(theta: float) -> HoloMap:
    return scalar_map(lambda z: np.exp(1j * theta) * z, lambda z: np.full_like(z, np.exp(1j * theta)),
                      f"rot({theta:g})", inverse=lambda w: np.exp(-1j * theta) * w, image=_disk(),
                      entire=True, param=theta)


def dilation(s: complex) -> HoloMap:
    s = complex(s)
    return scalar_map(lambda z: s * z, lambda z: np.full_like(z, s), f"dil({s:g})",
                      inverse=lambda w: w / s, image=_disk(0.0, abs(s)), entire=True, param=s)


def unitary(u) -> HoloMap:
    u = np.asarray(u, dtype=complex)
    if not np.allclose(u.conj().T @ u, np.eye(len(u)), atol=1e-12):
        raise PreconditionError("matrix is not unitary")
    return linear_map(u, name="unitary", image=_ball())


def ball_map(matrix) -> HoloMap:
    """Linear map of C^n; the image of the Euclidean ball is an ellipsoid."""
    m = np.atleast_2d(np.asarray(matrix, dtype=complex))
    minv = np.linalg.inv(m)
    return linear_map(m, name="linear", image=ImageDescriptor(
        "ellipsoid", lambda w: 1.0 - np.linalg.norm(w @ minv.T, axis=-1)))


CATALOG = {
    "identity": (lambda n=1: identity(int(n)), {"n": "int >= 1"}),
    "koebe": (koebe, {}),
    "flip": (flip, {}),
    "cayley": (cayley, {}),
    "half-plane": (right_half_plane, {}),
    "disk-automorphism": (lambda a_re=0.0, a_im=0.0: disk_automorphism(complex(a_re, a_im)),
                          {"a_re": "real", "a_im": "real", "constraint": "|a| < 1"}),
    "mobius-contraction": (lambda c=0.5: mobius_contraction(float(c)), {"c": "real in [0, 1)"}),
    "halving": (halving, {}),
    "hyperbolic-automorphism": (lambda c=0.5: hyperbolic_automorphism(float(c)), {"c": "real in (-1, 1)"}),
    "log": (log_map, {}),
    "rotation": (lambda theta=0.0: rotation(float(theta)), {"theta": "real"}),
    "dilation": (lambda s=0.5: dilation(complex(s)), {"s": "complex, |s| <= 1 for a self-map"}),
}


def catalog_map(map_id: str, **params) -> HoloMap:
    """Build a catalog map from its identifier and keyword parameters."""
    try:
        factory, _ = CATALOG[map_id]
    except KeyError:
        raise PreconditionError(f"unknown catalog map {map_id!r}") from None
    return factory(**params)
