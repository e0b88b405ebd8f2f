"""Branch-continuous logarithms and powers along radial paths.

A zero-free function ``g`` on the ball has a logarithm that is continuous
along each segment [0, z].  It is anchored at the principal logarithm of
``g(0)``.  Complex powers ``g**alpha`` are then ``exp(alpha * L)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..errors import InternalInconsistencyError, ZeroOnPathError

ZERO_TOL = 1e-12
MAX_STEP = 0.5  # radians of phase change allowed between path nodes


def _flatten(z):
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        z = z[None]
    return z.reshape(-1, z.shape[-1]), z.shape[:-1]


def continuous_log(g: Callable, z, *, method: str = "unwrap", nodes: int = 16,
                   max_nodes: int = 1 << 14, zero_tol: float = ZERO_TOL, log0=None):
    """Logarithm of ``g`` at ``z``, continued along the segment from 0.

    Parameters
    ----------
    g : callable
        Maps points of shape (..., n) to complex values of shape (...).
    z : array_like
        Endpoints, shape (..., n).
    log0 : complex, optional
        Logarithm of g(0) to start from; the principal value by default.
    method : {"unwrap", "quad"}
        ``unwrap`` samples ``g`` on the path and accumulates phase
        increments, refining until every increment is below 0.5 rad.
        ``quad`` integrates ``d/dt log g(t z)`` with composite Gauss-Legendre
        panels, differentiating along the path with a complex four-point stencil.

    Raises
    ------
    ZeroOnPathError
        If ``|g| < zero_tol`` at some node.
    """
    flat, lead = _flatten(z)
    n = flat.shape[-1]
    g0 = complex(np.asarray(g(np.zeros((1, n), dtype=complex)))[0])
    if abs(g0) < zero_tol:
        raise ZeroOnPathError("function vanishes at the path origin")
    # "+ 0j" clears a negative zero so the principal argument lies in (-pi, pi]
    log0 = np.log(g0 + 0j) if log0 is None else complex(log0)
    if method == "unwrap":
        out = _unwrap(g, flat, log0, nodes, max_nodes, zero_tol)
    elif method == "quad":
        out = _quad(g, flat, log0, zero_tol)
    else:
        raise ValueError(f"unknown continuation method {method!r}")
    return out.reshape(lead)


def _unwrap(g, flat, log0, nodes, max_nodes, zero_tol):
    out = np.empty(flat.shape[0], dtype=complex)
    todo = np.arange(flat.shape[0])
    k = nodes
    while todo.size:
        t = np.linspace(0.0, 1.0, k + 1)
        vals = np.asarray(g(t[:, None, None] * flat[todo][None]))
        small = np.abs(vals) < zero_tol
        if np.any(small | ~np.isfinite(vals)):
            bad = todo[np.any(small | ~np.isfinite(vals), axis=0)][0]
            raise ZeroOnPathError(f"zero-free function vanishes on the path to {flat[bad]}")
        inc = np.angle(vals[1:] / vals[:-1])
        ok = np.max(np.abs(inc), axis=0) <= MAX_STEP
        theta = log0.imag + inc.sum(axis=0)
        end = vals[-1]
        # snap the accumulated phase onto the exact argument of the endpoint
        theta = np.angle(end) + 2 * np.pi * np.round((theta - np.angle(end)) / (2 * np.pi))
        logs = np.log(np.abs(end)) + 1j * theta
        out[todo[ok]] = logs[ok]
        todo = todo[~ok]
        k *= 4
        if todo.size and k > max_nodes:
            raise InternalInconsistencyError("phase continuation did not resolve; function varies too fast")
    return out


def _quad(g, flat, log0, zero_tol, order: int = 20):
    x, w = leggauss(order)
    h = 2.5e-4
    prev = None
    panels = 4
    while panels <= 1024:
        edges = np.linspace(0.0, 1.0, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1] - edges[0])
        t = (mid[:, None] + half * x[None, :]).ravel()
        pts = t[:, None, None] * flat[None]
        gv = np.asarray(g(pts))
        if np.any(np.abs(gv) < zero_tol):
            raise ZeroOnPathError("zero-free function vanishes on the path")
        # derivative along the path from the four-point stencil at the roots of unity,
        # exact for holomorphic g up to O(h^4)
        dg = sum(np.asarray(g(pts + h * u * flat[None])) / u for u in (1, 1j, -1, -1j)) / (4 * h)
        weights = np.tile(w * half, panels)
        total = log0 + np.tensordot(weights, dg / gv, axes=(0, 0))
        if prev is not None and np.max(np.abs(total - prev)) < 1e-11:
            return total
        prev = total
        panels *= 2
    return prev


def branch_power(g: Callable, alpha: complex, z, **kw):
    """``g(z)**alpha`` on the branch continued radially from the principal value at 0."""
    return np.exp(alpha * continuous_log(g, z, **kw))


@dataclass(frozen=True)
class BranchTracker:
    """Holds a zero-free function and evaluates its continuous log and powers."""

    g: Callable
    method: str = "unwrap"

    def log(self, z):
        return continuous_log(self.g, z, method=self.method)

    def power(self, alpha: complex, z):
        return np.exp(alpha * self.log(z))
