"""Matrix exponential and spectral bookkeeping for linear operators.

``expm`` uses scaling and squaring with the degree 13 Pade approximant
(coefficients and threshold from Higham, SIAM J. Matrix Anal. Appl. 2005).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import InternalInconsistencyError, PreconditionError

_B13 = np.array([
    64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
    129060195264000., 10559470521600., 670442572800., 33522128640., 1323241920.,
    40840800., 960960., 16380., 182., 1.,
])
THETA13 = 5.371920351148152
EIG_RESIDUAL_TOL = 1e-8
MARGIN_TOL = 1e-10


def expm(m) -> np.ndarray:
    """e^M for a square complex matrix M."""
    a = np.atleast_2d(np.asarray(m, dtype=complex))
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix exponential needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    norm1 = np.linalg.norm(a, 1)
    s = 0 if norm1 <= THETA13 else int(np.ceil(np.log2(norm1 / THETA13)))
    a = a / 2.0 ** s
    b = _B13
    ident = np.eye(n, dtype=complex)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    r = lu_solve(lu_factor(v - u), v + u)
    for _ in range(s):
        r = r @ r
    return r


def matrix_exp(a, t: float = 1.0) -> np.ndarray:
    """e^{-tA} for t >= 0."""
    if t < 0:
        raise PreconditionError("semigroup time must be non-negative")
    mat = a.matrix if isinstance(a, LinearOperatorSpec) else np.atleast_2d(np.asarray(a, dtype=complex))
    if t == 0:
        return np.eye(mat.shape[0], dtype=complex)
    return expm(-t * mat)


def expm_eig(m) -> tuple:
    """e^M through an eigendecomposition, with the eigenvector condition number."""
    a = np.atleast_2d(np.asarray(m, dtype=complex))
    w, v = np.linalg.eig(a)
    cond = np.linalg.cond(v)
    return v @ np.diag(np.exp(w)) @ np.linalg.inv(v), cond


@dataclass(frozen=True, eq=False)
class LinearOperatorSpec:
    """A square matrix with its validated spectrum.

    ``margin`` is the smallest real part of an eigenvalue; ``numerical_margin``
    is the smallest eigenvalue of the Hermitian part (A + A*)/2, which
    controls ||e^{-tA}|| <= 1 in the Euclidean norm.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(init=False)
    eig_residual: float = field(init=False)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.matrix, dtype=complex))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise PreconditionError("operator must be a square matrix")
        object.__setattr__(self, "matrix", a)
        w, v = np.linalg.eig(a)
        res = np.linalg.norm(a @ v - v * w[None, :], axis=0) / np.maximum(1.0, np.linalg.norm(a, 2))
        worst = float(res.max()) if res.size else 0.0
        if worst > EIG_RESIDUAL_TOL:
            raise InternalInconsistencyError(f"eigenpair residual {worst:.2e} exceeds {EIG_RESIDUAL_TOL}")
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eig_residual", worst)

    @classmethod
    def of(cls, a) -> "LinearOperatorSpec":
        return a if isinstance(a, LinearOperatorSpec) else cls(np.asarray(a, dtype=complex))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def margin(self) -> float:
        return float(np.min(self.eigenvalues.real))

    @property
    def numerical_margin(self) -> float:
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.min(np.linalg.eigvalsh(herm)))

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def accretive(self, tol: float = 1e-12) -> bool:
        """Nonnegative real spectrum (finite-dimensional accretivity)."""
        return self.margin >= -tol

    def bounded_away(self, tol: float = MARGIN_TOL) -> bool:
        return self.margin > tol

    def contractive(self, tol: float = 1e-12) -> bool:
        """||e^{-tA} y|| <= ||y|| for all t >= 0 in the Euclidean norm."""
        return self.numerical_margin >= -tol

    def exp(self, t: float) -> np.ndarray:
        return matrix_exp(self, t)


def block_diag(*mats) -> np.ndarray:
    mats = [np.atleast_2d(np.asarray(m, dtype=complex)) for m in mats]
    n = sum(m.shape[0] for m in mats)
    out = np.zeros((n, n), dtype=complex)
    k = 0
    for m in mats:
        d = m.shape[0]
        out[k:k + d, k:k + d] = m
        k += d
    return out
