"""Landscape of the factorized problem ``min <L, V V^T>`` over ``(S^{p-1})^n``.

Everything here works with the Laplacian form of the objective. A cost
matrix ``C`` and a sign vector ``x`` enter only through
:func:`build_laplacian`; energies are ``<L, V V^T>``, which is zero at the
planted solution ``V V^T = x x^T``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import symlin
from .errors import BadSignVector, DimensionMismatch, TooLarge
from .manifold import check_tangent, row_inner

MAX_HESSIAN_DIM = 5000
VERDICT_SLACK = 1e-9
DEFAULT_PSD_TOL = 1e-9


@dataclass(frozen=True)
class Laplacian:
    """``L = ddiag(C x x^T) - C`` with its spectrum cached."""

    L: np.ndarray
    x: np.ndarray
    spectrum: symlin.EigenDecomp = field(repr=False)

    @property
    def n(self) -> int:
        return self.L.shape[0]

    @property
    def lambda1(self) -> float:
        return float(self.spectrum.eigenvalues[0])

    @property
    def lambda2(self) -> float:
        w = self.spectrum.eigenvalues
        return float(w[1]) if w.shape[0] > 1 else float(w[0])

    @property
    def lambdaN(self) -> float:
        return float(self.spectrum.eigenvalues[-1])

    @property
    def norm(self) -> float:
        return symlin.spectral_norm(self.L, self.spectrum)

    @property
    def cond(self) -> float:
        """``lambda_n / lambda_2``; infinite when ``lambda_2 <= 0``."""
        return self.lambdaN / self.lambda2 if self.lambda2 > 0 else float("inf")

    def scaled(self, c: float) -> "Laplacian":
        return from_laplacian_matrix(c * self.L, self.x)


class Optimality(enum.Enum):
    UNIQUE_OPTIMAL = "UniqueOptimal"
    OPTIMAL_MAYBE_NOT_UNIQUE = "OptimalMaybeNotUnique"
    NOT_CERTIFIED = "NotCertified"


class Verdict(enum.Enum):
    BENIGN_CERTIFIED = "BenignCertified"
    NOT_CERTIFIED = "NotCertified"


@dataclass(frozen=True)
class Tolerances:
    grad_tol: float
    hess_tol: float
    opt_tol: float = 1e-6


@dataclass(frozen=True)
class CriticalityReport:
    grad_norm: float
    min_hess_eig: float
    energy: float
    is_first_order: bool
    is_second_order: bool
    is_global: bool
    distance_to_optimum: float
    tolerances: Tolerances

    def to_dict(self) -> dict:
        return {
            "grad_norm": self.grad_norm,
            "min_hess_eig": self.min_hess_eig,
            "energy": self.energy,
            "is_first_order": self.is_first_order,
            "is_second_order": self.is_second_order,
            "is_global": self.is_global,
            "distance_to_optimum": self.distance_to_optimum,
            "tolerances": {
                "grad_tol": self.tolerances.grad_tol,
                "hess_tol": self.tolerances.hess_tol,
                "opt_tol": self.tolerances.opt_tol,
            },
        }


def check_sign_vector(x, n: int) -> np.ndarray:
    if x is None:
        return np.ones(n)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != n:
        raise DimensionMismatch(f"sign vector has length {x.shape[0]}, expected {n}")
    if not np.all(np.abs(x) == 1.0):
        raise BadSignVector("ground truth must have entries in {-1, +1}")
    return x


def build_laplacian(C, x=None) -> Laplacian:
    """Laplacian of cost matrix ``C`` at sign vector ``x`` (default all ones)."""
    C = symlin.as_symmetric(C)
    x = check_sign_vector(x, C.shape[0])
    L = np.diag((C @ x) * x) - C
    return from_laplacian_matrix(L, x)


def from_laplacian_matrix(L, x=None) -> Laplacian:
    L = symlin.as_symmetric(L)
    x = check_sign_vector(x, L.shape[0])
    return Laplacian(L, x, symlin.eig(L))


def _matrix(L) -> np.ndarray:
    return L.L if isinstance(L, Laplacian) else np.asarray(L, dtype=float)


def _check_dims(L: np.ndarray, V: np.ndarray) -> None:
    if V.ndim != 2 or V.shape[0] != L.shape[0]:
        raise DimensionMismatch(f"V has shape {V.shape}, L is {L.shape[0]} x {L.shape[0]}")


def rank1_optimality(lap: Laplacian, tol: float = DEFAULT_PSD_TOL) -> Optimality:
    scale = max(1.0, lap.norm)
    if not symlin.is_psd(lap.L, tol, lap.spectrum):
        return Optimality.NOT_CERTIFIED
    if lap.lambda2 > tol * scale:
        return Optimality.UNIQUE_OPTIMAL
    return Optimality.OPTIMAL_MAYBE_NOT_UNIQUE


def theorem1_verdict(lap: Laplacian, p: int, tol: float = DEFAULT_PSD_TOL) -> Verdict:
    """Benign iff ``x x^T`` is the unique SDP optimum and ``p > lambda_n / lambda_2``."""
    if rank1_optimality(lap, tol) is not Optimality.UNIQUE_OPTIMAL:
        return Verdict.NOT_CERTIFIED
    if p > lap.cond * (1.0 + VERDICT_SLACK):
        return Verdict.BENIGN_CERTIFIED
    return Verdict.NOT_CERTIFIED


def energy(L, V) -> float:
    """``<L, V V^T>`` evaluated as ``<L V, V>``."""
    L = _matrix(L)
    V = np.asarray(V, dtype=float)
    return float(np.sum((L @ V) * V))


def multipliers(L, V) -> np.ndarray:
    """``diag(L V V^T)``, the row-wise Lagrange multipliers of the unit-norm constraints."""
    return row_inner(_matrix(L) @ V, V)


def shifted_operator(L, V) -> np.ndarray:
    """``S = L - ddiag(L V V^T)``."""
    L = _matrix(L)
    return L - np.diag(multipliers(L, V))


def riemannian_gradient(L, V) -> np.ndarray:
    """``2 (L - ddiag(L V V^T)) V``."""
    L = _matrix(L)
    V = np.asarray(V, dtype=float)
    _check_dims(L, V)
    LV = L @ V
    return 2.0 * (LV - row_inner(LV, V)[:, None] * V)


def hessian_quadratic_form(L, V, dV, tangent_tol: float = 1e-8) -> float:
    """``2 <(L - ddiag(L V V^T)) dV, dV>`` for a tangent ``dV``."""
    L = _matrix(L)
    V = np.asarray(V, dtype=float)
    _check_dims(L, V)
    dV = check_tangent(V, dV, tangent_tol)
    mu = multipliers(L, V)
    return float(2.0 * (np.sum((L @ dV) * dV) - mu @ np.sum(dV * dV, axis=1)))


def tangent_basis(V) -> np.ndarray:
    """Orthonormal bases of the row tangent spaces, shape ``(n, p, p - 1)``.

    For row ``V_i``, Gram-Schmidt runs over the standard basis with the axis
    most aligned with ``V_i`` skipped. Columns of ``U[i]`` are orthonormal and
    orthogonal to ``V_i``.
    """
    V = np.asarray(V, dtype=float)
    n, p = V.shape
    U = np.empty((n, p, p - 1))
    eye = np.eye(p)
    skip = np.abs(V).argmax(axis=1)
    for i in range(n):
        vecs = [V[i]]
        for k in range(p):
            if k == skip[i]:
                continue
            w = eye[k].copy()
            for _ in range(2):  # reorthogonalize once for stability
                for b in vecs:
                    w -= (b @ w) * b
            w /= np.linalg.norm(w)
            vecs.append(w)
        U[i] = np.array(vecs[1:]).T
    return U


def dense_tangent_hessian(L, V, basis: np.ndarray | None = None) -> np.ndarray:
    """Matrix of the Hessian quadratic form in the basis from :func:`tangent_basis`.

    Entry ``[(i, a), (j, b)]`` is ``2 S_ij <U_i[:, a], U_j[:, b]>`` with
    ``S = L - ddiag(L V V^T)``; the size is ``n (p - 1)``.
    """
    L = _matrix(L)
    V = np.asarray(V, dtype=float)
    _check_dims(L, V)
    n, p = V.shape
    if p < 2:
        raise DimensionMismatch("tangent Hessian needs p >= 2")
    dim = n * (p - 1)
    if dim > MAX_HESSIAN_DIM:
        raise TooLarge(f"tangent Hessian would be {dim} x {dim} (cap {MAX_HESSIAN_DIM})")
    U = tangent_basis(V) if basis is None else basis
    S = shifted_operator(L, V)
    gram = np.einsum("ipa,jpb->iajb", U, U)
    H = 2.0 * S[:, None, :, None] * gram
    return symlin.as_symmetric(H.reshape(dim, dim))


def coefficients_to_tangent(basis: np.ndarray, coef) -> np.ndarray:
    """Map a coefficient vector of length ``n (p - 1)`` to an ``n x p`` tangent matrix."""
    n, p, q = basis.shape
    return np.einsum("ipa,ia->ip", basis, np.asarray(coef, dtype=float).reshape(n, q))


def default_tolerances(L, p: int, opt_tol: float = 1e-6) -> Tolerances:
    """``grad_tol = 1e-8 max(1, ||L||) sqrt(n p)``, ``hess_tol = 1e-8 max(1, ||L||)``."""
    if isinstance(L, Laplacian):
        scale, n = max(1.0, L.norm), L.n
    else:
        L = np.asarray(L, dtype=float)
        scale, n = max(1.0, symlin.spectral_norm(L)), L.shape[0]
    return Tolerances(1e-8 * scale * np.sqrt(n * p), 1e-8 * scale, opt_tol)


def distance_to_optimum(V, x) -> float:
    """``||V V^T - x x^T||_F / n``."""
    V = np.asarray(V, dtype=float)
    x = np.asarray(x, dtype=float)
    n = V.shape[0]
    if n <= 4000:
        return float(np.linalg.norm(V @ V.T - np.outer(x, x)) / n)
    # expanded form avoids the n x n matrices but loses accuracy near zero
    gram = V.T @ V
    xv = x @ V
    sq = float(np.sum(gram * gram) - 2.0 * xv @ xv + n * n)
    return np.sqrt(max(sq, 0.0)) / n


def min_hessian_eigenvalue(L, V) -> float:
    if np.asarray(V).shape[1] < 2:
        # (S^0)^n is discrete: the tangent space is {0}
        return 0.0
    return float(symlin.eig(dense_tangent_hessian(L, V)).eigenvalues[0])


def classify_point(
    lap: Laplacian, V, tols: Tolerances | None = None, min_hess_eig: float | None = None
) -> CriticalityReport:
    """Gradient norm, smallest tangent Hessian eigenvalue, energy and the three verdicts.

    ``min_hess_eig`` may be passed in when the caller already diagonalized the
    tangent Hessian at ``V``.
    """
    V = np.asarray(V, dtype=float)
    tols = tols if tols is not None else default_tolerances(lap, V.shape[1])
    grad_norm = float(np.linalg.norm(riemannian_gradient(lap, V)))
    min_eig = min_hessian_eigenvalue(lap, V) if min_hess_eig is None else float(min_hess_eig)
    first = grad_norm <= tols.grad_tol
    second = first and min_eig >= -tols.hess_tol
    dist = distance_to_optimum(V, lap.x)
    return CriticalityReport(
        grad_norm=grad_norm,
        min_hess_eig=min_eig,
        energy=energy(lap, V),
        is_first_order=first,
        is_second_order=second,
        is_global=dist <= tols.opt_tol,
        distance_to_optimum=dist,
        tolerances=tols,
    )
