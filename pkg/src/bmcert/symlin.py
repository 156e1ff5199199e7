"""Dense symmetric linear algebra.

Matrices are plain ``float64`` numpy arrays. :func:`as_symmetric` is the
single entry point that validates and symmetrizes, so anything passed through
it satisfies ``A[i, j] == A[j, i]`` bit for bit.

The eigensolver is a cyclic Jacobi method in parallel (round-robin) order:
each round applies ``n // 2`` disjoint plane rotations at once, which keeps
the inner loop vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DimensionMismatch, NonFinite

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 80


@dataclass(frozen=True)
class EigenDecomp:
    """Eigenvalues in ascending order and the matching orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


def as_symmetric(A) -> np.ndarray:
    """Return ``(A + A.T) / 2`` as a fresh float array after shape/finiteness checks."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix has NaN or infinite entries")
    return (A + A.T) / 2.0


@lru_cache(maxsize=64)
def _round_robin(n: int) -> tuple:
    """Pairings covering every index pair exactly once over ``n - 1`` (or ``n``) rounds."""
    m = n + (n % 2)
    order = list(range(m))
    rounds = []
    for _ in range(m - 1):
        top = np.array(order[: m // 2])
        bottom = np.array(order[m // 2:][::-1])
        keep = (top < n) & (bottom < n)
        rounds.append((top[keep], bottom[keep]))
        order = [order[0], order[-1]] + order[1:-1]
    return tuple(rounds)


def eig(A, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomp:
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius mass drops below
    ``tol * ||A||_F``.

    Raises
    ------
    NonFinite
        If ``A`` has a NaN or infinite entry.
    ConvergenceError
        If ``max_sweeps`` sweeps do not reach the tolerance.
    """
    A = as_symmetric(A)
    n = A.shape[0]
    Q = np.eye(n)
    fro = np.linalg.norm(A)
    sweeps = 0
    if n > 1 and fro > 0.0:
        schedule = _round_robin(n)
        offdiag = ~np.eye(n, dtype=bool)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            while True:
                # summed directly: ||A||^2 - ||diag||^2 cancels catastrophically
                off = float(np.linalg.norm(A[offdiag]))
                if off <= tol * fro:
                    break
                if sweeps >= max_sweeps:
                    raise ConvergenceError(
                        f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e}, ||A||_F={fro:.3e})"
                    )
                sweeps += 1
                for P, R in schedule:
                    apq = A[P, R]
                    active = apq != 0.0
                    if not active.any():
                        continue
                    theta = (A[R, R] - A[P, P]) / np.where(active, 2.0 * apq, 1.0)
                    t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                    # theta**2 overflow gives t = 0, the correct limit
                    t = np.where(active & np.isfinite(t), t, 0.0)
                    c = 1.0 / np.sqrt(t * t + 1.0)
                    s = t * c
                    cp, cq = A[:, P], A[:, R]
                    A[:, P] = cp * c - cq * s
                    A[:, R] = cp * s + cq * c
                    rp, rq = A[P, :], A[R, :]
                    A[P, :] = c[:, None] * rp - s[:, None] * rq
                    A[R, :] = s[:, None] * rp + c[:, None] * rq
                    A[P, R] = 0.0
                    A[R, P] = 0.0
                    vp, vq = Q[:, P], Q[:, R]
                    Q[:, P] = vp * c - vq * s
                    Q[:, R] = vp * s + vq * c
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return EigenDecomp(w[order], Q[:, order], sweeps)


def eigvals(A) -> np.ndarray:
    return eig(A).eigenvalues


def spectral_norm(A, spectrum: EigenDecomp | None = None) -> float:
    """``max(|lambda_1|, |lambda_n|)``; reuses ``spectrum`` when it is supplied."""
    w = (spectrum if spectrum is not None else eig(A)).eigenvalues
    return float(max(abs(w[0]), abs(w[-1])))


def hadamard(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes differ: {A.shape} vs {B.shape}")
    return A * B


def centering_projector(n: int) -> np.ndarray:
    """``I_n - (1/n) 1 1^T``, the projector onto the complement of the all-ones vector."""
    if n < 1:
        raise DimensionMismatch("n must be >= 1")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def perp_inner(X) -> float:
    """``<P_perp, X>`` computed as ``tr(X) - (1/n) 1^T X 1`` without forming ``P_perp``."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    return float(np.trace(X) - X.sum() / n)


def is_psd(A, tol: float = 0.0, spectrum: EigenDecomp | None = None) -> bool:
    """True iff ``lambda_1(A) >= -tol * max(1, ||A||)``."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    spectrum = spectrum if spectrum is not None else eig(A)
    scale = max(1.0, spectral_norm(A, spectrum))
    return bool(spectrum.eigenvalues[0] >= -tol * scale)
