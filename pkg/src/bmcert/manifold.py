"""Geometry of the product of spheres ``(S^{p-1})^n``.

A configuration is an ``n x p`` array whose rows have unit norm. Tangent
vectors at ``V`` are ``n x p`` arrays ``dV`` with ``<dV_i, V_i> = 0`` row by
row.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ._rng import SeedLike, make_rng
from .errors import DegenerateRow, DimensionMismatch, NonFinite, NotOnManifold, NotTangent, ParseError

UNIT_ROW_TOL = 1e-10
TANGENT_TOL = 1e-10
DEGENERATE_ROW = 1e-14


def check_configuration(V, tol: float = UNIT_ROW_TOL) -> np.ndarray:
    """Validate that ``V`` is an ``n x p`` matrix with unit rows and return it as floats."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] < 1 or V.shape[1] < 1:
        raise DimensionMismatch(f"configuration must be a non-empty n x p matrix, got {V.shape}")
    if not np.all(np.isfinite(V)):
        raise NonFinite("configuration has NaN or infinite entries")
    dev = np.abs(np.linalg.norm(V, axis=1) - 1.0).max()
    if dev > tol:
        raise NotOnManifold(f"row norms deviate from 1 by {dev:.3e} (tol {tol:.1e})")
    return V


def normalize_rows(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=1)
    if norms.min() < DEGENERATE_ROW:
        raise DegenerateRow(f"row {int(norms.argmin())} has norm {norms.min():.3e}")
    return X / norms[:, None]


def _same_shape(V, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != V.shape:
        raise DimensionMismatch(f"expected shape {V.shape}, got {X.shape}")
    return X


def row_inner(A, B) -> np.ndarray:
    """Row-wise inner products, i.e. ``diag(A B^T)``."""
    return np.einsum("ij,ij->i", A, B)


def project_tangent(V, X) -> np.ndarray:
    """``X - ddiag(X V^T) V``: orthogonal projection onto the tangent space at ``V``."""
    V = np.asarray(V, dtype=float)
    X = _same_shape(V, X)
    return X - row_inner(X, V)[:, None] * V


def tangency_residual(V, dV) -> float:
    return float(np.abs(row_inner(np.asarray(dV, dtype=float), V)).max())


def check_tangent(V, dV, tol: float = TANGENT_TOL) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    dV = _same_shape(V, dV)
    res = tangency_residual(V, dV)
    if res > tol:
        raise NotTangent(f"|<dV_i, V_i>| reaches {res:.3e} (tol {tol:.1e})")
    return dV


def retract(V, dV, t: float = 1.0) -> np.ndarray:
    """Row normalization of ``V + t dV``.

    Raises
    ------
    DegenerateRow
        If some row of ``V + t dV`` has norm below 1e-14.
    """
    V = np.asarray(V, dtype=float)
    dV = _same_shape(V, dV)
    if t == 0.0:
        return V.copy()
    return normalize_rows(V + t * dV)


def random_configuration(n: int, p: int, seed: SeedLike = 0) -> np.ndarray:
    """Rows i.i.d. uniform on ``S^{p-1}`` (normalized standard Gaussian rows)."""
    if n < 1 or p < 1:
        raise DimensionMismatch("n and p must be >= 1")
    rng = make_rng(seed)
    while True:
        G = rng.standard_normal((n, p))
        norms = np.linalg.norm(G, axis=1)
        if norms.min() > 0.0:
            return G / norms[:, None]


def random_tangent(V, seed: SeedLike = 0) -> np.ndarray:
    """Gaussian ambient matrix projected onto the tangent space at ``V``."""
    V = np.asarray(V, dtype=float)
    rng = make_rng(seed)
    return project_tangent(V, rng.standard_normal(V.shape))


def align_columns(V) -> tuple[np.ndarray, np.ndarray]:
    """Rotate ``V`` on the right so that ``(VG)^T 1`` is a non-negative multiple of ``e_1``.

    ``G`` is a Householder reflection sending ``V^T 1`` to ``-sign(u_1) ||u|| e_1``
    (the stable choice), followed by a sign flip of column 1 when that lands on
    the negative axis. Returns ``(V G, G)``; ``G = I`` when ``V^T 1 = 0``.
    """
    V = np.asarray(V, dtype=float)
    p = V.shape[1]
    u = V.sum(axis=0)
    norm_u = float(np.linalg.norm(u))
    if norm_u == 0.0:
        return V.copy(), np.eye(p)
    sign = 1.0 if u[0] >= 0.0 else -1.0
    w = u.copy()
    w[0] += sign * norm_u
    G = np.eye(p) - 2.0 * np.outer(w, w) / float(w @ w)
    # G u = -sign * ||u|| e_1
    if sign > 0:
        G[:, 0] = -G[:, 0]
    return V @ G, G


def alignment_residual(V) -> float:
    """How far ``V`` is from satisfying ``<v_k, 1> = 0`` (k >= 2) and ``<v_1, 1> >= 0``."""
    u = np.asarray(V, dtype=float).sum(axis=0)
    tail = float(np.abs(u[1:]).max()) if u.shape[0] > 1 else 0.0
    return max(tail, max(0.0, -float(u[0])))


def order_parameter(V) -> float:
    """``||V^T 1|| / n``; equals 1 exactly when all rows coincide."""
    V = np.asarray(V, dtype=float)
    # clamp the rounding excess at perfect alignment
    return min(1.0, float(np.linalg.norm(V.sum(axis=0)) / V.shape[0]))


# Configuration text format: first line ``n p``, then n rows of p floats.

RENORMALIZE_TOL = 1e-6


def format_configuration(V) -> str:
    V = np.asarray(V, dtype=float)
    lines = [f"{V.shape[0]} {V.shape[1]}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in V]
    return "\n".join(lines) + "\n"


def parse_configuration(text: str) -> np.ndarray:
    """Parse a configuration; rows within 1e-6 of unit norm are renormalized, others rejected."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty configuration file")
    head = lines[0].split()
    try:
        n, p = (int(tok) for tok in head)
    except ValueError as exc:
        raise ParseError(f"bad header {lines[0]!r}: expected 'n p'") from exc
    if n < 1 or p < 1:
        raise ParseError(f"dimensions must be >= 1, got n={n}, p={p}")
    if len(lines) != n + 1:
        raise ParseError(f"expected {n} rows, found {len(lines) - 1}")
    rows = [ln.split() for ln in lines[1:]]
    if any(len(r) != p for r in rows):
        raise ParseError(f"rows must each hold {p} values")
    try:
        V = np.array([[float(tok) for tok in r] for r in rows])
    except ValueError as exc:
        raise ParseError(f"non-numeric entry: {exc}") from exc
    if not np.all(np.isfinite(V)):
        raise ParseError("configuration has NaN or infinite entries")
    dev = np.abs(np.linalg.norm(V, axis=1) - 1.0).max()
    if dev > RENORMALIZE_TOL:
        raise NotOnManifold(f"row norms deviate from 1 by {dev:.3e} (tol {RENORMALIZE_TOL:.0e})")
    return normalize_rows(V)


def save_configuration(path, V) -> None:
    Path(path).write_text(format_configuration(V))


def load_configuration(path) -> np.ndarray:
    return parse_configuration(Path(path).read_text())
