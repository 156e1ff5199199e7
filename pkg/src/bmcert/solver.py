"""Riemannian descent to second-order critical points.

Gradient descent with Armijo backtracking on ``<L, V V^T>``. Whenever the
gradient falls below ``grad_tol`` the dense tangent Hessian is inspected; a
curvature below ``-hess_tol`` triggers a line search along the most negative
eigendirection (both signs tried, the lower energy kept).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import landscape, symlin
from ._rng import make_rng
from .errors import DegenerateRow, DimensionMismatch
from .landscape import CriticalityReport, Laplacian, Tolerances
from .manifold import check_configuration, retract


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 20000
    grad_tol: float | None = None
    hess_tol: float | None = None
    opt_tol: float = 1e-6
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    escape_step: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.escape_step <= 0.0:
            raise ValueError("escape_step must be positive")
        for name in ("grad_tol", "hess_tol"):
            value = getattr(self, name)
            if value is not None and value < 0.0:
                raise ValueError(f"{name} must be non-negative")

    def tolerances(self, lap: Laplacian, p: int) -> Tolerances:
        base = landscape.default_tolerances(lap, p, self.opt_tol)
        return Tolerances(
            self.grad_tol if self.grad_tol is not None else base.grad_tol,
            self.hess_tol if self.hess_tol is not None else base.hess_tol,
            self.opt_tol,
        )


@dataclass
class SolveReport:
    V_final: np.ndarray
    report: CriticalityReport
    outer_iters: int
    escapes_taken: int
    energy_trace: np.ndarray = field(repr=False)
    timed_out: bool = False
    stalled: bool = False

    @property
    def converged(self) -> bool:
        return self.report.is_second_order

    def to_dict(self) -> dict:
        return {
            "outer_iters": self.outer_iters,
            "escapes_taken": self.escapes_taken,
            "timed_out": self.timed_out,
            "stalled": self.stalled,
            "converged": self.converged,
            "final_energy": float(self.energy_trace[-1]),
            "energy_trace": self.energy_trace.tolist(),
            "report": self.report.to_dict(),
        }


def _lowest_curvature(lap: Laplacian, V) -> tuple[np.ndarray | None, float]:
    if V.shape[1] < 2:
        return None, 0.0
    basis = landscape.tangent_basis(V)
    spec = symlin.eig(landscape.dense_tangent_hessian(lap, V, basis))
    dV = landscape.coefficients_to_tangent(basis, spec.eigenvectors[:, 0])
    return dV / np.linalg.norm(dV), float(spec.eigenvalues[0])


def escape_direction(lap: Laplacian, V, tols: Tolerances | None = None):
    """Most negative curvature direction at ``V``, or ``None`` if the Hessian is PSD within ``hess_tol``.

    Returns ``(dV, curvature)`` with ``||dV||_F = 1`` and
    ``curvature = hessian_quadratic_form(lap, V, dV)``.
    """
    V = np.asarray(V, dtype=float)
    tols = tols if tols is not None else landscape.default_tolerances(lap, V.shape[1])
    dV, curvature = _lowest_curvature(lap, V)
    if dV is None or curvature >= -tols.hess_tol:
        return None
    return dV, curvature


def _armijo_step(lap, V, f, G, gn2, t0, opts):
    t = t0
    floor = t0 * 1e-20
    while t >= floor:
        try:
            Vt = retract(V, G, -t)
        except DegenerateRow:
            Vt = None
        if Vt is not None:
            ft = landscape.energy(lap, Vt)
            if ft <= f - opts.armijo_c * t * gn2:
                return Vt, ft
        t *= opts.backtrack_factor
    return None, f


def _curvature_step(lap, V, f, d, curvature, signs, opts):
    best = (None, f)
    for sign in signs:
        t = opts.escape_step
        while t >= opts.escape_step * 1e-12:
            try:
                Vt = retract(V, d, sign * t)
            except DegenerateRow:
                Vt = None
            if Vt is not None:
                ft = landscape.energy(lap, Vt)
                if ft <= f + opts.armijo_c * 0.5 * t * t * curvature and ft < best[1]:
                    best = (Vt, ft)
                    break
            t *= opts.backtrack_factor
    return best


def solve(lap: Laplacian, V0, opts: SolverOptions | None = None) -> SolveReport:
    """Descend from ``V0`` until ``grad_norm <= grad_tol`` and ``min_hess_eig >= -hess_tol``.

    The run is deterministic in ``(lap, V0, opts)``; ``opts.seed`` only picks
    which sign of an escape direction is tried first. ``timed_out`` is set when
    ``max_iters`` steps were taken without reaching the tolerances and
    ``stalled`` when no step could decrease the energy any further.
    """
    opts = opts if opts is not None else SolverOptions()
    V = check_configuration(V0).copy()
    if V.shape[0] != lap.n:
        raise DimensionMismatch(f"V0 has {V.shape[0]} rows, Laplacian is {lap.n} x {lap.n}")
    tols = opts.tolerances(lap, V.shape[1])
    rng = make_rng(opts.seed)
    t0 = 1.0 / (2.0 * lap.norm + 1.0)

    f = landscape.energy(lap, V)
    trace = [f]
    iters = escapes = 0
    timed_out = stalled = False
    min_eig = None
    while True:
        G = landscape.riemannian_gradient(lap, V)
        gn2 = float(np.sum(G * G))
        if np.sqrt(gn2) <= tols.grad_tol:
            d, min_eig = _lowest_curvature(lap, V)
            if d is None or min_eig >= -tols.hess_tol:
                break
            if iters >= opts.max_iters:
                timed_out = True
                break
            curvature = min_eig
            min_eig = None
            signs = (1.0, -1.0) if rng.random() < 0.5 else (-1.0, 1.0)
            Vn, fn = _curvature_step(lap, V, f, d, curvature, signs, opts)
            if Vn is None:
                stalled = True
                break
            escapes += 1
        else:
            if iters >= opts.max_iters:
                timed_out = True
                break
            Vn, fn = _armijo_step(lap, V, f, G, gn2, t0, opts)
            if Vn is None:
                stalled = True
                break
        V, f = Vn, fn
        iters += 1
        trace.append(f)

    report = landscape.classify_point(lap, V, tols, min_hess_eig=min_eig)
    return SolveReport(V, report, iters, escapes, np.array(trace), timed_out, stalled)


def newton_polish(lap: Laplacian, V, iters: int = 8, rcond: float = 1e-9) -> np.ndarray:
    """Riemannian Newton steps from a near-critical ``V``.

    Energy-based line searches stall once energy changes fall below float
    resolution (gradient norm near ``1e-7 ||L||``); Newton steps on the
    tangent Hessian drive the gradient to rounding level. Near-null Hessian
    modes (the global rotation) are dropped from the solve. Intended for
    points already at a local minimum; a step that would increase the
    gradient norm ends the polish.
    """
    V = check_configuration(V).copy()
    if V.shape[1] < 2:
        return V
    g_norm = float(np.linalg.norm(landscape.riemannian_gradient(lap, V)))
    for _ in range(iters):
        if g_norm == 0.0:
            break
        basis = landscape.tangent_basis(V)
        spec = symlin.eig(landscape.dense_tangent_hessian(lap, V, basis))
        grad = landscape.riemannian_gradient(lap, V)
        g = np.einsum("ipa,ip->ia", basis, grad).reshape(-1)
        w, Q = spec.eigenvalues, spec.eigenvectors
        keep = np.abs(w) > rcond * max(1.0, float(np.abs(w).max()))
        coef = -Q[:, keep] @ ((Q[:, keep].T @ g) / w[keep])
        Vn = retract(V, landscape.coefficients_to_tangent(basis, coef))
        gn = float(np.linalg.norm(landscape.riemannian_gradient(lap, Vn)))
        if gn >= g_norm:
            break
        V, g_norm = Vn, gn
    return V
