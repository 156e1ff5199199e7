"""Dual certificates bounding the Laplacian condition number from below.

Given a configuration ``V`` (columns aligned so that ``V^T 1`` is a
non-negative multiple of ``e_1``) that is not the planted solution, the
certificate is the triple

    Z = (p / <P, V V^T>) V V^T
    H = beta ((p - 2) 1 1^T + (V V^T)^{.2})
    W = beta (p - 1) V + delta (1 e_1^T - diag(v_1) V)

with ``P`` the centering projector and ``M = P (Z + H - (W V^T + V W^T)/2) P``.
The scalars ``beta`` and ``delta`` maximize ``t1 beta + t2 delta / (2 sqrt(p-1))``
over the disc that keeps ``M`` PSD, which forces ``tr(M) <= 1``. If ``V`` is
second-order critical for a Laplacian ``L``, then
``tr(P Z) / tr(M) <= lambda_n(L) / lambda_2(L)``.

None of the feasibility conditions (PSD ``M``, ``tr(M) <= 1``) depend on
criticality; only the final comparison with ``L`` does.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import landscape, symlin
from ._rng import SeedLike, make_rng
from .errors import ChainViolation, DegenerateT, Misaligned, NotCritical, OptimalPoint
from .landscape import Laplacian, Tolerances
from .manifold import alignment_residual, check_configuration

ALIGN_TOL = 1e-8
DEGENERATE_T = 1e-24


@dataclass(frozen=True)
class DualCertificate:
    Z: np.ndarray
    H: np.ndarray
    W: np.ndarray
    M: np.ndarray
    beta: float
    delta: float
    t1: float
    t2: float
    p: int
    perp_vv: float = field(repr=False)
    trace_M: float = 0.0
    inner_Z_Pperp: float = 0.0
    kind: str = "optimal"

    @property
    def ratio(self) -> float:
        """``tr(P_perp Z) / tr(M)``; infinite if ``tr(M) <= 0``."""
        return self.inner_Z_Pperp / self.trace_M if self.trace_M > 0 else float("inf")

    def feasibility(self, V) -> dict:
        V = np.asarray(V, dtype=float)
        diag_gap = np.abs(np.einsum("ij,ij->i", self.W, V) - np.diag(self.H)).max()
        return {
            "inner_Z_Pperp_minus_p": abs(self.inner_Z_Pperp - self.p),
            "diag_WVt_minus_diag_H": float(diag_gap),
            "min_eig_Z": float(symlin.eig(self.Z).eigenvalues[0]),
            "min_eig_M": float(symlin.eig(self.M).eigenvalues[0]),
        }


@dataclass(frozen=True)
class Check:
    passed: bool
    residual: float

    def to_dict(self) -> dict:
        return {"pass": bool(self.passed), "residual": float(self.residual)}


@dataclass(frozen=True)
class Verification:
    checks: dict

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failed(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]


def _gram_terms(V: np.ndarray):
    n = V.shape[0]
    G = V @ V.T
    G2 = G * G
    perp_vv = symlin.perp_inner(G)
    if perp_vv <= 1e-12 * n * n:
        raise OptimalPoint(f"<P_perp, V V^T> = {perp_vv:.3e}: V V^T is (numerically) 1 1^T")
    return G, G2, perp_vv


def _sandwich(X: np.ndarray) -> np.ndarray:
    """``P_perp X P_perp`` via row and column centering."""
    Y = X - X.mean(axis=0, keepdims=True)
    Y = Y - Y.mean(axis=1, keepdims=True)
    return symlin.as_symmetric(Y)


def build_certificate(V, p: int | None = None) -> DualCertificate:
    """Certificate ``(W, Z, H, M)`` for an aligned, non-optimal configuration ``V``.

    Raises
    ------
    Misaligned
        If ``V^T 1`` has a non-zero coordinate beyond the first (or a negative
        first coordinate) by more than 1e-8; call ``align_columns`` first.
    OptimalPoint
        If ``<P_perp, V V^T> <= 1e-12 n^2``.
    DegenerateT
        If ``t1^2 + t2^2 <= 1e-24``.
    """
    V = check_configuration(V)
    n, pv = V.shape
    p = pv if p is None else p
    if p != pv:
        raise ValueError(f"p={p} does not match V with {pv} columns")
    if p < 2:
        raise ValueError("certificates need p >= 2")
    res = alignment_residual(V)
    if res > ALIGN_TOL:
        raise Misaligned(f"alignment residual {res:.3e} exceeds {ALIGN_TOL:.0e}")
    G, G2, perp_vv = _gram_terms(V)
    v1 = V[:, 0]
    D1G = v1[:, None] * G  # diag(v1) V V^T

    t1 = symlin.perp_inner((p - 1) * G - G2)
    t2 = -2.0 * np.sqrt(p - 1) * symlin.perp_inner(D1G)
    rho2 = t1 * t1 + t2 * t2
    if rho2 <= DEGENERATE_T:
        raise DegenerateT(f"t1^2 + t2^2 = {rho2:.3e}")
    rho = np.sqrt(rho2)
    beta = p / (2.0 * (p - 1) * perp_vv) * (1.0 + t1 / rho)
    delta = p / (np.sqrt(p - 1) * perp_vv) * (t2 / rho)

    Z = (p / perp_vv) * G
    H = beta * ((p - 2) * np.ones((n, n)) + G2)
    E1 = np.zeros((n, p))
    E1[:, 0] = 1.0
    W = beta * (p - 1) * V + delta * (E1 - v1[:, None] * V)
    WVt = W @ V.T
    M = _sandwich(Z + H - 0.5 * (WVt + WVt.T))
    return DualCertificate(
        Z=Z, H=H, W=W, M=M, beta=float(beta), delta=float(delta), t1=float(t1), t2=float(t2), p=p,
        perp_vv=perp_vv, trace_M=float(np.trace(M)), inner_Z_Pperp=symlin.perp_inner(Z), kind="optimal",
    )


def build_ling_certificate(V, p: int | None = None) -> DualCertificate:
    """The choice ``W = (p-1) V``, ``Z = (p-1) V V^T``, ``H = (p-2) 1 1^T + (V V^T)^{.2}``.

    Alignment is not required. ``M`` reduces to ``P_perp (V V^T)^{.2} P_perp``;
    ``beta`` is reported as 1 and ``delta`` as 0.
    """
    V = check_configuration(V)
    n, pv = V.shape
    p = pv if p is None else p
    if p != pv:
        raise ValueError(f"p={p} does not match V with {pv} columns")
    G, G2, perp_vv = _gram_terms(V)
    Z = (p - 1) * G
    H = (p - 2) * np.ones((n, n)) + G2
    W = (p - 1) * V
    WVt = W @ V.T
    M = _sandwich(Z + H - 0.5 * (WVt + WVt.T))
    return DualCertificate(
        Z=Z, H=H, W=W, M=M, beta=1.0, delta=0.0, t1=float("nan"), t2=float("nan"), p=p,
        perp_vv=perp_vv, trace_M=float(np.trace(M)), inner_Z_Pperp=symlin.perp_inner(Z), kind="ling",
    )


def ling_closed_form_M(V) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    G = V @ V.T
    return _sandwich(G * G)


def verify_certificate(cert: DualCertificate, V) -> Verification:
    """Audit the six conditions behind ``tr(P_perp Z) / tr(M) >= p``; failures are recorded, not raised.

    H2: ``beta, delta`` lie in the disc keeping ``M`` PSD.
    H3: ``t1 beta + t2 delta / (2 sqrt(p-1)) >= p - 1``, i.e. ``tr(M) <= 1``.
    trace_identity: ``tr(M)`` matches its closed form in ``beta, delta``.
    M_psd, trace_le_1, ratio_ge_p: checked directly on ``M``.
    """
    V = np.asarray(V, dtype=float)
    p = cert.p
    G = V @ V.T
    perp_vv = symlin.perp_inner(G)
    perp_g2 = symlin.perp_inner(G * G)
    perp_d1g = symlin.perp_inner(V[:, [0]] * G)
    c = p / (2.0 * (p - 1) * perp_vv)

    h2 = (cert.beta - c) ** 2 + (cert.delta / (2.0 * np.sqrt(p - 1))) ** 2 - c * c
    lhs_h3 = cert.t1 * cert.beta + cert.t2 * cert.delta / (2.0 * np.sqrt(p - 1))
    h3 = (p - 1) - lhs_h3
    trace_closed = cert.beta * (perp_g2 - (p - 1) * perp_vv) + cert.delta * perp_d1g + p
    trace_gap = abs(cert.trace_M - trace_closed)
    m_spec = symlin.eig(cert.M)
    m_norm = symlin.spectral_norm(cert.M, m_spec)
    min_eig_m = float(m_spec.eigenvalues[0])

    checks = {
        "H2": Check(h2 <= 1e-10, max(h2, 0.0)),
        "H3": Check(h3 <= 1e-9 * max(1.0, p - 1), max(h3, 0.0)),
        "trace_identity": Check(trace_gap <= 1e-9 * max(1.0, abs(trace_closed)), trace_gap),
        "M_psd": Check(min_eig_m >= -1e-8 * max(1.0, m_norm), max(-min_eig_m, 0.0)),
        "trace_le_1": Check(cert.trace_M <= 1.0 + 1e-9, max(cert.trace_M - 1.0, 0.0)),
        "ratio_ge_p": Check(cert.ratio >= p - 1e-7, max(p - cert.ratio, 0.0)),
    }
    return Verification(checks)


@dataclass(frozen=True)
class BoundChain:
    """``lambda_2 tr(P_perp Z) <= <L, M> <= lambda_n tr(M)``."""

    lower: float
    middle: float
    upper: float
    ratio: float
    cond: float
    holds: bool

    def to_dict(self) -> dict:
        return {
            "lambda2_trPZ": self.lower,
            "inner_L_M": self.middle,
            "lambdaN_trM": self.upper,
            "ratio": self.ratio,
            "cond": self.cond,
            "holds": self.holds,
        }


def bound_chain(lap: Laplacian, cert: DualCertificate, rtol: float = 1e-8) -> BoundChain:
    lower = lap.lambda2 * cert.inner_Z_Pperp
    middle = float(np.sum(lap.L * cert.M))
    upper = lap.lambdaN * cert.trace_M
    scale = max(abs(lower), abs(middle), abs(upper), 1e-300)
    holds = lower <= middle + rtol * scale and middle <= upper + rtol * scale
    return BoundChain(lower, middle, upper, cert.ratio, lap.cond, holds)


def certified_cond_lower_bound(
    lap: Laplacian, cert: DualCertificate, V, tols: Tolerances | None = None, rtol: float = 1e-8
) -> float:
    """Return ``tr(P_perp Z) / tr(M)``, a lower bound on ``lambda_n(L) / lambda_2(L)``.

    Raises
    ------
    NotCritical
        If ``V`` is not second-order critical for ``lap`` within ``tols``.
    ChainViolation
        If the two-sided bound on ``<L, M>`` fails numerically by more than ``rtol``.
    """
    V = np.asarray(V, dtype=float)
    rep = landscape.classify_point(lap, V, tols)
    if not rep.is_second_order:
        raise NotCritical(
            f"V is not second-order critical (grad {rep.grad_norm:.3e}, min Hessian eig {rep.min_hess_eig:.3e})"
        )
    chain = bound_chain(lap, cert, rtol)
    if not chain.holds:
        raise ChainViolation(
            f"bound chain fails: {chain.lower:.12g} <= {chain.middle:.12g} <= {chain.upper:.12g}"
        )
    return cert.ratio


def audit_dict(cert: DualCertificate, verification: Verification) -> dict:
    """Certificate audit record in the JSON layout used by the CLI."""
    return {
        "beta": cert.beta,
        "delta": cert.delta,
        "t1": cert.t1,
        "t2": cert.t2,
        "trace_M": cert.trace_M,
        "inner_Z_Pperp": cert.inner_Z_Pperp,
        "ratio": cert.ratio,
        "checks": {k: c.to_dict() for k, c in verification.checks.items()},
    }


def expected_tangent_gram(V, p: int | None = None) -> np.ndarray:
    """``E[dV dV^T]`` for ``dV = P_T(1 phi^T)``, ``phi ~ N(0, I_p)``: ``(p-2) 1 1^T + (V V^T)^{.2}``."""
    V = np.asarray(V, dtype=float)
    p = V.shape[1] if p is None else p
    G = V @ V.T
    return (p - 2) * np.ones_like(G) + G * G


def monte_carlo_tangent_gram(V, draws: int = 100_000, seed: SeedLike = 0, batch: int = 10_000) -> np.ndarray:
    """Empirical mean of ``P_T(1 phi^T) P_T(1 phi^T)^T`` over ``draws`` Gaussian ``phi``."""
    V = np.asarray(V, dtype=float)
    n, p = V.shape
    rng = make_rng(seed)
    acc = np.zeros((n, n))
    done = 0
    while done < draws:
        b = min(batch, draws - done)
        phi = rng.standard_normal((b, p))
        proj = phi @ V.T  # <phi, V_i>
        T = phi[:, None, :] - proj[:, :, None] * V[None, :, :]
        acc += np.einsum("bip,bjp->ij", T, T)
        done += b
    return acc / draws
