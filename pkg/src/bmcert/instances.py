"""Instance generators and the matrix text format.

Random models draw their off-diagonal entries from one seeded Philox stream
(see :mod:`bmcert._rng`), consumed in row-major order over the strict upper
triangle ``(0,1), (0,2), ..., (0,n-1), (1,2), ...``. Ground truth is always
``x = 1_n``; :meth:`Instance.canonical` moves any other sign vector there.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import symlin
from ._rng import SeedLike, make_rng
from .errors import BadAlpha, BadDelta, BadShape, ParseError, SymmetryViolation
from .landscape import Laplacian, build_laplacian, check_sign_vector


class Model(enum.Enum):
    GAUSSIAN_Z2 = "GaussianZ2"
    BERNOULLI_Z2 = "BernoulliZ2"
    KURAMOTO = "Kuramoto"
    ADVERSARIAL = "Adversarial"
    FILE = "File"


@dataclass(frozen=True)
class Instance:
    C: np.ndarray
    x: np.ndarray
    model: Model
    params: dict = field(default_factory=dict)
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.C.shape[0]

    def laplacian(self) -> Laplacian:
        return build_laplacian(self.C, self.x)

    def canonical(self) -> "Instance":
        """Same landscape with ground truth ``1_n``: ``C -> diag(x) C diag(x)``."""
        C = self.C * np.outer(self.x, self.x)
        return Instance(C, np.ones(self.n), self.model, dict(self.params), self.seed)

    def metadata(self) -> dict:
        return {"model": self.model.value, "params": self.params, "seed": self.seed, "n": self.n}


@dataclass(frozen=True)
class AdversarialInstance:
    instance: Instance
    V_trap: np.ndarray
    p: int


def _upper_fill(n: int, values: np.ndarray) -> np.ndarray:
    C = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    C[iu] = values
    return C + C.T


def gaussian_z2(n: int, sigma: float, seed: SeedLike = 0) -> Instance:
    """``C = 1 1^T + sigma W`` with ``W`` symmetric standard Gaussian off the diagonal; ``diag(C) = 0``."""
    if n < 2:
        raise BadShape("n must be >= 2")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    rng = make_rng(seed)
    W = _upper_fill(n, rng.standard_normal(n * (n - 1) // 2))
    C = np.ones((n, n)) + sigma * W
    np.fill_diagonal(C, 0.0)
    return Instance(C, np.ones(n), Model.GAUSSIAN_Z2, {"sigma": float(sigma)}, _seed_value(seed))


def _sign_flips(n: int, prob_plus: float, seed: SeedLike) -> np.ndarray:
    rng = make_rng(seed)
    u = rng.random(n * (n - 1) // 2)
    return _upper_fill(n, np.where(u < prob_plus, 1.0, -1.0))


def bernoulli_z2(n: int, delta: float, seed: SeedLike = 0) -> Instance:
    """Off-diagonal entries ``+1`` with probability ``(1 + delta) / 2``, else ``-1``."""
    if n < 2:
        raise BadShape("n must be >= 2")
    if not 0.0 < delta <= 1.0:
        raise BadDelta(f"delta must lie in (0, 1], got {delta}")
    C = _sign_flips(n, (1.0 + delta) / 2.0, seed)
    return Instance(C, np.ones(n), Model.BERNOULLI_Z2, {"delta": float(delta)}, _seed_value(seed))


def kuramoto_coupling(n: int, alpha: float, seed: SeedLike = 0) -> Instance:
    """Attractive (``+1``) with probability ``1 - alpha``, repulsive otherwise.

    This is :func:`bernoulli_z2` with ``delta = 1 - 2 alpha`` and the same
    stream, so both produce identical matrices for the same seed.
    """
    if not 0.0 <= alpha < 0.5:
        raise BadAlpha(f"alpha must lie in [0, 1/2), got {alpha}")
    base = bernoulli_z2(n, 1.0 - 2.0 * alpha, seed)
    return Instance(base.C, base.x, Model.KURAMOTO, {"alpha": float(alpha)}, base.seed)


def trigonometric_configuration(n: int, p: int) -> np.ndarray:
    """Rows ``sqrt(2/p) (cos, sin)(2 pi m_j i / n)`` with ``m_j = 3j - 2``; odd ``p`` adds an alternating column."""
    V = np.empty((n, p))
    i = np.arange(n)
    amp = np.sqrt(2.0 / p)
    for j in range(p // 2):
        m = 3 * (j + 1) - 2
        angle = 2.0 * np.pi * m * i / n
        V[:, 2 * j] = amp * np.cos(angle)
        V[:, 2 * j + 1] = amp * np.sin(angle)
    if p % 2:
        V[:, -1] = np.where(i % 2 == 0, 1.0, -1.0) * np.sqrt(1.0 / p)
    return V


def adversarial(n: int, p: int) -> AdversarialInstance:
    """Cost matrix with Laplacian condition number exactly ``p`` and a non-optimal SOCP.

    ``C = -(P_V + p P_{V-perp} - p P_1)`` with ``P_V = (p/n) V V^T`` and
    ``V`` from :func:`trigonometric_configuration`. Requires ``p >= 2``,
    ``n >= 6p`` and ``n`` or ``p`` even.
    """
    if p < 2 or n < 6 * p:
        raise BadShape(f"need p >= 2 and n >= 6p, got n={n}, p={p}")
    if n % 2 and p % 2:
        raise BadShape("construction needs n or p even")
    V = trigonometric_configuration(n, p)
    P_V = (p / n) * (V @ V.T)
    P_one = np.full((n, n), 1.0 / n)
    L = P_V + p * (np.eye(n) - P_V) - p * P_one
    C = symlin.as_symmetric(-L)
    inst = Instance(C, np.ones(n), Model.ADVERSARIAL, {"n": n, "p": p}, None)
    return AdversarialInstance(inst, V, p)


def adversarial_residuals(V) -> dict:
    """Residuals of ``V^T 1 = 0``, ``V^T V = (n/p) I`` and ``<v_i . v_j . v_k, 1> = 0``."""
    V = np.asarray(V, dtype=float)
    n, p = V.shape
    triple = np.einsum("li,lj,lk->ijk", V, V, V)
    return {
        "column_sums": float(np.abs(V.sum(axis=0)).max()),
        "gram": float(np.abs(V.T @ V - (n / p) * np.eye(p)).max()),
        "triple": float(np.abs(triple).max()),
    }


def _seed_value(seed: SeedLike):
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    if isinstance(seed, (tuple, list)):
        return [int(s) for s in seed]
    return None


# Matrix text format: first line ``n``, then n rows of n floats.


def format_matrix(A) -> str:
    A = np.asarray(A, dtype=float)
    lines = [str(A.shape[0])]
    lines += [" ".join(repr(float(v)) for v in row) for row in A]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    """Parse the matrix format; symmetry is checked against ``1e-12 max(1, ||A||_inf)``."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty matrix file")
    try:
        n = int(lines[0].strip())
    except ValueError as exc:
        raise ParseError(f"bad header {lines[0]!r}: expected a single integer") from exc
    if n < 1:
        raise ParseError(f"dimension must be >= 1, got {n}")
    if len(lines) != n + 1:
        raise ParseError(f"expected {n} matrix rows, found {len(lines) - 1}")
    rows = [ln.split() for ln in lines[1:]]
    if any(len(r) != n for r in rows):
        raise ParseError(f"rows must each hold {n} values")
    try:
        A = np.array([[float(tok) for tok in r] for r in rows])
    except ValueError as exc:
        raise ParseError(f"non-numeric entry: {exc}") from exc
    if not np.all(np.isfinite(A)):
        raise ParseError("matrix has NaN or infinite entries")
    scale = max(1.0, float(np.abs(A).max()))
    asym = float(np.abs(A - A.T).max())
    if asym > 1e-12 * scale:
        raise SymmetryViolation(f"max |A - A^T| = {asym:.3e} exceeds {1e-12 * scale:.3e}")
    return (A + A.T) / 2.0


def save_matrix(path, A) -> None:
    Path(path).write_text(format_matrix(A))


def load_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())


def save_instance(path, inst: Instance) -> Path:
    """Write ``C`` in the matrix format plus a ``<path>.json`` metadata sidecar."""
    path = Path(path)
    save_matrix(path, inst.C)
    sidecar = path.with_name(path.name + ".json")
    meta = inst.metadata()
    if not np.all(inst.x == 1.0):
        meta["x"] = inst.x.astype(int).tolist()
    sidecar.write_text(json.dumps(meta, indent=2) + "\n")
    return sidecar


def load_instance(path, x=None) -> Instance:
    """Read a cost matrix file; ``x`` defaults to the all-ones vector."""
    C = load_matrix(path)
    n = C.shape[0]
    x = check_sign_vector(x, n)
    return Instance(C, x, Model.FILE, {"path": str(path)}, None)
