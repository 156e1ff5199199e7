"""Landscape certificates for Burer-Monteiro factorizations of MaxCut-type SDPs."""

__version__ = "0.1.0"

from .certificate import (  # noqa: E402
    DualCertificate,
    build_certificate,
    build_ling_certificate,
    certified_cond_lower_bound,
    verify_certificate,
)
from .instances import Instance, Model, adversarial, bernoulli_z2, gaussian_z2, kuramoto_coupling  # noqa: E402
from .landscape import (  # noqa: E402
    Laplacian,
    Optimality,
    Verdict,
    build_laplacian,
    classify_point,
    rank1_optimality,
    theorem1_verdict,
)
from .solver import SolverOptions, solve  # noqa: E402

__all__ = [
    "DualCertificate",
    "Instance",
    "Laplacian",
    "Model",
    "Optimality",
    "SolverOptions",
    "Verdict",
    "adversarial",
    "bernoulli_z2",
    "build_certificate",
    "build_laplacian",
    "build_ling_certificate",
    "certified_cond_lower_bound",
    "classify_point",
    "gaussian_z2",
    "kuramoto_coupling",
    "rank1_optimality",
    "solve",
    "theorem1_verdict",
    "verify_certificate",
]
