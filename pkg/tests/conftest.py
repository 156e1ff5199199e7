import numpy as np
import pytest

from bmcert import landscape, solver
from bmcert._rng import make_rng
from bmcert.instances import adversarial
from bmcert.manifold import align_columns, random_configuration

ADVERSARIAL_SHAPES = [(12, 2), (16, 2), (18, 3), (24, 4)]

RING_TRAP_COUNT = 5


def ring_coupling(n, seed, chords=3):
    """Weighted cycle plus a few random chords: far from benign, with stable twisted states."""
    rng = make_rng(seed)
    C = np.zeros((n, n))
    w = rng.uniform(0.5, 1.5, n)
    for i in range(n):
        j = (i + 1) % n
        C[i, j] = C[j, i] = w[i]
    for _ in range(chords):
        i, j = rng.integers(0, n, 2)
        if abs(i - j) > 1:
            C[i, j] = C[j, i] = rng.uniform(0.5, 1.5)
    return C


def ring_socp(seed, n=24, p=2):
    """Solver output on ``ring_coupling(n, seed)``, Newton-polished and column-aligned."""
    lap = landscape.build_laplacian(ring_coupling(n, (seed,)))
    run = solver.solve(lap, random_configuration(n, p, (seed, 1)))
    V = solver.newton_polish(lap, run.V_final)
    V, _ = align_columns(V)
    return lap, V


def find_ring_traps(count=RING_TRAP_COUNT, n=24, max_seed=60):
    """The first ``count`` seeds whose solver run on ``ring_coupling(n, seed)`` ends at a non-optimal SOCP."""
    out = []
    for seed in range(max_seed):
        lap, V = ring_socp(seed, n)
        rep = landscape.classify_point(lap, V)
        if rep.is_second_order and not rep.is_global:
            out.append((lap, V))
            if len(out) == count:
                return out
    raise AssertionError(f"only {len(out)} traps among {max_seed} seeds")


@pytest.fixture(scope="session")
def ring_traps():
    return find_ring_traps()


@pytest.fixture(scope="session")
def adversarial_cases():
    return {shape: adversarial(*shape) for shape in ADVERSARIAL_SHAPES}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
