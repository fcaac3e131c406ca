import os

import numpy as np
import pytest

from etcdos import SynthesisInputs, compute_certificate, load_scenario

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "scenarios")
BATCH_REACTOR = os.path.join(SCENARIO_DIR, "batch_reactor.json")
BATCH_REACTOR_DOS = os.path.join(SCENARIO_DIR, "batch_reactor_dos.json")


@pytest.fixture(scope="session")
def reactor_scenario():
    return load_scenario(BATCH_REACTOR)


@pytest.fixture(scope="session")
def reactor_dos_scenario():
    return load_scenario(BATCH_REACTOR_DOS)


@pytest.fixture(scope="session")
def reactor_certificate(reactor_scenario):
    return compute_certificate(reactor_scenario.synthesis)


@pytest.fixture(scope="session")
def reactor_dos_certificate(reactor_dos_scenario):
    return compute_certificate(reactor_dos_scenario.synthesis)


def random_synthesis_inputs(seed: int, n_max: int = 8) -> SynthesisInputs:
    """A random stabilizable design problem with sane conditioning.

    The virtual channel projector makes the augmented input matrix full
    row rank for m < n, so any A (here scaled to spectral radius <= 1.2)
    admits a Riccati solution; epsilon is chosen after the fact so that
    eps^-1 I - P is comfortably positive definite.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, n + 1))
    a = rng.normal(size=(n, n))
    radius = max(np.abs(np.linalg.eigvals(a)))
    a *= rng.uniform(0.2, 1.2) / max(radius, 1e-6)
    b = rng.normal(size=(n, m))
    while np.linalg.matrix_rank(b) < m:
        b = rng.normal(size=(n, m))
    q = np.diag(rng.uniform(0.5, 4.0, size=n))
    f = np.diag(rng.uniform(0.1, 1.0, size=n))
    r1 = np.diag(rng.uniform(0.5, 2.0, size=m))
    r2 = np.diag(rng.uniform(0.5, 2.0, size=n))
    alpha = float(rng.uniform(0.3, 2.0))
    sigma = float(rng.uniform(0.05, 0.5))

    probe = SynthesisInputs(A=a, B=b, Q=q, F=f, R1=r1, R2=r2, alpha=alpha,
                            epsilon=1e-6, sigma=sigma, eta1=0.9, eta2=0.98)
    from etcdos import solve_riccati
    p = solve_riccati(probe)
    eps = 0.5 / float(np.linalg.eigvalsh(p).max())
    return SynthesisInputs(A=a, B=b, Q=q, F=f, R1=r1, R2=r2, alpha=alpha,
                           epsilon=eps, sigma=sigma, eta1=0.9, eta2=0.98)
