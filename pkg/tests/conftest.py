import numpy as np
import pytest

from qhinf.hinf import SynthesisParams
from qhinf.model import build_homodyne_matrix, chi_uncertainty, kappa_uncertainty, make_squeezer

L_SQUEEZER = [[0.1, -0.1]]


@pytest.fixture
def squeezer():
    return make_squeezer(4.0, 4.0, -0.5, L_SQUEEZER)


@pytest.fixture
def S90():
    return build_homodyne_matrix([np.pi / 2])


@pytest.fixture
def example1(squeezer):
    return squeezer, kappa_uncertainty(0.1, 4.0), SynthesisParams(0.65, 0.2, 0.6)


@pytest.fixture
def example2(squeezer):
    return squeezer, chi_uncertainty(0.1, -0.5), SynthesisParams(0.65, 0.7, 1.0)


def crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_doubled(rng, r, c):
    from qhinf.model import build_doubled

    return build_doubled(crandn(rng, r, c), crandn(rng, r, c))


def random_robust_instance(rng):
    """Random plant (n, m <= 2), uncertainty and scalings satisfying the
    contraction assumption ``eps2^2 G^H G < I``."""
    from qhinf.model import DiagonalPowers, QuantumPlant, UncertaintyModel

    n = int(rng.integers(1, 3))
    m = int(rng.integers(1, 3))
    p = int(rng.integers(1, 3))
    r1 = int(rng.integers(1, 4))
    r2 = int(rng.integers(1, 4))
    plant = QuantumPlant(
        A=random_doubled(rng, n, n), B=random_doubled(rng, n, m), C=random_doubled(rng, m, n),
        D=random_doubled(rng, m, m), L=crandn(rng, p, 2 * n),
    )
    G = crandn(rng, r2, 2 * m)
    unc = UncertaintyModel(
        H1=crandn(rng, 2 * n, r1), H3=crandn(rng, 2 * m, r1), E=crandn(rng, r1, 2 * n),
        H2=crandn(rng, 2 * n, r2), G=G,
        F1=DiagonalPowers((1,) * r1), F2=DiagonalPowers((1,) * r2),
    )
    from qhinf.hinf import SynthesisParams

    gmax = np.linalg.norm(G, 2)
    eps2 = float(rng.uniform(0.05, 0.95)) / gmax
    params = SynthesisParams(float(rng.uniform(0.1, 5)), float(rng.uniform(0.1, 5)), eps2)
    return plant, unc, params


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(line)
