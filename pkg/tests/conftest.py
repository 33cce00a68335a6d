"""Shared fixtures and frozen oracle constants.

The numeric constants below were computed independently with mpmath at 30
significant digits (adaptive tanh-sinh quadrature of the radial law) and
are frozen here; tests compare library output against them rather than
re-deriving anything through the code under test.
"""

import numpy as np
import pytest

from conelab import IntensitySpec, MarkAnnulus, MarkedPoint, PositionWindow, VelocityLaw
from conelab.configuration import FiniteConfiguration

# d=1, alpha=1, beta=2, annulus [0.5, 2], window [0, 1]
LAMBDA_MASS = 1.0405032820338893
MOMENT1_ANNULUS = 0.8416007686992585
MOMENT1_FULL = 1.7724538509055160  # sqrt(pi)
MOMENT2_FULL = 1.0
LAPLACE_CF = 0.6640444825557575  # exp(mass * (e^-0.5 - 1))
BOG_EXPONENT = 0.20810065640677786  # 0.2 * mass
BOGOLIUBOV_CF = 1.2313371052798501
CONE_EXPONENT = 0.0973906232079350
CONE_CF = 1.1022908699303016
FACTORIAL_1 = 0.5202516410169446  # mass / 2
FACTORIAL_2 = 0.2706617699808238
KAPPA_ONE_SIDED = 0.4208003843496292
E_MASS = 2.8306412668151321  # exp(mass)
TWO_LN2 = 1.3862943611198906


@pytest.fixture(scope="session")
def law():
    return VelocityLaw(1, 1.0, 2.0)


@pytest.fixture(scope="session")
def marks():
    return MarkAnnulus(0.5, 2.0)


@pytest.fixture(scope="session")
def window():
    return PositionWindow(0.0, 1.0)


@pytest.fixture(scope="session")
def sigma(law, marks, window):
    return IntensitySpec(law, marks, window)


@pytest.fixture(scope="session")
def sigma_one_sided(law, window):
    return IntensitySpec(law, MarkAnnulus(0.5, 2.0, one_sided=True), window)


def random_configuration(gen: np.random.Generator, max_size: int, dim: int = 1):
    """A random pinpointed configuration with velocities bounded away from 0."""
    n = int(gen.integers(0, max_size + 1))
    points = []
    positions = set()
    while len(points) < n:
        pos = tuple(float(c) for c in gen.uniform(0.0, 1.0, dim))
        if pos in positions:
            continue
        positions.add(pos)
        vel = tuple(float(c) for c in gen.uniform(-2.0, 2.0, dim))
        if sum(c * c for c in vel) < 1e-4:
            continue
        points.append(MarkedPoint(vel, pos))
    return FiniteConfiguration(points)


def subset_table_function(gen: np.random.Generator, gamma: FiniteConfiguration):
    """A random function on sub-configurations of gamma, via a mask table."""
    index = {p: i for i, p in enumerate(gamma.points)}
    table = gen.uniform(-1.0, 1.0, 1 << len(gamma.points))

    def G(xi: FiniteConfiguration) -> float:
        mask = 0
        for p in xi.points:
            mask |= 1 << index[p]
        return float(table[mask])

    return G


def run_with_retry(make_result, seed: int, z_pass: float = 3.0, z_hard: float = 4.0):
    """Retry-once policy for Monte Carlo identity checks.

    |z| <= z_pass passes; |z| > z_hard fails hard; in between, the check is
    rerun once on a shifted stream and must then pass at z_pass.
    """
    from conelab.streams import RandomStream

    result = make_result(RandomStream(seed, 0))
    z = result.z_score
    if z is None or abs(z) <= z_pass:
        return result
    assert abs(z) <= z_hard, f"hard failure: |z| = {abs(z):.2f} > {z_hard}"
    retry = make_result(RandomStream(seed, 1_000_003))
    z2 = retry.z_score
    assert z2 is None or abs(z2) <= z_pass, (
        f"retry failed: first z {z:.2f}, retry z {z2:.2f}"
    )
    return retry
