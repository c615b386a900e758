import random
from fractions import Fraction

import pytest

from swduality.orbits import enumerate_homoclinic, select_orbits
from swduality.sft import SftModel
from swduality.torus import TorusModel


@pytest.fixture(scope="session")
def shift2():
    return SftModel([[1, 1], [1, 1]])


@pytest.fixture(scope="session")
def golden_sft():
    return SftModel([[1, 1], [1, 0]])


@pytest.fixture(scope="session")
def golden_torus():
    return TorusModel([[1, 1], [1, 0]])


@pytest.fixture(scope="session")
def shift2_basis(shift2):
    P = select_orbits(shift2, [{"period": 1, "index": 0}])
    Q = select_orbits(shift2, [{"period": 1, "index": 1}])
    return enumerate_homoclinic(shift2, P, Q, 6)


@pytest.fixture(scope="session")
def golden_sft_basis(golden_sft):
    P = select_orbits(golden_sft, [{"period": 1, "index": 0}])
    Q = select_orbits(golden_sft, [{"period": 2, "index": 0}])
    return enumerate_homoclinic(golden_sft, P, Q, 7)


@pytest.fixture(scope="session")
def torus_basis(golden_torus):
    P = select_orbits(golden_torus, [{"period": 1}])
    Q = select_orbits(golden_torus, [{"period": 3}])
    return enumerate_homoclinic(golden_torus, P, Q, 60)


@pytest.fixture(scope="session")
def small_torus_basis(golden_torus):
    P = select_orbits(golden_torus, [{"period": 1}])
    Q = select_orbits(golden_torus, [{"period": 3}])
    return enumerate_homoclinic(golden_torus, P, Q, 6)


@pytest.fixture
def rng():
    return random.Random(12345)


F = Fraction
