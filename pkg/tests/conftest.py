import numpy as np
import pytest

from minpat.datasets import glass, nevada, social_network, social_network_model
from minpat.model import build_design, independence


@pytest.fixture(scope="session")
def design33():
    return build_design(independence((3, 3)))


@pytest.fixture(scope="session")
def design44():
    return build_design(independence((4, 4)))


@pytest.fixture(scope="session")
def design34():
    return build_design(independence((3, 4)))


@pytest.fixture(scope="session")
def design_sn():
    return build_design(social_network_model())


@pytest.fixture(scope="session")
def nevada_table():
    return nevada()


@pytest.fixture(scope="session")
def glass_table():
    return glass()


@pytest.fixture(scope="session")
def sn_table():
    return social_network()


def exact_rank(matrix) -> int:
    """Rational-arithmetic row reduction; entries must be exact (integers)."""
    from fractions import Fraction

    m = [[Fraction(int(round(v))) for v in row] for row in np.asarray(matrix)]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    rank = 0
    for c in range(cols):
        piv = next((i for i in range(rank, rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(rows):
            if i != rank and m[i][c] != 0:
                f = m[i][c] / m[rank][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
        if rank == rows:
            break
    return rank
