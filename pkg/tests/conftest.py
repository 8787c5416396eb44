import math

import numpy as np
import pytest

from mfa.gdms import affine_cantor, cf_digits
from mfa.potentials import PotentialFamily, normalize

LOG3 = math.log(3)
CANTOR_DIM = math.log(2) / math.log(3)
P_BINOMIAL = (0.3, 0.7)


def binomial_T(q):
    """Closed-form temperature of the binomial measure on the thirds Cantor set."""
    p = np.asarray(P_BINOMIAL)
    return math.log(float(np.sum(p ** q))) / LOG3


def binomial_alpha(q):
    p = np.asarray(P_BINOMIAL)
    w = p ** q
    return float(-np.sum(w * np.log(p)) / (np.sum(w) * LOG3))


@pytest.fixture(scope="session")
def cantor():
    return affine_cantor([1 / 3, 1 / 3])


@pytest.fixture(scope="session")
def binomial(cantor):
    fam = PotentialFamily.from_probabilities(cantor, P_BINOMIAL, CANTOR_DIM)
    return cantor, normalize(cantor, fam)


@pytest.fixture(scope="session")
def cf12():
    return cf_digits([1, 2])
