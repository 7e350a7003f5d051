import numpy as np
import pytest
import scipy.linalg

from deepmg.problems import TridiagonalMatrix, assemble_poisson
from deepmg.transfer import TransferPair, linear_baseline
from deepmg.twogrid import TwoGridConfig, TwoGridContext


class IdentityTransferContext(TwoGridContext):
    """R = P = I: the coarse "grid" is the fine grid and the correction is exact."""

    def __init__(self, A, omega=2.0 / 3.0, config=TwoGridConfig(0, 0)):
        self.A = A
        self.params = linear_baseline(A.n, omega)
        self.config = config
        self.dinv = 1.0 / A.diag
        self.A_c = A.to_dense()
        self.lu = scipy.linalg.lu_factor(self.A_c)

    def restrict(self, r):
        return r

    def prolong(self, uc):
        return uc


def exact_smoother_context(n=7, s1=1, s2=0):
    """Diagonal A with omega = 1: one Jacobi sweep solves exactly, so C = 0."""
    A = TridiagonalMatrix.from_diagonals(np.zeros(n), np.linspace(1.0, 3.0, n), np.zeros(n))
    return TwoGridContext(A, linear_baseline(n, omega=1.0), TwoGridConfig(s1, s2))


def perturbed(n, rng, scale=0.1):
    theta = linear_baseline(n).flatten()
    return TransferPair.unflatten(theta * (1 + scale * rng.standard_normal(theta.size)), n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def poisson7():
    return TwoGridContext(assemble_poisson(7), linear_baseline(7))


@pytest.fixture
def poisson31():
    return TwoGridContext(assemble_poisson(31), linear_baseline(31))
