import numpy as np
import pytest

from deepmg.errors import ConfigurationError, PreconditionError
from deepmg.problems import (
    Grid1D,
    ProblemSpec,
    TridiagonalMatrix,
    assemble_convection_diffusion,
    assemble_helmholtz,
    assemble_poisson,
    blend,
    piecewise_k,
)
from deepmg.spectral import eigenvalues, spectral_radius
from deepmg.transfer import linear_baseline
from deepmg.twogrid import TwoGridContext


def laplacian_dense(n):
    h = 1.0 / (n + 1)
    return (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h**2


def test_grid_basics():
    g = Grid1D(7)
    assert g.h == 1 / 8
    assert g.l == 3
    assert g.n_coarse == 3
    assert abs(g.h * (g.n + 1) - 1) < 1e-15
    assert Grid1D(13).l is None
    np.testing.assert_allclose(g.nodes(), np.arange(1, 8) / 8)


@pytest.mark.parametrize("n", [0, 1, 2, 8, -3, 7.0, True])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ConfigurationError):
        Grid1D(n)


def test_poisson_n3():
    A = assemble_poisson(3)
    np.testing.assert_array_equal(A.diag, [32, 32, 32])
    np.testing.assert_array_equal(A.sub[1:], [-16, -16])
    np.testing.assert_array_equal(A.sup[:-1], [-16, -16])
    np.testing.assert_array_equal(A.matvec(np.ones(3)), [16, 0, 16])


@pytest.mark.parametrize("n", [3, 7, 15, 63])
def test_poisson_matches_display(n):
    A = assemble_poisson(n)
    np.testing.assert_array_equal(A.to_dense(), laplacian_dense(n))
    D = A.to_dense()
    assert np.array_equal(D, D.T)


def test_poisson_smallest_eigenvalue():
    A = assemble_poisson(7)
    h = 1 / 8
    lam = eigenvalues(A.to_dense()).eigenvalues.real
    assert abs(lam.min() - 4 / h**2 * np.sin(np.pi * h / 2) ** 2) < 1e-10 * lam.max()


def test_helmholtz_constant():
    A = assemble_helmholtz(3, 5.0)
    np.testing.assert_array_equal(A.diag, [7, 7, 7])
    np.testing.assert_array_equal(A.sub, assemble_poisson(3).sub)
    assert assemble_helmholtz(31, 0.0) == assemble_poisson(31)
    np.testing.assert_array_equal(assemble_helmholtz(31, 0.0).bands, assemble_poisson(31).bands)


def test_helmholtz_piecewise_n127():
    A = assemble_helmholtz(127, piecewise_k(100.0))
    x = Grid1D(127).nodes()
    expected = np.where(x < 0.5, 32768.0 - 1.0, 32768.0 - 10000.0)
    np.testing.assert_array_equal(A.diag, expected)
    D = A.to_dense() - laplacian_dense(127)
    assert np.count_nonzero(D - np.diag(np.diag(D))) == 0


def test_helmholtz_sampling_modes_differ_only_at_the_jump():
    node = assemble_helmholtz(127, piecewise_k(100.0), sampling="node")
    left = assemble_helmholtz(127, piecewise_k(100.0), sampling="left")
    diff = np.flatnonzero(node.diag != left.diag)
    # x = 0.5 is node 64 (index 63); the left-edge sampling moves it to the k=1 side
    assert diff.tolist() == [63]


@pytest.mark.parametrize("n, expected", [(127, 3.147622), (255, 1.642432), (511, 0.194238)])
def test_piecewise_left_sampling_gives_known_linear_radii(n, expected):
    A = ProblemSpec("helmholtz", n, k_max=100.0, k_sampling="left").assemble()
    assert abs(spectral_radius(TwoGridContext(A, linear_baseline(n))) - expected) < 1e-6


def test_convection_diffusion_n3():
    A = assemble_convection_diffusion(3, 0.5)
    np.testing.assert_array_equal(A.diag, [12, 12, 12])
    np.testing.assert_array_equal(A.sub[1:], [-8, -8])
    np.testing.assert_array_equal(A.sup[:-1], [-4, -4])
    D = A.to_dense()
    assert not np.array_equal(D, D.T)


@pytest.mark.parametrize("n, eps", [(7, 0.2), (63, 0.05)])
def test_convection_diffusion_matches_display(n, eps):
    h = 1 / (n + 1)
    conv = (-np.eye(n) + np.eye(n, k=1)) / h
    np.testing.assert_allclose(assemble_convection_diffusion(n, eps).to_dense(),
                               eps * laplacian_dense(n) + conv, rtol=0, atol=1e-9)


def test_convection_diffusion_large_eps_limit():
    P = laplacian_dense(15)
    errs = [np.abs(assemble_convection_diffusion(15, e).to_dense() / e - P).max() / np.abs(P).max()
            for e in (1e1, 1e3, 1e5)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-6


def test_convection_diffusion_precondition():
    with pytest.raises(PreconditionError) as info:
        assemble_convection_diffusion(63, 1 / 64)
    assert "0.015625" in str(info.value)
    with pytest.raises(PreconditionError):
        ProblemSpec("convdiff", 7, eps=0.1)


def test_convection_diffusion_linear_radius_below_one():
    rho = spectral_radius(TwoGridContext(assemble_convection_diffusion(63, 0.1), linear_baseline(63)))
    assert rho < 1


def test_matvec_against_dense(rng):
    for n in (3, 9, 40):
        A = TridiagonalMatrix(rng.standard_normal((n, 3)))
        D = A.to_dense()
        x = rng.standard_normal(n)
        X = rng.standard_normal((n, 4))
        for got, want in [(A.matvec(x), D @ x), (A.rmatvec(x), D.T @ x),
                          (A.matvec(X), D @ X), (A.rmatvec(X), D.T @ X)]:
            assert np.linalg.norm(got - want) <= 1e-13 * np.linalg.norm(want)
        assert TridiagonalMatrix.from_dense(D) == A


def test_band_corners_are_zero(rng):
    A = TridiagonalMatrix(rng.standard_normal((5, 3)))
    assert A.sub[0] == 0 and A.sup[-1] == 0


def test_blend():
    A0, A1 = assemble_poisson(7), assemble_helmholtz(7, 10.0)
    assert blend(A0, A1, 0.0) is A0
    assert blend(A0, A1, 1.0) is A1
    np.testing.assert_allclose(blend(A0, A1, 0.25).diag, A0.diag - 0.25 * 100)


def test_problem_spec_validation():
    with pytest.raises(ConfigurationError):
        ProblemSpec("helmholtz", 7)
    with pytest.raises(ConfigurationError):
        ProblemSpec("helmholtz", 7, k=1.0, k_max=2.0)
    with pytest.raises(ConfigurationError):
        ProblemSpec("wave", 7)
    assert ProblemSpec("helmholtz", 7, k=5.0).assemble() == assemble_helmholtz(7, 5.0)
