import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import exact_smoother_context, perturbed
from deepmg.errors import ConfigurationError, EigenvalueConvergenceError
from deepmg.loss import exact_frobenius_power
from deepmg.problems import assemble_helmholtz, assemble_poisson, Grid1D
from deepmg.spectral import (
    balance,
    eigenvalues,
    hessenberg,
    materialize_iteration_matrix,
    spectral_radius,
)
from deepmg.transfer import linear_baseline
from deepmg.twogrid import TwoGridContext, apply_iteration_matrix


def sorted_eigs(w):
    return np.array(sorted(np.asarray(w), key=lambda z: (round(z.real, 8), z.imag)))


def test_exact_configuration_materializes_to_zero():
    C = materialize_iteration_matrix(exact_smoother_context())
    assert np.all(C == 0)
    assert eigenvalues(C).rho == 0


def test_materialized_matrix_matches_operator(rng):
    ctx = TwoGridContext(assemble_poisson(15), perturbed(15, rng))
    C = materialize_iteration_matrix(ctx)
    z = rng.standard_normal(15)
    np.testing.assert_allclose(C @ z, apply_iteration_matrix(ctx, z), rtol=1e-13, atol=1e-15)


def test_dense_cap(poisson7):
    with pytest.raises(ConfigurationError):
        materialize_iteration_matrix(poisson7, cap=5)


@pytest.mark.parametrize("n", [7, 31, 127])
def test_poisson_linear_baseline(n):
    ctx = TwoGridContext(assemble_poisson(n), linear_baseline(n))
    assert abs(spectral_radius(ctx) - 0.061728) < 5e-7


def test_helmholtz_reference_value():
    A = assemble_helmholtz(Grid1D(23), 20.0)
    assert abs(spectral_radius(TwoGridContext(A, linear_baseline(23))) - 3.388036) < 5e-7


def test_diagonal_and_rotation():
    w = eigenvalues(np.diag([3.0, -1.0, 0.5, 2.0])).eigenvalues
    np.testing.assert_allclose(np.sort(w.real), [-1.0, 0.5, 2.0, 3.0], atol=1e-14)
    assert np.all(w.imag == 0)
    t = 0.3
    rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    spec = eigenvalues(2 * rot)
    np.testing.assert_allclose(sorted_eigs(spec.eigenvalues), sorted_eigs(2 * np.exp([-1j * t, 1j * t])),
                               atol=1e-14)
    assert abs(spec.rho - 2) < 1e-14


def test_jacobi_iteration_spectrum():
    n = 31
    A = assemble_poisson(n).to_dense()
    S = np.eye(n) - (2 / 3) * A / np.diag(A)[:, None]
    k = np.arange(1, n + 1)
    expected = 1 - (4 / 3) * np.sin(k * np.pi / (2 * (n + 1))) ** 2
    w = eigenvalues(S).eigenvalues
    np.testing.assert_allclose(np.sort(w.real), np.sort(expected), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**31 - 1))
def test_matches_numpy_and_invariants(n, seed):
    M = np.random.default_rng(seed).standard_normal((n, n))
    w = eigenvalues(M).eigenvalues
    ref = np.linalg.eigvals(M)
    scale = max(1.0, np.abs(ref).max())
    assert abs(w.sum() - np.trace(M)) <= 1e-10 * n * scale
    assert abs(abs(np.prod(w)) - abs(np.linalg.det(M))) <= 1e-8 * max(1.0, abs(np.linalg.det(M)))
    assert abs(np.abs(w).max() - np.abs(ref).max()) <= 1e-10 * scale
    # each reference eigenvalue has a close partner
    assert np.max(np.min(np.abs(ref[:, None] - w[None, :]), axis=1)) <= 1e-7 * scale


def test_conjugate_pairs_adjacent(rng):
    w = eigenvalues(rng.standard_normal((20, 20))).eigenvalues
    i = 0
    while i < w.size:
        if w[i].imag != 0:
            assert w[i + 1] == np.conj(w[i])
            i += 2
        else:
            i += 1


def test_similarity_invariance(rng):
    M = rng.standard_normal((12, 12))
    Q = np.linalg.qr(rng.standard_normal((12, 12)))[0]
    T = np.diag(rng.uniform(0.5, 2.0, 12))
    for B in (Q @ M @ Q.T, T @ M @ np.linalg.inv(T)):
        assert abs(eigenvalues(B).rho - eigenvalues(M).rho) <= 1e-10 * eigenvalues(M).rho


def test_convergence_failure_reports_block(rng):
    with pytest.raises(EigenvalueConvergenceError) as info:
        eigenvalues(rng.standard_normal((8, 8)), sweep_factor=0)
    assert info.value.block.shape[0] >= 2


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigenvalues(np.array([[np.nan]]))


def test_frobenius_power_bounds_radius(rng):
    for _ in range(5):
        ctx = TwoGridContext(assemble_poisson(15), perturbed(15, rng, 0.3))
        C = materialize_iteration_matrix(ctx)
        rho = eigenvalues(C).rho
        for K in (1, 3, 10):
            assert exact_frobenius_power(C, K) ** (1 / (2 * K)) >= rho * (1 - 1e-12)


def test_balance_and_hessenberg_are_similarities(rng):
    M = rng.standard_normal((10, 10)) * np.logspace(-3, 3, 10)[:, None]
    B = balance(M)
    H = hessenberg(M)
    assert np.all(np.tril(H, -2) == 0)
    ref = np.abs(np.linalg.eigvals(M)).max()
    for X in (B, H):
        assert abs(np.abs(np.linalg.eigvals(X)).max() - ref) <= 1e-10 * ref
    assert abs(np.trace(H) - np.trace(M)) <= 1e-10 * np.abs(M).sum()
