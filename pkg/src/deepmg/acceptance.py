"""Acceptance criteria, runnable from ``deepmg check`` and from the test suite.

Each criterion returns a :class:`CriterionResult`; tolerances are fixed here.
"""
from __future__ import annotations

import sys
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from .grad import grad_loss
from .loss import LossConfig, RademacherSampler, estimate_loss, estimator_variance, exact_frobenius_power
from .problems import Grid1D, assemble_convection_diffusion, assemble_helmholtz, assemble_poisson
from .spectral import eigenvalues, materialize_iteration_matrix, spectral_radius
from .train import AdamConfig, HomotopyConfig, homotopy_train, train
from .transfer import TransferPair, linear_baseline
from .twogrid import TwoGridContext

POISSON_LINEAR_RHO = 0.061728
HELMHOLTZ_LOW = {(7, 5): 0.226356, (13, 10): 1.808608, (17, 15): 0.826753, (23, 20): 3.388036}
HELMHOLTZ_HIGH = {(1115, 100): 0.180680}
HELMHOLTZ_HIGH_LONG = {
    (1115, 300): 13.389492, (1115, 500): 14.608550, (1115, 700): 99.555631,
    (1115, 900): 62.940589, (1115, 1000): 4789.842424,
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f} s)"


def _rho(A, params):
    return spectral_radius(TwoGridContext(A, params))


def random_params(n: int, rng: np.random.Generator, scale: float = 0.1) -> TransferPair:
    """Linear baseline with relative Gaussian perturbations of every parameter."""
    base = linear_baseline(n)
    theta = base.flatten()
    return TransferPair.unflatten(theta * (1.0 + scale * rng.standard_normal(theta.size)), n)


def random_problem(rng: np.random.Generator, n: int):
    kind = rng.integers(3)
    if kind == 0:
        return assemble_poisson(n)
    if kind == 1:
        return assemble_helmholtz(n, float(rng.uniform(1.0, 8.0)))
    h = Grid1D(n).h
    return assemble_convection_diffusion(n, float(rng.uniform(1.5 * h, 0.3)))


def criterion_1() -> CriterionResult:
    vals = {n: _rho(assemble_poisson(n), linear_baseline(n)) for n in (7, 15, 31, 63, 127)}
    worst = max(abs(v - POISSON_LINEAR_RHO) for v in vals.values())
    detail = ", ".join(f"n={n}: {v:.6f}" for n, v in vals.items())
    return CriterionResult(1, "Poisson linear baseline 0.061728 +- 1e-5", worst <= 1e-5, detail)


def criterion_2(long: bool = False) -> CriterionResult:
    parts, ok = [], True
    cases = [(nk, ref, 1e-3) for nk, ref in HELMHOLTZ_LOW.items()]
    cases += [(nk, ref, 1e-2) for nk, ref in HELMHOLTZ_HIGH.items()]
    for (n, k), ref, tol in cases:
        v = _rho(assemble_helmholtz(n, k), linear_baseline(n))
        ok &= abs(v - ref) <= tol
        parts.append(f"(n={n},k={k:g}): {v:.6f} vs {ref}")
    if long:
        for (n, k), ref in HELMHOLTZ_HIGH_LONG.items():
            v = _rho(assemble_helmholtz(n, k), linear_baseline(n))
            ok &= abs(v - ref) <= 1e-2 * max(1.0, ref)
            parts.append(f"(n={n},k={k:g}): {v:.6f} vs {ref}")
    return CriterionResult(2, "Helmholtz linear baselines", bool(ok), "; ".join(parts))


def _train_rhos(A, n, seeds, T=1000, N=10):
    return [train(A, linear_baseline(n), AdamConfig(step=1e-4, T=T), LossConfig(10, N, s)).rho for s in seeds]


def criterion_3() -> CriterionResult:
    rhos = _train_rhos(assemble_poisson(31), 31, range(5))
    med = float(np.median(rhos))
    ok = med < 0.0618 and med <= 0.05
    return CriterionResult(3, "Poisson n=31 training: median rho < 0.0618 and <= 0.05", ok,
                           f"median {med:.6f}; per seed " + ", ".join(f"{r:.6f}" for r in rhos))


def criterion_4() -> CriterionResult:
    rhos = _train_rhos(assemble_helmholtz(13, 10), 13, range(5))
    good = sum(r < 0.2 for r in rhos)
    return CriterionResult(4, "Helmholtz (n=13, k=10) training: rho < 0.2 for >= 4/5 seeds", good >= 4,
                           f"{good}/5 below 0.2; " + ", ".join(f"{r:.6f}" for r in rhos))


def criterion_5() -> CriterionResult:
    n, k = 113, 100
    A1 = assemble_helmholtz(n, k)
    lin = linear_baseline(n)
    hom = homotopy_train(HomotopyConfig(assemble_poisson(n), A1, tau=0.5, delta=0.1), AdamConfig(T=100),
                         LossConfig(10, 10, 0), lin)
    std = train(A1, lin, AdamConfig(T=len(hom.losses)), LossConfig(10, 10, 0))
    ok = hom.converged and hom.rho <= std.rho and hom.rho < 1.0
    return CriterionResult(5, "Homotopy vs standard init (k=100, n=113, equal budget)", ok,
                           f"homotopy {hom.rho:.6f}, standard {std.rho:.6f}, linear {hom.rho_init:.6f}, "
                           f"budget {len(hom.losses)} iterations, {len(hom.alphas)} accepted stages")


def convdiff_points(n: int = 63, num: int = 5) -> np.ndarray:
    h = Grid1D(n).h
    return np.geomspace(1.01 * h, 0.1, num)


def criterion_6() -> CriterionResult:
    n = 63
    rows = []
    for i, eps in enumerate(convdiff_points(n)):
        A = assemble_convection_diffusion(n, eps)
        rep = train(A, linear_baseline(n), AdamConfig(step=1e-4, T=500), LossConfig(10, 5, i))
        rows.append((eps, rep.rho_init, rep.rho))
    wins = sum(d <= lin for _, lin, d in rows)
    detail = f"{wins}/5 points DMG <= linear; " + ", ".join(f"eps={e:.4f}: {l:.4f}->{d:.4f}" for e, l, d in rows)
    return CriterionResult(6, "Convection-diffusion sweep n=63", wins >= 4, detail)


def central_fd_gradient(A, params, Z, K):
    theta = params.flatten()
    g = np.empty_like(theta)
    for i in range(theta.size):
        step = 1e-6 * max(1.0, abs(theta[i]))
        tp, tm = theta.copy(), theta.copy()
        tp[i] += step
        tm[i] -= step
        fp = grad_loss(TwoGridContext(A, TransferPair.unflatten(tp, A.n)), Z, K)[0]
        fm = grad_loss(TwoGridContext(A, TransferPair.unflatten(tm, A.n)), Z, K)[0]
        g[i] = (fp - fm) / (2 * step)
    return g


def gradient_discrepancy(A, params, Z, K) -> float:
    """Max relative error of the adjoint gradient against central differences.

    Two views are combined: plain relative error over entries with
    ``|fd| > 1e-8``, and error relative to ``max(|fd|, 1e-8 ||fd||_inf)`` over
    all entries, which still bites when the whole gradient is below 1e-8.
    """
    _, g = grad_loss(TwoGridContext(A, params), Z, K)
    fd = central_fd_gradient(A, params, Z, K)
    err = np.abs(g.flatten() - fd)
    scaled = err / np.maximum(np.abs(fd), 1e-8 * np.max(np.abs(fd)))
    big = np.abs(fd) > 1e-8
    plain = err[big] / np.abs(fd[big]) if big.any() else np.zeros(1)
    return float(max(scaled.max(), plain.max()))


def gradient_configurations(count: int = 20, seed: int = 7):
    rng = np.random.default_rng(seed)
    for j in range(count):
        n = int(rng.choice([7, 15, 31]))
        K = int(rng.choice([1, 3, 5]))
        A = random_problem(rng, n)
        params = random_params(n, rng)
        Z = RademacherSampler(seed).batch(n, 2, (j,))
        yield A, params, Z, K


def criterion_7() -> CriterionResult:
    errs = [gradient_discrepancy(*cfg) for cfg in gradient_configurations()]
    worst = max(errs)
    return CriterionResult(7, "Gradient vs central finite differences (20 configs)", worst <= 1e-5,
                           f"max relative error {worst:.2e}")


def estimator_statistics(C: np.ndarray, K: int, seeds: int = 500, N: int = 1):
    n = C.shape[0]
    M = np.linalg.matrix_power(C, K)
    samples = []
    for s in range(seeds):
        Z = RademacherSampler(s).batch(n, N)
        Y = M @ Z
        samples.append(float(np.sum(Y * Y)) / N)
    samples = np.array(samples)
    return samples, exact_frobenius_power(C, K), estimator_variance(C, K, N)


def criterion_8() -> CriterionResult:
    rng = np.random.default_rng(3)
    n, K = 7, 3
    C = materialize_iteration_matrix(TwoGridContext(assemble_poisson(n), random_params(n, rng, 0.3)))
    samples, exact, var = estimator_statistics(C, K)
    mean, svar = samples.mean(), samples.var(ddof=1)
    se = np.sqrt(svar / samples.size)
    ok_mean = abs(mean - exact) <= 3 * se
    ok_var = abs(svar - var) <= 0.2 * var
    return CriterionResult(8, "Estimator mean and variance (500 seeds, n=7)", bool(ok_mean and ok_var),
                           f"mean {mean:.4e} vs exact {exact:.4e} (3 SE = {3 * se:.2e}); "
                           f"variance {svar:.4e} vs formula {var:.4e}")


def gelfand_draws(count: int = 100, seed: int = 11):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.choice([7, 15, 31]))
        A = random_problem(rng, n)
        params = random_params(n, rng, 0.2)
        yield materialize_iteration_matrix(TwoGridContext(A, params))


def criterion_9() -> CriterionResult:
    worst = -np.inf
    violations = 0
    for C in gelfand_draws():
        rho = eigenvalues(C).rho
        for K in (1, 5, 10):
            bound = exact_frobenius_power(C, K) ** (1.0 / (2 * K))
            worst = max(worst, rho - bound)
            violations += rho > bound * (1 + 1e-12)
    return CriterionResult(9, "Gelfand upper bound rho <= ||C^K||_F^(1/K)", violations == 0,
                           f"{violations} violations in 300 checks; max(rho - bound) = {worst:.3e}")


def criterion_10() -> CriterionResult:
    rng = np.random.default_rng(5)
    worst_tr = worst_det = 0.0
    for n in (2, 5, 16, 33, 64):
        M = rng.standard_normal((n, n))
        lam = eigenvalues(M).eigenvalues
        tr = np.trace(M)
        worst_tr = max(worst_tr, abs(lam.sum().real - tr) / max(1.0, abs(tr), np.abs(lam).sum()))
        sign, logdet = np.linalg.slogdet(M)
        worst_det = max(worst_det, abs(np.sum(np.log(np.abs(lam))) - logdet) )
    n = 63
    A = assemble_poisson(n)
    S = np.eye(n) - (2.0 / 3.0) * A.to_dense() / A.diag[:, None]
    h = Grid1D(n).h
    analytic = np.sort(1 - (4.0 / 3.0) * np.sin(np.arange(1, n + 1) * np.pi * h / 2) ** 2)
    jac = np.max(np.abs(np.sort(eigenvalues(S).eigenvalues.real) - analytic))
    ok = worst_tr <= 1e-9 and worst_det <= 1e-8 and jac <= 1e-8
    return CriterionResult(10, "Eigensolver trace/determinant/Jacobi-spectrum checks", ok,
                           f"trace rel err {worst_tr:.1e}, log|det| err {worst_det:.1e}, Jacobi err {jac:.1e}")


CRITERIA: Dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def run_criterion(number: int, long: bool = False) -> CriterionResult:
    start = time.perf_counter()
    fn = CRITERIA[number]
    result = fn(long=long) if number == 2 else fn()
    result.seconds = time.perf_counter() - start
    return result


def run_criteria(only: Optional[List[int]] = None, long: bool = False, stream=sys.stdout) -> List[CriterionResult]:
    results = []
    for number in only or sorted(CRITERIA):
        res = run_criterion(number, long)
        results.append(res)
        if stream is not None:
            print(res.line(), file=stream, flush=True)
    return results
