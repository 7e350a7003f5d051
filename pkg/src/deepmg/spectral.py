"""Dense iteration matrix and a real nonsymmetric eigenvalue solver.

``eigenvalues`` balances the matrix, reduces it to upper Hessenberg form with
Householder reflections and runs the Francis implicit double-shift QR
iteration with 1x1/2x2 deflation. Only eigenvalues are computed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import ConfigurationError, EigenvalueConvergenceError
from .twogrid import TwoGridContext, apply_iteration_matrix

__all__ = [
    "DENSE_CAP",
    "Spectrum",
    "materialize_iteration_matrix",
    "eigenvalues",
    "spectral_radius",
    "balance",
    "hessenberg",
]

DENSE_CAP = 2048
_RADIX = 2.0
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    iterations: int

    @property
    def rho(self) -> float:
        return float(np.max(np.abs(self.eigenvalues))) if self.eigenvalues.size else 0.0


def materialize_iteration_matrix(ctx: TwoGridContext, cap: int = DENSE_CAP) -> np.ndarray:
    """Column ``j`` is ``C e_j``."""
    if ctx.n > cap:
        raise ConfigurationError(
            f"n={ctx.n} exceeds the dense cap {cap}; raise the cap explicitly or use the surrogate radius"
        )
    return apply_iteration_matrix(ctx, np.eye(ctx.n))


@numba.njit(cache=True)
def _balance(a):
    n = a.shape[0]
    sqrdx = _RADIX * _RADIX
    done = False
    while not done:
        done = True
        for i in range(n):
            r = 0.0
            c = 0.0
            for j in range(n):
                if j != i:
                    c += abs(a[j, i])
                    r += abs(a[i, j])
            if c != 0.0 and r != 0.0:
                g = r / _RADIX
                f = 1.0
                s = c + r
                while c < g:
                    f *= _RADIX
                    c *= sqrdx
                g = r * _RADIX
                while c > g:
                    f /= _RADIX
                    c /= sqrdx
                if (c + r) / f < 0.95 * s:
                    done = False
                    g = 1.0 / f
                    for j in range(n):
                        a[i, j] *= g
                    for j in range(n):
                        a[j, i] *= f


@numba.njit(cache=True)
def _hessenberg(a):
    n = a.shape[0]
    v = np.empty(n)
    for k in range(n - 2):
        alpha = 0.0
        for i in range(k + 1, n):
            alpha += a[i, k] * a[i, k]
        alpha = np.sqrt(alpha)
        if alpha == 0.0:
            continue
        if a[k + 1, k] > 0:
            alpha = -alpha
        # v = x - alpha e_1, H = I - 2 v v^T / (v^T v)
        vnorm2 = 0.0
        for i in range(k + 1, n):
            v[i] = a[i, k]
        v[k + 1] -= alpha
        for i in range(k + 1, n):
            vnorm2 += v[i] * v[i]
        if vnorm2 == 0.0:
            continue
        beta = 2.0 / vnorm2
        for j in range(k, n):
            s = 0.0
            for i in range(k + 1, n):
                s += v[i] * a[i, j]
            s *= beta
            for i in range(k + 1, n):
                a[i, j] -= s * v[i]
        for i in range(n):
            s = 0.0
            for j in range(k + 1, n):
                s += a[i, j] * v[j]
            s *= beta
            for j in range(k + 1, n):
                a[i, j] -= s * v[j]
        for i in range(k + 2, n):
            a[i, k] = 0.0


@numba.njit(cache=True)
def _sign(a, b):
    return abs(a) if b >= 0.0 else -abs(a)


@numba.njit(cache=True)
def _hqr(a, wr, wi, max_sweeps):
    """Francis double-shift QR on upper Hessenberg ``a`` (destroyed).

    Returns ``(status, sweeps, lo, hi)``; status 0 on success, otherwise
    ``a[lo:hi+1, lo:hi+1]`` is the unreduced block at the time of failure.
    """
    n = a.shape[0]
    anorm = 0.0
    for i in range(n):
        for j in range(max(i - 1, 0), n):
            anorm += abs(a[i, j])
    nn = n - 1
    t = 0.0
    total = 0
    x = y = z = w = p = q = r = s = 0.0
    while nn >= 0:
        its = 0
        while True:
            # look for a negligible subdiagonal element
            l = 0
            for ll in range(nn, 0, -1):
                s = abs(a[ll - 1, ll - 1]) + abs(a[ll, ll])
                if s == 0.0:
                    s = anorm
                if abs(a[ll, ll - 1]) <= _EPS * s:
                    a[ll, ll - 1] = 0.0
                    l = ll
                    break
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
            else:
                y = a[nn - 1, nn - 1]
                w = a[nn, nn - 1] * a[nn - 1, nn]
                if l == nn - 1:
                    p = 0.5 * (y - x)
                    q = p * p + w
                    z = np.sqrt(abs(q))
                    x += t
                    if q >= 0.0:
                        z = p + _sign(z, p)
                        wr[nn - 1] = x + z
                        wr[nn] = x + z
                        if z != 0.0:
                            wr[nn] = x - w / z
                        wi[nn - 1] = 0.0
                        wi[nn] = 0.0
                    else:
                        wr[nn - 1] = x + p
                        wr[nn] = x + p
                        wi[nn - 1] = z
                        wi[nn] = -z
                    nn -= 2
                else:
                    if total >= max_sweeps:
                        return 1, total, l, nn
                    if its > 0 and its % 10 == 0:
                        # exceptional shift
                        t += x
                        for i in range(nn + 1):
                            a[i, i] -= x
                        s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                        x = 0.75 * s
                        y = x
                        w = -0.4375 * s * s
                    its += 1
                    total += 1
                    m = nn - 2
                    while m >= l:
                        z = a[m, m]
                        r = x - z
                        s = y - z
                        p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                        q = a[m + 1, m + 1] - z - r - s
                        r = a[m + 2, m + 1]
                        s = abs(p) + abs(q) + abs(r)
                        p /= s
                        q /= s
                        r /= s
                        if m == l:
                            break
                        u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                        v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                        if u <= _EPS * v:
                            break
                        m -= 1
                    for i in range(m + 2, nn + 1):
                        a[i, i - 2] = 0.0
                        if i != m + 2:
                            a[i, i - 3] = 0.0
                    for k in range(m, nn):
                        if k != m:
                            p = a[k, k - 1]
                            q = a[k + 1, k - 1]
                            r = 0.0
                            if k != nn - 1:
                                r = a[k + 2, k - 1]
                            x = abs(p) + abs(q) + abs(r)
                            if x != 0.0:
                                p /= x
                                q /= x
                                r /= x
                        s = _sign(np.sqrt(p * p + q * q + r * r), p)
                        if s != 0.0:
                            if k == m:
                                if l != m:
                                    a[k, k - 1] = -a[k, k - 1]
                            else:
                                a[k, k - 1] = -s * x
                            p += s
                            x = p / s
                            y = q / s
                            z = r / s
                            q /= p
                            r /= p
                            for j in range(k, nn + 1):
                                p = a[k, j] + q * a[k + 1, j]
                                if k != nn - 1:
                                    p += r * a[k + 2, j]
                                    a[k + 2, j] -= p * z
                                a[k + 1, j] -= p * y
                                a[k, j] -= p * x
                            mmin = nn if nn < k + 3 else k + 3
                            for i in range(l, mmin + 1):
                                p = x * a[i, k] + y * a[i, k + 1]
                                if k != nn - 1:
                                    p += z * a[i, k + 2]
                                    a[i, k + 2] -= p * r
                                a[i, k + 1] -= p * q
                                a[i, k] -= p
            if not (l < nn - 1):
                break
    return 0, total, 0, 0


def balance(M) -> np.ndarray:
    """Diagonal similarity scaling by powers of two that equalizes row and column norms."""
    a = np.array(M, dtype=float, order="C")
    _balance(a)
    return a


def hessenberg(M) -> np.ndarray:
    """Upper Hessenberg matrix orthogonally similar to ``M``."""
    a = np.array(M, dtype=float, order="C")
    _hessenberg(a)
    return a


def eigenvalues(M, sweep_factor: int = 40) -> Spectrum:
    """All eigenvalues of a real square matrix; conjugate pairs are adjacent."""
    a = np.array(M, dtype=float, order="C")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n = a.shape[0]
    if n == 0:
        return Spectrum(np.zeros(0, dtype=complex), 0)
    _balance(a)
    _hessenberg(a)
    wr = np.zeros(n)
    wi = np.zeros(n)
    work = a.copy()
    status, sweeps, lo, hi = _hqr(work, wr, wi, sweep_factor * n)
    if status != 0:
        raise EigenvalueConvergenceError(work[lo:hi + 1, lo:hi + 1].copy(), sweeps)
    return Spectrum(wr + 1j * wi, sweeps)


def spectral_radius(ctx: TwoGridContext, cap: int = DENSE_CAP) -> float:
    """``max |lambda_i(C)|`` from the dense iteration matrix."""
    return eigenvalues(materialize_iteration_matrix(ctx, cap)).rho
