"""Model-problem matrices on a uniform 1D grid with homogeneous Dirichlet boundaries.

Every matrix is tridiagonal and stored as an ``(n, 3)`` band array whose
columns hold the sub-diagonal, the diagonal and the super-diagonal. Row ``i``
of the array describes row ``i`` of the matrix, so ``bands[0, 0]`` and
``bands[n - 1, 2]`` are always zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigurationError, PreconditionError

__all__ = [
    "Grid1D",
    "TridiagonalMatrix",
    "ProblemSpec",
    "assemble_poisson",
    "assemble_helmholtz",
    "assemble_convection_diffusion",
    "piecewise_k",
    "blend",
]


@dataclass(frozen=True)
class Grid1D:
    """Interior nodes ``x_i = i*h``, ``i = 1..n`` of the unit interval.

    The coarse grid keeps every second node, so ``n`` must be odd. Powers
    ``n = 2**l - 1`` are the usual choice; other odd sizes (13, 23, 1115, ...)
    are accepted as well.
    """

    n: int

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise ConfigurationError(f"grid size must be an integer, got {n!r}")
        if n < 3 or n % 2 == 0:
            raise ConfigurationError(f"grid size must be odd and >= 3, got n={n}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def l(self) -> Optional[int]:
        """Level ``l`` with ``n = 2**l - 1``, or None for non-dyadic sizes."""
        m = self.n + 1
        return m.bit_length() - 1 if m & (m - 1) == 0 else None

    @property
    def n_coarse(self) -> int:
        return (self.n - 1) // 2

    def nodes(self) -> np.ndarray:
        return np.arange(1, self.n + 1) * self.h


class TridiagonalMatrix:
    """Square tridiagonal matrix in band storage."""

    def __init__(self, bands):
        bands = np.array(bands, dtype=float)
        if bands.ndim != 2 or bands.shape[1] != 3 or bands.shape[0] < 1:
            raise ConfigurationError(f"band array must have shape (n, 3), got {bands.shape}")
        if not np.all(np.isfinite(bands)):
            raise ConfigurationError("band array has non-finite entries")
        bands[0, 0] = 0.0
        bands[-1, 2] = 0.0
        bands.setflags(write=False)
        self.bands = bands

    @classmethod
    def from_diagonals(cls, sub, diag, sup) -> "TridiagonalMatrix":
        """Build from full-length arrays (``sub[0]`` and ``sup[-1]`` are ignored)."""
        return cls(np.column_stack([sub, diag, sup]))

    @classmethod
    def from_dense(cls, M) -> "TridiagonalMatrix":
        M = np.asarray(M, dtype=float)
        n = M.shape[0]
        bands = np.zeros((n, 3))
        bands[:, 1] = np.diag(M)
        bands[1:, 0] = np.diag(M, -1)
        bands[:-1, 2] = np.diag(M, 1)
        return cls(bands)

    @property
    def n(self) -> int:
        return self.bands.shape[0]

    @property
    def sub(self) -> np.ndarray:
        return self.bands[:, 0]

    @property
    def diag(self) -> np.ndarray:
        return self.bands[:, 1]

    @property
    def sup(self) -> np.ndarray:
        return self.bands[:, 2]

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n:
            raise ValueError(f"vector length {x.shape[0]} does not match matrix size {self.n}")
        return x

    def matvec(self, x) -> np.ndarray:
        """``A @ x`` for a vector or an ``(n, m)`` block of column vectors."""
        x = self._check(x)
        b = self.bands if x.ndim == 1 else self.bands[:, :, None]
        y = b[:, 1] * x
        y[1:] += b[1:, 0] * x[:-1]
        y[:-1] += b[:-1, 2] * x[1:]
        return y

    def rmatvec(self, x) -> np.ndarray:
        """``A.T @ x``."""
        x = self._check(x)
        b = self.bands if x.ndim == 1 else self.bands[:, :, None]
        y = b[:, 1] * x
        y[:-1] += b[1:, 0] * x[1:]
        y[1:] += b[:-1, 2] * x[:-1]
        return y

    def to_dense(self) -> np.ndarray:
        n = self.n
        M = np.diag(self.diag)
        if n > 1:
            M += np.diag(self.sub[1:], -1) + np.diag(self.sup[:-1], 1)
        return M

    def __add__(self, other):
        if not isinstance(other, TridiagonalMatrix):
            return NotImplemented
        return TridiagonalMatrix(self.bands + other.bands)

    def __sub__(self, other):
        if not isinstance(other, TridiagonalMatrix):
            return NotImplemented
        return TridiagonalMatrix(self.bands - other.bands)

    def __mul__(self, alpha):
        return TridiagonalMatrix(float(alpha) * self.bands)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, TridiagonalMatrix) and np.array_equal(self.bands, other.bands)

    def __repr__(self):
        return f"TridiagonalMatrix(n={self.n})"


KProfile = Union[float, Callable[[np.ndarray], np.ndarray]]


def piecewise_k(k_max: float, k_min: float = 1.0, jump: float = 0.5):
    """Wavenumber equal to ``k_min`` for ``x < jump`` and ``k_max`` beyond."""

    def k(x):
        return np.where(np.asarray(x) < jump, k_min, k_max)

    return k


@dataclass(frozen=True)
class ProblemSpec:
    """A model problem: ``kind`` is ``"poisson"``, ``"helmholtz"`` or ``"convdiff"``.

    ``k`` is a constant wavenumber, ``k_max`` selects the piecewise-constant
    profile, ``eps`` is the diffusion coefficient of the convection-diffusion
    problem. ``k_sampling`` chooses where the wavenumber is evaluated:
    ``"node"`` uses ``x_i = i*h``; ``"left"`` uses ``x_i = (i - 1)*h``.
    """

    kind: str
    n: int
    k: Optional[float] = None
    k_max: Optional[float] = None
    eps: Optional[float] = None
    k_sampling: str = "node"

    def __post_init__(self):
        grid = Grid1D(self.n)
        if self.kind == "poisson":
            pass
        elif self.kind == "helmholtz":
            if (self.k is None) == (self.k_max is None):
                raise ConfigurationError("helmholtz needs exactly one of k (constant) or k_max (piecewise)")
            if self.k_sampling not in ("node", "left"):
                raise ConfigurationError(f"unknown k sampling {self.k_sampling!r}")
        elif self.kind == "convdiff":
            if self.eps is None:
                raise ConfigurationError("convdiff needs eps")
            if not grid.h < self.eps:
                raise PreconditionError(f"convection-diffusion needs h < eps, got h={grid.h:g}, eps={self.eps:g}")
        else:
            raise ConfigurationError(f"unknown problem kind {self.kind!r}")

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.n)

    def label(self) -> str:
        if self.kind == "helmholtz":
            return f"helmholtz(k={self.k:g})" if self.k is not None else f"helmholtz(kmax={self.k_max:g})"
        if self.kind == "convdiff":
            return f"convdiff(eps={self.eps:g})"
        return "poisson"

    def assemble(self) -> TridiagonalMatrix:
        grid = self.grid
        if self.kind == "poisson":
            return assemble_poisson(grid)
        if self.kind == "helmholtz":
            profile = self.k if self.k is not None else piecewise_k(self.k_max)
            return assemble_helmholtz(grid, profile, sampling=self.k_sampling)
        return assemble_convection_diffusion(grid, self.eps)


def _as_grid(grid) -> Grid1D:
    return grid if isinstance(grid, Grid1D) else Grid1D(int(grid))


def _laplacian_bands(grid: Grid1D, scale: float = 1.0) -> np.ndarray:
    c = scale / grid.h**2
    bands = np.empty((grid.n, 3))
    bands[:, 0] = -c
    bands[:, 1] = 2.0 * c
    bands[:, 2] = -c
    return bands


def assemble_poisson(grid) -> TridiagonalMatrix:
    """``(1/h^2) tridiag(-1, 2, -1)`` for ``-u'' = f``."""
    return TridiagonalMatrix(_laplacian_bands(_as_grid(grid)))


def assemble_helmholtz(grid, k_profile: KProfile, sampling: str = "node") -> TridiagonalMatrix:
    """Poisson matrix minus ``diag(k(x_i)**2)`` for ``-u'' - k^2 u = f``."""
    grid = _as_grid(grid)
    if sampling == "node":
        x = grid.nodes()
    elif sampling == "left":
        x = grid.nodes() - grid.h
    else:
        raise ConfigurationError(f"unknown k sampling {sampling!r}")
    k = k_profile(x) if callable(k_profile) else np.full(grid.n, float(k_profile))
    bands = _laplacian_bands(grid)
    bands[:, 1] -= np.asarray(k, dtype=float) ** 2
    return TridiagonalMatrix(bands)


def assemble_convection_diffusion(grid, eps: float) -> TridiagonalMatrix:
    """``(eps/h^2) tridiag(-1, 2, -1) + (1/h) bidiag(-1, 1)`` for ``-eps u'' + u' = f``.

    The convection part is the forward difference (main diagonal -1, super-diagonal +1).
    """
    grid = _as_grid(grid)
    if not grid.h < eps:
        raise PreconditionError(f"convection-diffusion needs h < eps, got h={grid.h:g}, eps={eps:g}")
    bands = _laplacian_bands(grid, eps)
    bands[:, 1] -= 1.0 / grid.h
    bands[:, 2] += 1.0 / grid.h
    return TridiagonalMatrix(bands)


def blend(A0: TridiagonalMatrix, A1: TridiagonalMatrix, alpha: float) -> TridiagonalMatrix:
    """Homotopy matrix ``alpha*A1 + (1 - alpha)*A0``."""
    if A0.n != A1.n:
        raise ConfigurationError(f"homotopy endpoints differ in size: {A0.n} vs {A1.n}")
    if alpha == 0.0:
        return A0
    if alpha == 1.0:
        return A1
    return TridiagonalMatrix(alpha * A1.bands + (1.0 - alpha) * A0.bands)
