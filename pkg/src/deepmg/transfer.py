"""Banded restriction/prolongation operators.

Restriction row ``i`` and prolongation column ``i`` (0-based) touch the fine
indices ``2i, 2i+1, 2i+2``; both are stored as ``(n_c, 3)`` arrays with
``n_c = (n - 1) // 2``. The same two kernels serve all four products:
``restrict_band`` computes ``W @ v`` for a row-banded ``W`` and
``prolong_band`` computes ``W.T @ v_c``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .problems import Grid1D, TridiagonalMatrix

__all__ = [
    "RestrictionOp",
    "ProlongationOp",
    "TransferPair",
    "linear_baseline",
    "restrict",
    "prolong",
    "galerkin_project",
    "restrict_band",
    "prolong_band",
    "band_outer",
    "write_operators_csv",
    "read_operators_csv",
    "operators_to_csv",
]


def _coarse_size(n: int) -> int:
    return Grid1D(n).n_coarse


def restrict_band(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``out[i] = w[i,0] v[2i] + w[i,1] v[2i+1] + w[i,2] v[2i+2]`` (columns of ``v`` independent)."""
    nc = w.shape[0]
    if v.shape[0] != 2 * nc + 1:
        raise ValueError(f"fine vector length {v.shape[0]} does not match coarse size {nc}")
    if v.ndim == 2:
        w = w[:, :, None]
    return w[:, 0] * v[0:2 * nc:2] + w[:, 1] * v[1:2 * nc + 1:2] + w[:, 2] * v[2:2 * nc + 2:2]


def prolong_band(w: np.ndarray, vc: np.ndarray) -> np.ndarray:
    """Transpose of :func:`restrict_band`: scatter ``w[i,k] vc[i]`` into fine index ``2i+k``."""
    nc = w.shape[0]
    if vc.shape[0] != nc:
        raise ValueError(f"coarse vector length {vc.shape[0]} does not match coarse size {nc}")
    if vc.ndim == 2:
        w = w[:, :, None]
    out = np.zeros((2 * nc + 1,) + vc.shape[1:])
    out[0:2 * nc:2] = w[:, 0] * vc
    out[1:2 * nc + 1:2] = w[:, 1] * vc
    out[2:2 * nc + 2:2] += w[:, 2] * vc
    return out


def band_outer(vc: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Projection of ``vc @ v.T`` (or ``v @ vc.T``) onto the banded pattern.

    ``out[i, k] = sum_t vc[i, t] * v[2i+k, t]``; this is the gradient of
    ``<vc, W v>`` with respect to the band entries of a restriction ``W``,
    and equally of ``<v, W.T vc>`` for a prolongation stored column-wise.
    """
    nc = vc.shape[0]
    parts = (v[0:2 * nc:2], v[1:2 * nc + 1:2], v[2:2 * nc + 2:2])
    if vc.ndim == 1:
        return np.stack([vc * p for p in parts], axis=1)
    return np.stack([np.einsum("it,it->i", vc, p) for p in parts], axis=1)


def _band_array(values, n: int) -> np.ndarray:
    nc = _coarse_size(n)
    a = np.array(values, dtype=float)
    if a.shape != (nc, 3):
        raise ConfigurationError(f"operator storage must have shape ({nc}, 3) for n={n}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigurationError("operator entries must be finite")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RestrictionOp:
    """``R`` in ``R^{n_c x n}``; ``rows[i]`` are the entries at fine columns ``2i, 2i+1, 2i+2``."""

    n: int
    rows: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "rows", _band_array(self.rows, self.n))

    @property
    def n_c(self) -> int:
        return self.rows.shape[0]

    def to_dense(self) -> np.ndarray:
        M = np.zeros((self.n_c, self.n))
        for k in range(3):
            M[np.arange(self.n_c), 2 * np.arange(self.n_c) + k] = self.rows[:, k]
        return M


@dataclass(frozen=True)
class ProlongationOp:
    """``P`` in ``R^{n x n_c}``; ``cols[j]`` are the entries at fine rows ``2j, 2j+1, 2j+2``."""

    n: int
    cols: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "cols", _band_array(self.cols, self.n))

    @property
    def n_c(self) -> int:
        return self.cols.shape[0]

    def to_dense(self) -> np.ndarray:
        M = np.zeros((self.n, self.n_c))
        for k in range(3):
            M[2 * np.arange(self.n_c) + k, np.arange(self.n_c)] = self.cols[:, k]
        return M


@dataclass(frozen=True)
class TransferPair:
    """The learnable parameters: restriction, prolongation and Jacobi damping factor."""

    R: RestrictionOp
    P: ProlongationOp
    omega: float

    def __post_init__(self):
        if self.R.n != self.P.n:
            raise ConfigurationError(f"R and P act on different fine grids: {self.R.n} vs {self.P.n}")
        if not np.isfinite(self.omega):
            raise ConfigurationError(f"damping factor must be finite, got {self.omega}")
        object.__setattr__(self, "omega", float(self.omega))

    @classmethod
    def from_arrays(cls, rows, cols, omega) -> "TransferPair":
        rows = np.asarray(rows, dtype=float)
        n = 2 * rows.shape[0] + 1
        return cls(RestrictionOp(n, rows), ProlongationOp(n, cols), omega)

    @property
    def n(self) -> int:
        return self.R.n

    @property
    def n_c(self) -> int:
        return self.R.n_c

    @property
    def size(self) -> int:
        """Number of free parameters, ``6 n_c + 1``."""
        return 6 * self.n_c + 1

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.R.rows.ravel(), self.P.cols.ravel(), [self.omega]])

    @classmethod
    def unflatten(cls, theta, n: int) -> "TransferPair":
        nc = _coarse_size(n)
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (6 * nc + 1,):
            raise ConfigurationError(f"parameter vector must have length {6 * nc + 1}, got {theta.shape}")
        return cls(
            RestrictionOp(n, theta[:3 * nc].reshape(nc, 3)),
            ProlongationOp(n, theta[3 * nc:6 * nc].reshape(nc, 3)),
            theta[-1],
        )


def linear_baseline(n: int, omega: float = 2.0 / 3.0) -> TransferPair:
    """Full-weighting restriction, linear interpolation, ``omega = 2/3``."""
    nc = _coarse_size(n)
    rows = np.tile([0.25, 0.5, 0.25], (nc, 1))
    cols = np.tile([0.5, 1.0, 0.5], (nc, 1))
    return TransferPair(RestrictionOp(n, rows), ProlongationOp(n, cols), omega)


def restrict(R: RestrictionOp, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[0] != R.n:
        raise ValueError(f"fine vector length {v.shape[0]} does not match R ({R.n_c}x{R.n})")
    return restrict_band(R.rows, v)


def prolong(P: ProlongationOp, vc) -> np.ndarray:
    vc = np.asarray(vc, dtype=float)
    if vc.shape[0] != P.n_c:
        raise ValueError(f"coarse vector length {vc.shape[0]} does not match P ({P.n}x{P.n_c})")
    return prolong_band(P.cols, vc)


def galerkin_project(R: RestrictionOp, A: TridiagonalMatrix, P: ProlongationOp) -> np.ndarray:
    """Dense coarse matrix ``R A P`` of shape ``(n_c, n_c)``."""
    if not (R.n == A.n == P.n and R.n_c == P.n_c):
        raise ValueError(f"incompatible shapes: R {R.n_c}x{R.n}, A {A.n}x{A.n}, P {P.n}x{P.n_c}")
    AP = A.matvec(P.to_dense())
    return restrict_band(R.rows, AP)


# CSV layout: comment header "# n=..., n_c=..., omega=..." then one row per
# coarse index with r0,r1,r2,p0,p1,p2. Values use repr() so they round-trip.

def operators_to_csv(params: TransferPair, header: str = "") -> str:
    buf = io.StringIO()
    for line in header.splitlines():
        buf.write(f"# {line}\n")
    buf.write(f"# n={params.n}, n_c={params.n_c}, omega={params.omega!r}\n")
    buf.write("index,r0,r1,r2,p0,p1,p2\n")
    for i in range(params.n_c):
        vals = list(params.R.rows[i]) + list(params.P.cols[i])
        buf.write(",".join([str(i)] + [repr(float(x)) for x in vals]) + "\n")
    return buf.getvalue()


def write_operators_csv(path, params: TransferPair, header: str = "") -> None:
    with open(path, "w", newline="") as fh:
        fh.write(operators_to_csv(params, header))


def read_operators_csv(path) -> TransferPair:
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("n="):
                    for item in body.split(","):
                        key, _, val = item.strip().partition("=")
                        meta[key] = val
                continue
            if line.startswith("index"):
                continue
            rows.append([float(x) for x in line.split(",")[1:]])
    if not {"n", "n_c", "omega"} <= meta.keys():
        raise ConfigurationError(f"{path}: missing 'n=..., n_c=..., omega=...' header line")
    n, nc = int(meta["n"]), int(meta["n_c"])
    data = np.array(rows, dtype=float).reshape(-1, 6)
    if data.shape[0] != nc or nc != (n - 1) // 2:
        raise ConfigurationError(f"{path}: expected {(n - 1) // 2} operator rows, found {data.shape[0]}")
    return TransferPair(RestrictionOp(n, data[:, :3]), ProlongationOp(n, data[:, 3:]), float(meta["omega"]))
