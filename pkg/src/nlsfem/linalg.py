"""Banded complex matrices and partial-pivoting LU (LAPACK gbtrf/gbtrs)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import SingularMatrix

PIVOT_FLOOR = 1e-300


@dataclass(frozen=True)
class BandedComplexMatrix:
    """Square band matrix in LAPACK layout: ``A[i, j] = data[ku + i - j, j]``."""

    n: int
    kl: int
    ku: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.shape != (self.kl + self.ku + 1, self.n):
            raise ValueError(
                f"band storage must have shape {(self.kl + self.ku + 1, self.n)}, got {data.shape}"
            )
        # zero the unused corners so out-of-band entries stay exactly zero
        for row in range(self.ku):
            data[row, : self.ku - row] = 0.0
        for row in range(self.ku + 1, self.ku + self.kl + 1):
            off = row - self.ku
            data[row, self.n - off:] = 0.0
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, n: int, kl: int, ku: int | None = None):
        ku = kl if ku is None else ku
        return cls(n, kl, ku, np.zeros((kl + ku + 1, n), dtype=complex))

    @classmethod
    def from_dense(cls, dense, kl: int, ku: int | None = None):
        dense = np.asarray(dense, dtype=complex)
        ku = kl if ku is None else ku
        n = dense.shape[0]
        data = np.zeros((kl + ku + 1, n), dtype=complex)
        for d in range(max(-kl, 1 - n), min(ku, n - 1) + 1):
            diag = np.diagonal(dense, offset=d)
            if d >= 0:
                data[ku - d, d:] = diag
            else:
                data[ku - d, : n + d] = diag
        return cls(n, kl, ku, data)

    @classmethod
    def identity(cls, n: int, kl: int = 0, ku: int | None = None):
        ku = kl if ku is None else ku
        data = np.zeros((kl + ku + 1, n), dtype=complex)
        data[ku] = 1.0
        return cls(n, kl, ku, data)

    def diagonal(self, offset: int = 0) -> np.ndarray:
        if offset >= 0:
            return self.data[self.ku - offset, offset:]
        return self.data[self.ku - offset, : self.n + offset]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=complex)
        for d in range(max(-self.kl, 1 - self.n), min(self.ku, self.n - 1) + 1):
            idx = np.arange(max(0, -d), min(self.n, self.n - d))
            out[idx, idx + d] = self.diagonal(d)
        return out

    def _check_compatible(self, other: "BandedComplexMatrix"):
        if (self.n, self.kl, self.ku) != (other.n, other.kl, other.ku):
            raise ValueError("band matrices differ in size or bandwidth")

    def __add__(self, other):
        self._check_compatible(other)
        return BandedComplexMatrix(self.n, self.kl, self.ku, self.data + other.data)

    def __sub__(self, other):
        self._check_compatible(other)
        return BandedComplexMatrix(self.n, self.kl, self.ku, self.data - other.data)

    def __mul__(self, scalar):
        return BandedComplexMatrix(self.n, self.kl, self.ku, self.data * scalar)

    __rmul__ = __mul__

    def __matmul__(self, x):
        return matvec(self, x)


def matvec(A: BandedComplexMatrix, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (A.n,):
        raise ValueError(f"dimension mismatch: matrix n={A.n}, vector shape {x.shape}")
    y = np.zeros(A.n, dtype=complex)
    for d in range(max(-A.kl, 1 - A.n), min(A.ku, A.n - 1) + 1):
        diag = A.diagonal(d)
        if d >= 0:
            y[: A.n - d] += diag * x[d:]
        else:
            y[-d:] += diag * x[: A.n + d]
    return y


@dataclass(frozen=True)
class BandedLU:
    n: int
    kl: int
    ku: int
    factors: np.ndarray  # (2*kl + ku + 1, n) LAPACK gbtrf layout
    pivots: np.ndarray


def band_lu(A: BandedComplexMatrix) -> BandedLU:
    ab = np.zeros((2 * A.kl + A.ku + 1, A.n), dtype=complex, order="F")
    ab[A.kl:, :] = A.data
    lu, piv, info = lapack.zgbtrf(ab, A.kl, A.ku, overwrite_ab=True)
    if info < 0:
        raise ValueError(f"zgbtrf: illegal argument {-info}")
    u_diag = np.abs(lu[A.kl + A.ku, :])
    if info > 0 or np.any(u_diag < PIVOT_FLOOR) or not np.all(np.isfinite(lu)):
        bad = info - 1 if info > 0 else int(np.argmin(u_diag))
        raise SingularMatrix(f"pivot {bad} vanishes (|u_kk| < {PIVOT_FLOOR:g})")
    return BandedLU(A.n, A.kl, A.ku, lu, piv)


def band_solve(lu: BandedLU, b) -> np.ndarray:
    b = np.asarray(b, dtype=complex)
    if b.shape != (lu.n,):
        raise ValueError(f"dimension mismatch: factor n={lu.n}, rhs shape {b.shape}")
    x, info = lapack.zgbtrs(lu.factors, lu.kl, lu.ku, b, lu.pivots)
    if info != 0:
        raise ValueError(f"zgbtrs failed with info={info}")
    return x


def solve(A: BandedComplexMatrix, b) -> np.ndarray:
    return band_solve(band_lu(A), b)
