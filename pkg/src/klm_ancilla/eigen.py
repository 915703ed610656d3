"""Tridiagonal matrices behind the optimal ancilla and their top eigenpairs.

The success probability for the |+> input is a quadratic form ``f^T A f`` in
the ancilla coefficients, with ``A`` symmetric tridiagonal. Its maximum over
normalized ``f`` is the largest eigenvalue ``lambda_n``; the maximizer is the
Perron eigenvector. ``B`` is the path-graph adjacency matrix, whose top
eigenvalue ``mu_n`` satisfies ``lambda_n = 1/2 + mu_n / 4``.

Eigenvalues come from Sturm-sequence bisection, eigenvectors from inverse
iteration on the shifted tridiagonal system. Nothing here is randomized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-12
MAX_N = 10_000
NORM_TOL = 1e-12
RESIDUAL_TOL = 1e-10
INVERSE_ITERATION_STEPS = 50
MIN_BISECTION_STEPS = 200


class EigenConvergenceError(RuntimeError):
    """The eigensolver hit its iteration cap. This indicates a bug, not bad input."""


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SymTridiagonal:
    """Real symmetric tridiagonal matrix stored as diagonal + off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        diag = _readonly(self.diag).reshape(-1)
        offdiag = _readonly(self.offdiag).reshape(-1)
        if diag.size == 0:
            raise ValueError("empty matrix")
        if offdiag.size != diag.size - 1:
            raise ValueError(
                f"offdiag length {offdiag.size} != diag length {diag.size} - 1"
            )
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(offdiag))):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", offdiag)

    @property
    def size(self) -> int:
        return int(self.diag.size)

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.diag)
            + np.diag(self.offdiag, 1)
            + np.diag(self.offdiag, -1)
        )

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.diag * x
        y[:-1] += self.offdiag * x[1:]
        y[1:] += self.offdiag * x[:-1]
        return y

    def norm_inf(self) -> float:
        row = np.abs(self.diag).copy()
        row[:-1] += np.abs(self.offdiag)
        row[1:] += np.abs(self.offdiag)
        return float(row.max())

    def gershgorin_bounds(self) -> tuple[float, float]:
        radius = np.zeros(self.size)
        radius[:-1] += np.abs(self.offdiag)
        radius[1:] += np.abs(self.offdiag)
        return float(np.min(self.diag - radius)), float(np.max(self.diag + radius))

    def sturm_count(self, x: float) -> int:
        """Number of eigenvalues strictly less than ``x``.

        Counts negative pivots of the LDL^T factorization of ``T - x I``.
        A zero pivot is replaced by ``-pivmin``, which is the usual LAPACK
        treatment and keeps the count monotone in ``x``.
        """
        d = self.diag.tolist()
        e2 = (self.offdiag**2).tolist()
        pivmin = np.finfo(float).tiny * max(1.0, max(e2, default=1.0))
        count = 0
        q = d[0] - x
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
        for i in range(1, len(d)):
            q = d[i] - x - e2[i - 1] / q
            if abs(q) < pivmin:
                q = -pivmin
            if q < 0:
                count += 1
        return count


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: float
    vector: np.ndarray

    def __post_init__(self):
        vector = _readonly(self.vector).reshape(-1)
        if abs(np.linalg.norm(vector) - 1.0) > NORM_TOL:
            raise ValueError("eigenvector must have unit norm")
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "vector", vector)

    def residual(self, matrix: SymTridiagonal) -> float:
        """Infinity norm of ``M v - value v``."""
        r = matrix.matvec(self.vector) - self.value * self.vector
        return float(np.max(np.abs(r)))


@dataclass(frozen=True, eq=False)
class CoefficientProfile:
    """Real ancilla coefficients ``f(0), ..., f(n)``, normalized to unit length.

    Use :meth:`from_values` to normalize arbitrary input. The constructor
    only accepts an already-normalized vector.
    """

    n: int
    f: np.ndarray

    def __post_init__(self):
        f = _readonly(self.f).reshape(-1)
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if f.size != self.n + 1:
            raise ValueError(f"expected {self.n + 1} coefficients, got {f.size}")
        if not np.all(np.isfinite(f)):
            raise ValueError("coefficients must be finite")
        if abs(math.fsum(f**2) - 1.0) > NORM_TOL:
            raise ValueError("coefficients must satisfy sum f(i)^2 = 1")
        object.__setattr__(self, "f", f)

    @classmethod
    def from_values(cls, values) -> CoefficientProfile:
        f = np.asarray(values, dtype=float).reshape(-1)
        norm = math.sqrt(math.fsum(f**2))
        if norm == 0.0:
            raise ValueError("cannot normalize an all-zero profile")
        return cls(n=f.size - 1, f=f / norm)

    def coefficient(self, i: int) -> float:
        """``f(i)`` with the boundary convention ``f(-1) = f(n+1) = 0``."""
        if i < 0 or i > self.n:
            return 0.0
        return float(self.f[i])

    def is_palindromic(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.f - self.f[::-1])) <= tol)


def _check_n(n: int) -> None:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise TypeError(f"n must be an integer, got {type(n).__name__}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > MAX_N:
        raise ValueError(f"n must be <= {MAX_N}, got {n}")


def build_matrix_A(n: int) -> SymTridiagonal:
    """(n+1)x(n+1) matrix with diagonal (1, 2, ..., 2, 1)/4 and off-diagonal 1/4."""
    _check_n(n)
    diag = np.full(n + 1, 0.5)
    diag[0] = diag[-1] = 0.25
    return SymTridiagonal(diag, np.full(n, 0.25))


def build_matrix_B(n: int) -> SymTridiagonal:
    """n x n adjacency matrix of the path graph."""
    _check_n(n)
    return SymTridiagonal(np.zeros(n), np.ones(n - 1))


def _largest_eigenvalue_bracket(matrix: SymTridiagonal, tol: float) -> tuple[float, float]:
    m = matrix.size
    lo, hi = matrix.gershgorin_bounds()
    pad = 4 * np.finfo(float).eps * max(1.0, abs(lo), abs(hi))
    lo -= pad
    hi += pad
    # invariant: count(lo) < m, count(hi) == m
    cap = max(10 * m, MIN_BISECTION_STEPS)
    for _ in range(cap):
        if hi - lo <= tol:
            return lo, hi
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return lo, hi
        if matrix.sturm_count(mid) == m:
            hi = mid
        else:
            lo = mid
    raise EigenConvergenceError(
        f"bisection did not reach width {tol:g} within {cap} steps"
    )


def _solve_shifted(matrix: SymTridiagonal, shift: float, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(T - shift I) x = rhs`` by tridiagonal LU with partial pivoting.

    Zero pivots are replaced by a tiny multiple of the matrix norm. This
    is intentional: inverse iteration solves an almost-singular system.
    """
    m = matrix.size
    d = (matrix.diag - shift).tolist()
    dl = matrix.offdiag.tolist()
    du = matrix.offdiag.tolist()
    du2 = [0.0] * max(m - 2, 0)
    b = np.array(rhs, dtype=float).tolist()
    scale = max(matrix.norm_inf(), abs(shift))
    tiny = np.finfo(float).eps * scale if scale > 0 else 1.0

    for i in range(m - 1):
        if abs(d[i]) >= abs(dl[i]):
            piv = d[i] if d[i] != 0.0 else tiny
            d[i] = piv
            l = dl[i] / piv
            d[i + 1] -= l * du[i]
            b[i + 1] -= l * b[i]
        else:
            l = d[i] / dl[i]
            d[i] = dl[i]
            tmp = d[i + 1]
            d[i + 1] = du[i] - l * tmp
            du[i] = tmp
            if i < m - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -l * du2[i]
            b[i], b[i + 1] = b[i + 1], b[i] - l * b[i + 1]
    if d[m - 1] == 0.0:
        d[m - 1] = tiny

    x = [0.0] * m
    x[m - 1] = b[m - 1] / d[m - 1]
    if m > 1:
        x[m - 2] = (b[m - 2] - du[m - 2] * x[m - 1]) / d[m - 2]
    for i in range(m - 3, -1, -1):
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
    return np.array(x)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    # ties resolve to the first index of maximal magnitude
    idx = int(np.argmax(np.abs(v)))
    return -v if v[idx] < 0 else v


def largest_eigenpair(matrix: SymTridiagonal, tol: float = DEFAULT_TOL) -> EigenPair:
    """Algebraically largest eigenvalue and its unit eigenvector.

    Bisection brackets the eigenvalue to width ``tol``. Inverse iteration
    at the bracket midpoint then gives the vector, and the returned value
    is the Rayleigh quotient of that vector. The sign is chosen so the
    largest-magnitude entry is positive.

    Raises:
        ValueError: if ``tol`` is not positive.
        EigenConvergenceError: if either stage exceeds its iteration cap or
            the final residual exceeds ``RESIDUAL_TOL``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    m = matrix.size
    if m == 1:
        return EigenPair(float(matrix.diag[0]), np.ones(1))

    lo, hi = _largest_eigenvalue_bracket(matrix, tol)
    shift = 0.5 * (lo + hi)
    scale = max(matrix.norm_inf(), 1.0)

    # skewed start so no symmetric or antisymmetric eigenvector is missed
    v = 1.0 + np.arange(m) / m
    v /= np.linalg.norm(v)
    best = None
    for _ in range(INVERSE_ITERATION_STEPS):
        w = _solve_shifted(matrix, shift, v)
        nrm = np.linalg.norm(w)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise EigenConvergenceError("inverse iteration produced a degenerate vector")
        v = w / nrm
        value = float(v @ matrix.matvec(v))
        res = float(np.max(np.abs(matrix.matvec(v) - value * v)))
        if best is None or res < best[0]:
            best = (res, value, v)
        if res <= 8 * np.finfo(float).eps * scale * math.sqrt(m):
            break

    res, value, v = best
    if res > RESIDUAL_TOL:
        raise EigenConvergenceError(
            f"inverse iteration residual {res:.3e} exceeds {RESIDUAL_TOL:g}"
        )
    return EigenPair(value, _fix_sign(v))


def closed_form_lambda(n: int) -> float:
    """Exact top eigenvalue of A: ``1/2 + cos(pi/(n+1))/2``."""
    _check_n(n)
    return 0.5 + 0.5 * math.cos(math.pi / (n + 1))


def closed_form_mu(n: int) -> float:
    """Exact top eigenvalue of B: ``2 cos(pi/(n+1))``."""
    _check_n(n)
    return 2.0 * math.cos(math.pi / (n + 1))


def optimal_profile(n: int, tol: float = DEFAULT_TOL) -> CoefficientProfile:
    """Ancilla coefficients maximizing the |+> success probability."""
    pair = largest_eigenpair(build_matrix_A(n), tol)
    profile = CoefficientProfile(n=n, f=pair.vector)
    if np.any(profile.f <= 0):
        raise EigenConvergenceError("Perron vector of A is not strictly positive")
    return profile


def uniform_profile(n: int) -> CoefficientProfile:
    """Equal-weight coefficients ``1/sqrt(n+1)``: the original KLM ancilla."""
    _check_n(n)
    return CoefficientProfile(n=n, f=np.full(n + 1, 1.0 / math.sqrt(n + 1)))
