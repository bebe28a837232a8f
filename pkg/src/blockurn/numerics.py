"""Small dense linear algebra for nonnegative matrices.

Matrices are plain 2-D float ``numpy`` arrays. Everything here is a pure
function of its inputs; nothing caches or mutates arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PIVOT_FLOOR = 1e-12


class ConvergenceError(RuntimeError):
    """Power iteration hit its iteration cap."""


class SingularMatrixError(ArithmeticError):
    """A pivot fell below ``PIVOT_FLOOR`` during elimination."""


@dataclass(frozen=True)
class PFEigenpair:
    """Perron-Frobenius eigenvalue with left/right eigenvectors.

    ``left`` sums to one and ``left @ right == 1``.
    """

    value: float
    left: np.ndarray
    right: np.ndarray

    def residuals(self, Q: np.ndarray) -> tuple[float, float]:
        Q = np.asarray(Q, dtype=float)
        r_left = np.max(np.abs(self.left @ Q - self.value * self.left))
        r_right = np.max(np.abs(Q @ self.right - self.value * self.right))
        return float(r_left), float(r_right)


def as_matrix(Q, square: bool = True) -> np.ndarray:
    """Coerce to a finite 2-D float array, optionally requiring squareness."""
    A = np.array(Q, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def _dominant_vector(A: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray]:
    # A = Q + I, so the PF eigenvalue of Q is strictly dominant even for periodic Q.
    n = A.shape[0]
    v = np.full(n, 1.0 / n)
    rq_prev = math.inf
    for _ in range(max_iter):
        w = A @ v
        s = w.sum()
        if s <= 0.0:
            raise ConvergenceError("iterate collapsed to zero; matrix is not irreducible")
        w /= s
        Aw = A @ w
        rq = float(w @ Aw) / float(w @ w)
        resid = np.max(np.abs(Aw - rq * w)) / np.max(np.abs(w))
        if abs(rq - rq_prev) <= tol * (1.0 + abs(rq)) and resid <= tol * (1.0 + abs(rq)):
            return rq, w
        rq_prev = rq
        v = w
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


def pf_eigenpair(Q, tol: float = 1e-12, max_iter: int = 100_000) -> PFEigenpair:
    """PF eigenpair of an irreducible nonnegative matrix by shifted power iteration.

    Iterates on ``Q + I`` to remove periodicity. Raises ``ConvergenceError`` if
    the cap is reached or the limit vectors are not strictly positive (which
    indicates a reducible or nearly reducible block).
    """
    Q = as_matrix(Q)
    if np.any(Q < 0):
        raise ValueError("pf_eigenpair requires nonnegative entries")
    n = Q.shape[0]
    A = Q + np.eye(n)
    mu_r, right = _dominant_vector(A, tol, max_iter)
    mu_l, left = _dominant_vector(A.T.copy(), tol, max_iter)
    value = 0.5 * (mu_r + mu_l) - 1.0
    if value <= 0.0:
        raise ValueError("PF eigenvalue is not positive; block is the zero matrix")
    if np.any(left <= 0.0) or np.any(right <= 0.0):
        raise ConvergenceError("PF eigenvectors are not strictly positive; block looks reducible")
    left = left / left.sum()
    right = right / float(left @ right)
    return PFEigenpair(value=float(value), left=left, right=right)


def _eliminate(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Gauss-Jordan with partial pivoting, solving ``A X = B`` in place copies."""
    A = A.copy()
    X = B.copy()
    n = A.shape[0]
    for col in range(n):
        p = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[p, col]) < PIVOT_FLOOR:
            raise SingularMatrixError(f"pivot {A[p, col]:.3e} in column {col}")
        if p != col:
            A[[col, p]] = A[[p, col]]
            X[[col, p]] = X[[p, col]]
        piv = A[col, col]
        A[col] /= piv
        X[col] /= piv
        for r in range(n):
            if r != col and A[r, col] != 0.0:
                f = A[r, col]
                A[r] -= f * A[col]
                X[r] -= f * X[col]
    return X


def solve(A, b) -> np.ndarray:
    A = as_matrix(A)
    b = np.asarray(b, dtype=float)
    vec = b.ndim == 1
    X = _eliminate(A, b.reshape(A.shape[0], -1))
    return X.ravel() if vec else X


def inverse(A) -> np.ndarray:
    A = as_matrix(A)
    return _eliminate(A, np.eye(A.shape[0]))


def resolvent(lam: float, Q) -> np.ndarray:
    """``(lam I - Q)^{-1}`` for ``lam`` above the spectral radius of ``Q``."""
    Q = as_matrix(Q)
    R = inverse(lam * np.eye(Q.shape[0]) - Q)
    # Neumann series is entrywise nonnegative; negative entries mean lam was too small.
    if np.any(R < -1e-12 * np.max(np.abs(R))):
        raise SingularMatrixError(f"lambda={lam} does not dominate the spectrum")
    return np.clip(R, 0.0, None)


def rising_product(z: float, N: int) -> float:
    """prod_{n=0}^{N-1} (1 + z/(n+1)), accumulated in log space."""
    if z <= -1.0:
        raise ValueError("rising_product requires z > -1")
    if N < 0:
        raise ValueError("N must be nonnegative")
    if N == 0 or z == 0.0:
        return 1.0
    terms = np.log1p(z / np.arange(1, N + 1, dtype=float))
    return math.exp(math.fsum(terms))


_LANCZOS_G = 7
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _gamma(x: float) -> float:
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * _gamma(1.0 - x))
    x -= 1.0
    a = _LANCZOS_COEF[0]
    t = x + _LANCZOS_G + 0.5
    for i in range(1, len(_LANCZOS_COEF)):
        a += _LANCZOS_COEF[i] / (x + i)
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * a


def gamma_plus_one(z: float) -> float:
    """Gamma(z + 1) via the Lanczos approximation (g=7, 9 terms)."""
    if z <= -1.0:
        raise ValueError("gamma_plus_one requires z > -1")
    return _gamma(z + 1.0)
