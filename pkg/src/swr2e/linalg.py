"""Shared numerical kernels.

Thin, checked wrappers around LAPACK-backed routines plus the deterministic
reductions the parallel driver relies on.  Every solver validates its own
result so a silent breakdown upstream turns into a loud error here.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, eigh_tridiagonal, lu_factor, lu_solve, solve
from scipy.sparse.linalg import LinearOperator, gmres as _gmres

DEFAULT_TOL = 1e-12


class SolveError(RuntimeError):
    """A linear or eigenvalue solve failed its accuracy contract."""


def tridiag_eigs(diag: np.ndarray, offdiag: np.ndarray, m: int):
    """Lowest m eigenpairs of the symmetric tridiagonal (diag, offdiag).

    Eigenvalues ascend; eigenvectors have unit Euclidean norm and the first
    entry larger than 1e-8 of the peak made positive, so signs are
    reproducible across LAPACK builds.  The residual of every returned pair
    is checked against 1e-10 ||T||.
    """
    diag = np.asarray(diag, dtype=float)
    offdiag = np.asarray(offdiag, dtype=float)
    n = diag.size
    if not (1 <= m <= n):
        raise ValueError("requested mode count out of range")
    w, v = eigh_tridiagonal(diag, offdiag, select="i", select_range=(0, m - 1))

    for k in range(m):
        col = v[:, k]
        peak = np.abs(col).max()
        lead = col[np.abs(col) > 1e-8 * peak][0]
        if lead < 0:
            v[:, k] = -col

    scale = np.abs(diag).max() + 2 * (np.abs(offdiag).max() if n > 1 else 0.0)
    for k in range(m):
        col = v[:, k]
        tv = diag * col
        tv[:-1] += offdiag * col[1:]
        tv[1:] += offdiag * col[:-1]
        res = np.linalg.norm(tv - w[k] * col)
        if res > 1e-10 * max(scale, 1.0):
            raise SolveError(f"eigenpair {k} residual {res:.2e} too large")
    return w, v


class Prefactored:
    """LU factorization reused across many right-hand sides."""

    def __init__(self, M: np.ndarray):
        M = np.asarray(M)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("matrix must be square")
        if not np.all(np.isfinite(M)):
            raise SolveError("matrix has non-finite entries")
        self.shape = M.shape
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", LinAlgWarning)
                self._lu = lu_factor(M)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise SolveError(f"factorization failed: {exc}") from exc
        if np.any(np.abs(np.diag(self._lu[0])) < 1e-300):
            raise SolveError("matrix is numerically singular")

    def solve(self, b: np.ndarray) -> np.ndarray:
        return lu_solve(self._lu, b)


def solve_direct(M: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense direct solve with a residual check at DEFAULT_TOL."""
    M = np.asarray(M)
    b = np.asarray(b)
    x = solve(M, b)
    nb = np.linalg.norm(b)
    res = np.linalg.norm(M @ x - b)
    if res > DEFAULT_TOL * max(nb, 1.0) * 100:
        raise SolveError(f"direct solve residual {res:.2e} vs rhs norm {nb:.2e}")
    return x


def gmres_solve(M, b: np.ndarray, tol: float = DEFAULT_TOL, restart: int = 30,
                maxiter: int = 500) -> np.ndarray:
    """GMRES with a verified relative residual.

    M may be a dense array or a LinearOperator.  Raises SolveError when the
    iteration cap is hit or the final residual misses tol.
    """
    b = np.asarray(b)
    if not isinstance(M, LinearOperator):
        M = np.asarray(M)
    x, info = _gmres(M, b, rtol=tol, atol=0.0, restart=restart, maxiter=maxiter)
    if info != 0:
        raise SolveError(f"GMRES did not converge (info={info})")
    res = np.linalg.norm(M @ x - b) if isinstance(M, np.ndarray) \
        else np.linalg.norm(M.matvec(x) - b)
    nb = np.linalg.norm(b)
    if nb > 0 and res / nb > 10 * tol:
        raise SolveError(f"GMRES residual {res / nb:.2e} exceeds {tol:.0e}")
    return x


def deterministic_sum(values) -> float | complex:
    """Sum scalars in the given (fixed) order with plain left-to-right adds."""
    total = 0.0
    for v in values:
        total = total + v
    return total


def deterministic_dot(pieces_a: dict, pieces_b: dict):
    """<a, b> accumulated over pieces in ascending key order.

    Both dicts map a subdomain index to an array; the per-piece reductions
    and the outer accumulation both run in a fixed order, so the result is
    bitwise reproducible no matter how many workers produced the pieces.
    """
    return deterministic_sum(
        np.vdot(pieces_a[k], pieces_b[k]) for k in sorted(pieces_a))


def deterministic_norm(pieces: dict) -> float:
    return float(np.sqrt(np.real(deterministic_dot(pieces, pieces))))
