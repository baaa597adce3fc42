"""Small dense-matrix numerics.

Everything here works on plain ``numpy`` arrays. The scaled Lyapunov solver
is the workhorse behind every closed-form expected covariance in the
package: it solves ``S = (1 - beta) A S A^T + Q`` for the stabilizing ``S``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, NumericError

STABILITY_MARGIN = 1e-9
KRONECKER_MAX_DIM = 8
EIG_MAX_DIM = 16


def as_square(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a finite 2-D float array, checking it is square."""
    arr = np.atleast_2d(np.asarray(m, dtype=float))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} has non-finite entries")
    return arr


def _power_iteration(m: np.ndarray, squarings: int = 60) -> float:
    # Gelfand's formula ||M^(2^j)||^(1/2^j) via normalized repeated squaring;
    # handles complex dominant pairs, unlike vector power iteration.
    scale = np.linalg.norm(m, 2)
    if scale == 0.0:
        return 0.0
    p = m / scale
    log_norm = np.log(scale)
    for _ in range(squarings):
        p = p @ p
        nrm = np.linalg.norm(p, 2)
        if nrm == 0.0:
            return 0.0
        p = p / nrm
        log_norm = 2.0 * log_norm + np.log(nrm)
    return float(np.exp(log_norm / 2.0**squarings))


def spectral_radius(m) -> float:
    """Largest absolute eigenvalue of a square matrix.

    Uses a dense eigensolve up to 16x16 and a normalized power iteration
    above that.
    """
    arr = as_square(m)
    if arr.shape[0] <= EIG_MAX_DIM:
        return float(np.max(np.abs(np.linalg.eigvals(arr))))
    return _power_iteration(arr)


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def cholesky_psd(m, tol: float = 1e-9) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == m`` for symmetric PSD ``m``.

    Singular and numerically rank-deficient inputs are accepted: eigenvalues
    down to ``-tol * max(1, lambda_max)`` are clipped to zero.
    """
    arr = as_square(m)
    scale = max(1.0, float(np.max(np.abs(arr))))
    if np.max(np.abs(arr - arr.T)) > tol * scale:
        raise NumericError("matrix is not symmetric")
    arr = symmetrize(arr)
    try:
        return np.linalg.cholesky(arr)
    except np.linalg.LinAlgError:
        pass
    lam, vec = np.linalg.eigh(arr)
    lam_max = max(1.0, float(lam[-1]))
    if lam[0] < -tol * lam_max:
        raise NumericError(f"matrix is indefinite (min eigenvalue {lam[0]:.3e})")
    root = vec * np.sqrt(np.clip(lam, 0.0, None))
    # root @ root.T == arr; QR of root.T turns it into a triangular factor.
    _, r = np.linalg.qr(root.T)
    low = r.T
    signs = np.where(np.diag(low) < 0, -1.0, 1.0)
    return low * signs


def psd_sqrt(m) -> np.ndarray:
    """Principal (symmetric) square root of a PSD matrix."""
    arr = symmetrize(as_square(m))
    lam, vec = np.linalg.eigh(arr)
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.T


@dataclass(frozen=True)
class LyapunovSolution:
    """Stabilizing solution of ``S = (1 - beta) A S A^T + Q``, or unbounded.

    ``matrix`` is ``None`` exactly when the scaled dynamics are not strictly
    stable; no infinities are ever stored.
    """

    matrix: Optional[np.ndarray]
    residual: Optional[float] = None

    @property
    def bounded(self) -> bool:
        return self.matrix is not None

    def trace(self) -> float:
        if self.matrix is None:
            raise NumericError("unbounded Lyapunov solution has no trace")
        return float(np.trace(self.matrix))


UNBOUNDED = LyapunovSolution(None)


def lyapunov_residual(s: np.ndarray, a: np.ndarray, q: np.ndarray, beta: float) -> float:
    """Relative Frobenius residual of the scaled Lyapunov equation."""
    r = s - (1.0 - beta) * a @ s @ a.T - q
    return float(np.linalg.norm(r) / max(np.linalg.norm(s), 1e-300))


def lyapunov_fixed_point(
    a: np.ndarray,
    q: np.ndarray,
    beta: float,
    rtol: float = 1e-12,
    max_iter: int = 100_000,
) -> np.ndarray:
    """Iterate ``S <- (1 - beta) A S A^T + Q`` from ``S = Q`` to convergence."""
    scaled = np.sqrt(1.0 - beta) * a
    s = q.copy()
    for _ in range(max_iter):
        nxt = scaled @ s @ scaled.T + q
        if np.linalg.norm(nxt - s) <= rtol * np.linalg.norm(nxt):
            return symmetrize(nxt)
        s = nxt
    raise NumericError(f"fixed-point Lyapunov iteration did not converge in {max_iter} steps")


def _lyapunov_kronecker(a: np.ndarray, q: np.ndarray, beta: float) -> np.ndarray:
    n = a.shape[0]
    lhs = np.eye(n * n) - (1.0 - beta) * np.kron(a, a)
    vec = np.linalg.solve(lhs, q.reshape(-1))
    return symmetrize(vec.reshape(n, n))


def solve_scaled_lyapunov(a, q, beta: float, method: str = "auto") -> LyapunovSolution:
    """Solve ``S = (1 - beta) A S A^T + Q``.

    Parameters
    ----------
    a, q : array_like
        Square matrices of equal size; ``q`` symmetric positive definite.
    beta : float
        Reception-like probability in ``[0, 1]``.
    method : {"auto", "kronecker", "fixed_point"}
        ``auto`` uses the vectorized linear solve for ``n <= 8`` and the
        fixed-point iteration otherwise.

    Returns
    -------
    LyapunovSolution
        ``UNBOUNDED`` when ``rho(sqrt(1 - beta) A) >= 1 - 1e-9``.
    """
    a = as_square(a, "a")
    q = as_square(q, "q")
    if a.shape != q.shape:
        raise DimensionError(f"a {a.shape} and q {q.shape} differ in size")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if np.sqrt(1.0 - beta) * spectral_radius(a) >= 1.0 - STABILITY_MARGIN:
        return UNBOUNDED
    if method == "auto":
        method = "kronecker" if a.shape[0] <= KRONECKER_MAX_DIM else "fixed_point"
    if method == "kronecker":
        s = _lyapunov_kronecker(a, q, beta)
    elif method == "fixed_point":
        s = lyapunov_fixed_point(a, q, beta)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = lyapunov_residual(s, a, q, beta)
    if res > 1e-10:
        # one refinement sweep usually recovers the last digits
        s = symmetrize((1.0 - beta) * a @ s @ a.T + q)
        res = lyapunov_residual(s, a, q, beta)
    return LyapunovSolution(s, res)
