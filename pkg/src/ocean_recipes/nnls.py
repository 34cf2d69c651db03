"""Non-negative least squares by the Lawson-Hanson active-set method.

Solves ``min ||A w - b||_2  subject to  w >= 0`` for small dense problems (a
few base spectra sampled on a few hundred wavelengths). Each passive-set
subproblem is solved through a QR factorization of the selected columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConvergenceError, RankError

DEFAULT_TOL = 1e-10
SUBPROBLEM_COND_LIMIT = 1e12


@dataclass(frozen=True)
class NnlsSolution:
    weights: np.ndarray
    residual_norm: float
    iterations: int
    kkt_violation: float
    condition: float = 1.0


def gradient(A, b, w) -> np.ndarray:
    """Gradient ``A^T (A w - b)`` of half the squared residual."""
    A = np.asarray(A, dtype=float)
    return A.T @ (A @ np.asarray(w, dtype=float) - np.asarray(b, dtype=float))


def kkt_violation(A, b, w) -> float:
    """Largest KKT violation relative to ``||A^T b||_inf``.

    Positive weights must have zero gradient; zero weights need a
    non-negative gradient.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    w = np.asarray(w, dtype=float)
    g = gradient(A, b, w)
    scale = float(np.max(np.abs(A.T @ b), initial=0.0))
    if scale == 0.0:
        scale = 1.0
    per_column = np.where(w > 0, np.abs(g), np.maximum(0.0, -g))
    return float(np.max(per_column, initial=0.0) / scale)


def _solve_passive(A: np.ndarray, b: np.ndarray, passive: np.ndarray) -> tuple[np.ndarray, float]:
    z = np.zeros(A.shape[1])
    cols = A[:, passive]
    q, r = np.linalg.qr(cols)
    cond = float(np.linalg.cond(r))
    if not np.isfinite(cond) or cond > SUBPROBLEM_COND_LIMIT:
        raise RankError(
            f"passive-set subproblem on columns {np.flatnonzero(passive).tolist()} "
            f"is singular (condition {cond:.3g})"
        )
    z[passive] = solve_triangular(r, q.T @ b)
    return z, cond


def nnls(
    A,
    b,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    normalize_columns: bool = False,
) -> NnlsSolution:
    """Lawson-Hanson NNLS.

    Parameters
    ----------
    A : array_like, shape (m, n)
    b : array_like, shape (m,)
    tol : float
        Relative KKT tolerance; a column enters the passive set only if its
        negative gradient exceeds ``tol * ||A^T b||_inf``.
    max_iter : int, optional
        Outer iterations (columns entering the passive set). Defaults to ``3 * n``.
    normalize_columns : bool
        Solve internally with unit-norm columns. Weights are always returned in
        the units of the original columns.

    Raises
    ------
    ConvergenceError
        If the KKT conditions still fail after ``max_iter`` outer iterations.
    RankError
        If a passive-set subproblem is numerically singular.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"A must be 2-D, got shape {A.shape}")
    m, n = A.shape
    if b.shape != (m,):
        raise ValueError(f"b has shape {b.shape}, expected ({m},)")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("A and b must be finite")
    if max_iter is None:
        max_iter = 3 * n

    if normalize_columns:
        col_scale = np.linalg.norm(A, axis=0)
        col_scale[col_scale == 0] = 1.0
    else:
        col_scale = np.ones(n)
    Aw = A / col_scale

    x = np.zeros(n)
    scale = float(np.max(np.abs(Aw.T @ b), initial=0.0))
    if scale == 0.0:
        return NnlsSolution(np.zeros(n), float(np.linalg.norm(b)), 0, 0.0)
    threshold = tol * scale

    passive = np.zeros(n, dtype=bool)
    # columns whose entry produced a non-positive weight at the current x (anti-cycling)
    rejected = np.zeros(n, dtype=bool)
    iterations = 0
    cond = 1.0

    while True:
        dual = Aw.T @ (b - Aw @ x)
        candidates = ~passive & ~rejected & (dual > threshold)
        if not np.any(candidates):
            break
        if iterations >= max_iter:
            raise ConvergenceError(f"NNLS did not converge in {max_iter} outer iterations")
        iterations += 1
        j = int(np.argmax(np.where(candidates, dual, -np.inf)))
        passive[j] = True

        z, cond = _solve_passive(Aw, b, passive)
        if z[j] <= 0:
            # rounding made the entering column useless; try the next best one
            passive[j] = False
            rejected[j] = True
            continue

        for _ in range(n + 1):
            bad = passive & (z <= 0)
            if not np.any(bad):
                break
            ratios = np.full(n, np.inf)
            ratios[bad] = x[bad] / (x[bad] - z[bad])
            k = int(np.argmin(ratios))
            alpha = ratios[k]
            x = x + alpha * (z - x)
            x[k] = 0.0
            leaving = passive & (x <= 0)
            leaving[k] = True
            x[leaving] = 0.0
            passive &= ~leaving
            z, cond = _solve_passive(Aw, b, passive) if np.any(passive) else (np.zeros(n), 1.0)
        else:
            raise ConvergenceError("NNLS inner loop failed to restore feasibility")
        x = z
        rejected[:] = False

    w = x / col_scale
    w[w < 0] = 0.0
    residual = float(np.linalg.norm(A @ w - b))
    return NnlsSolution(
        weights=w,
        residual_norm=residual,
        iterations=iterations,
        kkt_violation=kkt_violation(A, b, w),
        condition=cond,
    )


def nnls_enumerate(A, b) -> tuple[np.ndarray, float]:
    """Exhaustive reference solver: try every support set, keep the best feasible one.

    Exponential in ``n``; intended as an independent check for small problems.
    Returns the weights and the squared residual.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    best_w = np.zeros(n)
    best_obj = float(b @ b)
    for mask in range(1, 2**n):
        support = [i for i in range(n) if mask >> i & 1]
        coef, *_ = np.linalg.lstsq(A[:, support], b, rcond=None)
        if np.any(coef < 0):
            continue
        w = np.zeros(n)
        w[support] = coef
        r = A @ w - b
        obj = float(r @ r)
        if obj < best_obj:
            best_obj, best_w = obj, w
    return best_w, best_obj
