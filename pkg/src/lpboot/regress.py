"""Least-squares building blocks: lag matrices, OLS, SBIC, VAR and Durbin.

Series are accepted either as 1-D arrays (univariate) or as ``(T, m)``
arrays. Outputs follow the input: univariate inputs give scalar coefficients
per lag or horizon, multivariate inputs give ``(m, m)`` blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSampleError, InvalidInputError, SingularDesignError

RANK_TOL = 1e-10


def as_2d(y) -> tuple[np.ndarray, bool]:
    """Return ``(y as (T, m) float array, was_univariate)``."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 1:
        return arr[:, None], True
    if arr.ndim == 2:
        return arr, False
    raise InvalidInputError(f"series must be 1-D or 2-D, got shape {arr.shape}")


def default_p_max(T: int) -> int:
    """Conventional upper bound floor(12 * (T/100)**0.25) on the lag order."""
    return max(1, int(math.floor(12.0 * (T / 100.0) ** 0.25)))


@dataclass(frozen=True)
class LagMatrix:
    """Aligned regression design for one horizon.

    Row ``i`` pairs the target ``y[start + i + h]`` with the regressors
    ``(y[start + i - 1], ..., y[start + i - p])``, where ``start = p``.
    """

    X: np.ndarray
    targets: np.ndarray
    p: int
    h: int
    intercept: bool
    start: int

    @property
    def rows(self) -> int:
        return self.X.shape[0]


def lag_block(y2: np.ndarray, p: int, start: int, stop: int) -> np.ndarray:
    """Stack ``(y_{t-1}', ..., y_{t-p}')`` for t in ``range(start, stop)``."""
    return np.hstack([y2[start - j : stop - j] for j in range(1, p + 1)])


def build_lag_matrix(y, p: int, h: int = 0, intercept: bool = False) -> LagMatrix:
    """Design matrix regressing y_{t+h} on p lags of y.

    Examples
    --------
    >>> lm = build_lag_matrix([1.0, 2, 3, 4, 5], p=1)
    >>> lm.targets.ravel().tolist(), lm.X.ravel().tolist()
    ([2.0, 3.0, 4.0, 5.0], [1.0, 2.0, 3.0, 4.0])
    """
    y2, _ = as_2d(y)
    T, m = y2.shape
    if p < 1 or h < 0:
        raise InvalidInputError(f"need p >= 1 and h >= 0, got p={p}, h={h}")
    stop = T - h
    if stop - p < 1:
        raise InsufficientSampleError(f"T={T} leaves no rows for p={p}, h={h}")
    X = lag_block(y2, p, p, stop)
    if intercept:
        X = np.hstack([np.ones((X.shape[0], 1)), X])
    return LagMatrix(X, y2[p + h : T], p, h, intercept, p)


def check_sample(T: int, p: int, h: int, m: int = 1, intercept: bool = False) -> None:
    """Raise unless T > p + h + (columns + 2)."""
    cols = p * m + int(intercept)
    if T <= p + h + cols + 2:
        raise InsufficientSampleError(
            f"series of length {T} is too short for p={p}, horizon {h} (need more than {p + h + cols + 2})"
        )


@dataclass(frozen=True)
class OlsFit:
    """OLS estimates; ``coefficients`` has one column per target equation."""

    coefficients: np.ndarray
    residuals: np.ndarray
    residual_covariance: np.ndarray
    dof: int


def ols(X, targets, rank_tol: float = RANK_TOL) -> OlsFit:
    """Least squares with an explicit rank check.

    The residual covariance is normalized by the number of rows.

    Raises
    ------
    SingularDesignError
        When the smallest singular value of ``X`` is at most ``rank_tol``
        times the largest.
    """
    if isinstance(X, LagMatrix):
        X, targets = X.X, X.targets if targets is None else targets
    X = np.asarray(X, dtype=float)
    Y = np.asarray(targets, dtype=float)
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    n, k = X.shape
    if n < k:
        raise SingularDesignError(f"{n} rows for {k} regressors", float("inf"))
    coef, _, rank, sv = np.linalg.lstsq(X, Y, rcond=None)
    smax = sv[0] if sv.size else 0.0
    smin = sv[-1] if sv.size else 0.0
    if smax == 0.0 or smin <= rank_tol * smax:
        cond = float("inf") if smin == 0.0 else float(smax / smin)
        raise SingularDesignError(f"rank-deficient design (condition number {cond:.3g})", cond)
    resid = Y - X @ coef
    cov = resid.T @ resid / n
    if squeeze:
        coef, resid = coef[:, 0], resid[:, 0]
    return OlsFit(coef, resid, cov, n - k)


def select_lag_sbic(y, p_max: int | None = None) -> int:
    """Lag order minimizing the Schwarz criterion on a common sample.

    Every candidate p = 1..p_max is fitted on t = p_max..T-1 so the criteria
    share the same observations. The criterion is
    ``log det(Sigma_p) + p * m**2 * log(n) / n`` with ML covariance (divide by
    n). Ties go to the smaller order.
    """
    y2, _ = as_2d(y)
    T, m = y2.shape
    if p_max is None:
        p_max = default_p_max(T)
    if p_max < 1:
        raise InvalidInputError("p_max must be at least 1")
    if T <= p_max + 10:
        raise InsufficientSampleError(f"T={T} too short for p_max={p_max}")
    if p_max == 1:
        return 1
    n = T - p_max
    target = y2[p_max:]
    full = lag_block(y2, p_max, p_max, T)
    best_p, best = 1, math.inf
    for p in range(1, p_max + 1):
        fit = ols(full[:, : p * m], target)
        sign, logdet = np.linalg.slogdet(np.atleast_2d(fit.residual_covariance))
        crit = (logdet if sign > 0 else -math.inf) + p * m * m * math.log(n) / n
        if crit < best - 1e-12:
            best_p, best = p, crit
    return best_p


@dataclass(frozen=True)
class VarFit:
    """Per-equation OLS fit of a VAR(p).

    Attributes
    ----------
    order : int
    a_hats : ndarray
        ``(p,)`` for univariate data, else ``(p, m, m)``.
    residuals, centered_residuals : ndarray
        Length ``T - p``; the centered version has its sample mean removed.
    residual_covariance : ndarray
    intercept : ndarray or None
    """

    order: int
    a_hats: np.ndarray
    residuals: np.ndarray
    residual_covariance: np.ndarray
    centered_residuals: np.ndarray
    intercept: np.ndarray | None = None


def split_lag_coefficients(coef: np.ndarray, p: int, m: int, intercept: bool) -> np.ndarray:
    """Turn an OLS coefficient matrix ``(k, m)`` into lag blocks ``(p, m, m)``."""
    off = int(intercept)
    return np.stack([coef[off + j * m : off + (j + 1) * m].T for j in range(p)])


def fit_var(y, p: int, intercept: bool = False) -> VarFit:
    """Fit a VAR(p) (an AR(p) for 1-D input) by OLS."""
    y2, uni = as_2d(y)
    T, m = y2.shape
    check_sample(T, p, 0, m, intercept)
    lm = build_lag_matrix(y2, p, 0, intercept)
    fit = ols(lm.X, lm.targets)
    coef = fit.coefficients.reshape(lm.X.shape[1], m)
    a = split_lag_coefficients(coef, p, m, intercept)
    resid = fit.residuals.reshape(-1, m)
    centered = resid - resid.mean(axis=0)
    const = coef[0] if intercept else None
    if uni:
        a, resid, centered = a[:, 0, 0], resid[:, 0], centered[:, 0]
        const = None if const is None else const[0]
    return VarFit(p, a, resid, fit.residual_covariance, centered, const)


def durbin_ma_from_ar(a, s: int) -> np.ndarray:
    """MA coefficients B_0..B_s implied by AR coefficients A_1..A_p.

    Uses B_0 = I and B_h = sum_{i=1..min(h,p)} A_i B_{h-i}.

    Parameters
    ----------
    a : array_like
        ``(p,)`` scalars or ``(p, m, m)`` matrices.
    s : int
        Last horizon.

    Returns
    -------
    ndarray
        ``(s + 1,)`` or ``(s + 1, m, m)``.

    Examples
    --------
    >>> durbin_ma_from_ar([0.5, 0.3], 3).tolist()
    [1.0, 0.5, 0.55, 0.425]
    """
    a = np.asarray(a, dtype=float)
    if s < 0:
        raise InvalidInputError("s must be non-negative")
    uni = a.ndim == 1
    A = a[:, None, None] if uni else a
    p, m = A.shape[0], A.shape[1]
    B = np.zeros((s + 1, m, m))
    B[0] = np.eye(m)
    for h in range(1, s + 1):
        acc = np.zeros((m, m))
        for i in range(1, min(h, p) + 1):
            acc += A[i - 1] @ B[h - i]
        B[h] = acc
    return B[:, 0, 0] if uni else B
