"""Local-projection estimates of moving-average coefficients.

Horizon convention: ``b_hats[h]`` is the response at horizon h, with
``b_hats[0]`` the identity. It is the coefficient on y_{t-1} in the
regression of y_{t+h-1} on (y_{t-1}, ..., y_{t-p}).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateExtensionError, InvalidInputError, NumericalCovarianceError, SingularDesignError
from .regress import as_2d, build_lag_matrix, check_sample, lag_block, ols, split_lag_coefficients

GRAM_TOL = 1e-14


@dataclass(frozen=True)
class LpIrfEstimate:
    """Local-projection estimates for horizons 0..H.

    Attributes
    ----------
    b_hats : ndarray
        ``(H + 1,)`` for univariate data, ``(H + 1, m, m)`` otherwise.
    nuisance : list of ndarray
        For each horizon h >= 1, the coefficient blocks on y_{t-2}..y_{t-p}.
    first_step_residuals : ndarray
        Centered residuals of the h = 1 regression (the VAR(p) residuals),
        aligned to t = p..T-1.
    p : int
    rows : tuple of int
        Sample size of each horizon's regression.
    """

    b_hats: np.ndarray
    nuisance: list
    first_step_residuals: np.ndarray
    p: int
    rows: tuple
    intercept: bool = False

    @property
    def H(self) -> int:
        return self.b_hats.shape[0] - 1

    @property
    def univariate(self) -> bool:
        return self.b_hats.ndim == 1


def fit_lp(y, p: int, H: int, intercept: bool = False) -> LpIrfEstimate:
    """Estimate B_1..B_H by one least-squares regression per horizon.

    Parameters
    ----------
    y : array_like
        ``(T,)`` or ``(T, m)`` series.
    p : int
        Number of lags in every regression.
    H : int
        Largest response horizon; ``H = 0`` still runs the first-step
        regression so residuals are available.
    intercept : bool
        Include a constant in each regression.
    """
    y2, uni = as_2d(y)
    T, m = y2.shape
    if p < 1 or H < 0:
        raise InvalidInputError(f"need p >= 1 and H >= 0, got p={p}, H={H}")
    check_sample(T, p, max(H - 1, 0), m, intercept)
    B = np.zeros((H + 1, m, m))
    B[0] = np.eye(m)
    nuisance, rows, resid = [], [], None
    for h in range(1, max(H, 1) + 1):
        lm = build_lag_matrix(y2, p, h - 1, intercept)
        fit = ols(lm.X, lm.targets)
        blocks = split_lag_coefficients(fit.coefficients.reshape(-1, m), p, m, intercept)
        if h == 1:
            resid = fit.residuals.reshape(-1, m)
            resid = resid - resid.mean(axis=0)
        if h <= H:
            B[h] = blocks[0]
            nuisance.append(blocks[1:, 0, 0] if uni else blocks[1:])
            rows.append(lm.rows)
    if uni:
        B, resid = B[:, 0, 0], resid[:, 0]
    return LpIrfEstimate(B, nuisance, resid, p, tuple(rows), intercept)


@dataclass(frozen=True)
class MaExtension:
    """MA coefficients beyond H from the auxiliary regression.

    ``extended[k]`` is the response at horizon H + 1 + k; ``extended[0]``
    equals ``g_hat`` and ``extended[k] = g_hat @ B_k`` for k >= 1.
    """

    g_hat: np.ndarray
    extended: np.ndarray
    aux_residuals: np.ndarray
    H: int

    @property
    def s_max(self) -> int:
        return self.H + self.extended.shape[0]


def _mat(b):
    b = np.asarray(b, dtype=float)
    return b[:, None, None] if b.ndim == 1 else b


def fit_ma_extension(y, lp: LpIrfEstimate, s_max: int) -> MaExtension:
    """Extend LP responses past H with the auxiliary-regression recursion.

    The part of y_t not explained by the first H + 1 MA terms,
    v_t = y_t - sum_{h=0..H} B_h e_{t-h}, is regressed on y_{t-H-1}
    (no intercept) to obtain G. Then B_{H+1} = G and
    B_{H+j+1} = G B_j for j >= 1, using extended terms once j > H.

    Raises
    ------
    DegenerateExtensionError
        If fewer than 10 rows are available or the regression is singular.
    """
    y2, uni = as_2d(y)
    T, m = y2.shape
    H, p = lp.H, lp.p
    if s_max <= H:
        raise InvalidInputError(f"s_max={s_max} must exceed H={H}")
    eps = lp.first_step_residuals.reshape(-1, m)
    B = _mat(lp.b_hats)
    start = p + H
    n = T - start
    if n < 10:
        raise DegenerateExtensionError(f"only {n} rows for the auxiliary regression")
    fitted = np.zeros((n, m))
    for h in range(H + 1):
        e_lag = eps[start - h - p : T - h - p]
        fitted += e_lag @ B[h].T
    v = y2[start:] - fitted
    x = y2[start - H - 1 : T - H - 1]
    try:
        fit = ols(x, v)
    except SingularDesignError as exc:
        raise DegenerateExtensionError(f"auxiliary regression is singular: {exc}") from exc
    G = fit.coefficients.reshape(m, m).T
    n_ext = s_max - H
    full = np.zeros((s_max + 1, m, m))
    full[: H + 1] = B
    full[H + 1] = G
    for j in range(1, n_ext):
        full[H + 1 + j] = G @ full[j]
    ext = full[H + 1 :]
    aux = fit.residuals.reshape(-1, m)
    if uni:
        return MaExtension(G[0, 0], ext[:, 0, 0], aux[:, 0], H)
    return MaExtension(G, ext, aux, H)


def extended_irf(lp: LpIrfEstimate, ext: MaExtension | None = None) -> np.ndarray:
    """Concatenate B_0..B_H with any extension terms."""
    if ext is None:
        return lp.b_hats.copy()
    return np.concatenate([lp.b_hats, ext.extended], axis=0)


def contrast_vector(m: int, delta=None) -> np.ndarray:
    """Contrast on vec(B_h) (column-major); default picks element (0, 0)."""
    if delta is None:
        d = np.zeros(m * m)
        d[0] = 1.0
        return d
    d = np.asarray(delta, dtype=float).ravel()
    if d.size != m * m:
        raise InvalidInputError(f"contrast must have {m * m} entries, got {d.size}")
    return d


def vec_responses(b) -> np.ndarray:
    """Rows of vec(B_h) (column-major) for a stack of responses."""
    b = _mat(b)
    return b.transpose(0, 2, 1).reshape(b.shape[0], -1)


def lp_point_and_scale(lp: LpIrfEstimate, boot_cov, delta=None) -> tuple[np.ndarray, np.ndarray]:
    """Point estimate delta' beta_h and scale sqrt(delta' V_h delta) per horizon.

    ``boot_cov`` holds one covariance per horizon: shape ``(H + 1,)`` of
    variances for scalar responses or ``(H + 1, d, d)`` with d = m**2.

    Examples
    --------
    >>> from types import SimpleNamespace
    >>> lp = SimpleNamespace(b_hats=np.array([1.0, 0.5]))
    >>> lp_point_and_scale(lp, np.array([0.0, 4.0]))[1].tolist()
    [0.0, 2.0]
    """
    beta = vec_responses(lp.b_hats)
    d = beta.shape[1]
    delta = contrast_vector(int(round(np.sqrt(d))), delta)
    V = np.asarray(boot_cov, dtype=float)
    if V.ndim == 1:
        V = V[:, None, None]
    if V.shape != (beta.shape[0], d, d):
        raise InvalidInputError(f"covariance shape {V.shape} does not match {beta.shape[0]} horizons of size {d}")
    for h, Vh in enumerate(V):
        if not np.allclose(Vh, Vh.T, atol=1e-12, rtol=1e-10):
            raise NumericalCovarianceError(f"covariance at horizon {h} is not symmetric")
        w = np.linalg.eigvalsh(Vh)
        if w.size and w[0] < -1e-10 * max(abs(w[-1]), 1.0):
            raise NumericalCovarianceError(f"covariance at horizon {h} has negative eigenvalue {w[0]:.3g}")
    point = beta @ delta
    var = np.einsum("i,hij,j->h", delta, V, delta)
    return point, np.sqrt(np.clip(var, 0.0, None))


def batched_lag_regressions(Y, p: int, n_horizons: int) -> tuple[np.ndarray, np.ndarray]:
    """Solve many univariate lag regressions at once.

    For each row ``y`` of ``Y`` and each k = 0..n_horizons-1, regress
    y_{t+k} on (y_{t-1}, ..., y_{t-p}) over t = p..T-1-k without an
    intercept. Cross products come from cumulative sums of lagged products,
    so all horizons cost little more than one.

    Returns
    -------
    coef : ndarray, shape (n, n_horizons, p)
        NaN where the design was singular.
    ok : ndarray of bool, shape (n,)
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n, T = Y.shape
    K = n_horizons
    if T - p - (K - 1) <= p:
        raise InvalidInputError(f"T={T} too short for p={p} and {K} horizons")
    D = p + K
    # C[d][:, i] = sum_{t<i, t>=d} y_t y_{t-d}; stored with a leading zero column.
    C = np.zeros((D, n, T + 1))
    for d in range(D):
        C[d, :, d + 1 :] = np.cumsum(Y[:, d:] * Y[:, : T - d], axis=1)

    def S(d, a, b):
        return C[d, :, b] - C[d, :, a]

    G = np.empty((n, K, p, p))
    c = np.empty((n, K, p))
    for k in range(K):
        for j in range(p):
            for l in range(j, p):
                g = S(l - j, p - 1 - j, T - 1 - k - j)
                G[:, k, j, l] = g
                G[:, k, l, j] = g
            c[:, k, j] = S(k + j + 1, p + k, T)
    last = G[:, K - 1]
    diag = np.einsum("nii->ni", last)
    ok = np.all(diag > 0, axis=1)
    scale = np.where(ok[:, None], 1.0 / np.sqrt(np.where(diag > 0, diag, 1.0)), 0.0)
    scaled = last * scale[:, :, None] * scale[:, None, :]
    w = np.linalg.eigvalsh(scaled)
    ok &= w[:, 0] > GRAM_TOL * np.maximum(w[:, -1], 1e-300)
    coef = np.full((n, K, p), np.nan)
    if ok.any():
        coef[ok] = np.linalg.solve(G[ok], c[ok][..., None])[..., 0]
    return coef, ok


def lp_responses(Y, p: int, H: int) -> tuple[np.ndarray, np.ndarray]:
    """Univariate LP responses r_0..r_H for each row of ``Y``.

    Equivalent to ``fit_lp(y, p, H).b_hats`` row by row, up to rounding.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    K = max(H, 1)
    coef, ok = batched_lag_regressions(Y, p, K)
    out = np.empty((Y.shape[0], H + 1))
    out[:, 0] = 1.0
    out[:, 1:] = coef[:, :H, 0]
    out[~ok] = np.nan
    return out, ok
