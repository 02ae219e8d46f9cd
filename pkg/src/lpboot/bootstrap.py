"""Moving-average bootstrap pipelines and percentile-t intervals.

Three pipelines share one summary step:

* :func:`run_lp_bootstrap` builds bootstrap series from LP-estimated MA
  coefficients (truncated at H, or extended to the sample length through the
  auxiliary-regression recursion) and re-estimates the LPs.
* :func:`run_var_ma_bootstrap` does the same with MA coefficients implied by
  a VAR(p) and re-fits the VAR.
* :func:`run_ar_benchmark` is the recursive-design residual bootstrap of an
  AR(p) without bias correction.

Every replicate ``b`` draws from its own generator, ``seeding.generator(seed, b)``,
so results do not depend on chunking or scheduling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from . import seeding
from .errors import DegenerateExtensionError, InvalidInputError, InvalidSpecError, PipelineError, SingularDesignError
from .localproj import (
    LpIrfEstimate,
    batched_lag_regressions,
    contrast_vector,
    extended_irf,
    fit_lp,
    fit_ma_extension,
    lp_point_and_scale,
    lp_responses,
    vec_responses,
)
from .regress import as_2d, durbin_ma_from_ar, fit_var
from .resample import ResampleScheme, default_block_length, draw_innovations

logger = logging.getLogger(__name__)

MAX_FAILURE_SHARE = 0.10
_CHUNK_ELEMENTS = 4_000_000
_DIRECT_CONV_MAX = 64


@dataclass(frozen=True)
class BootPipelineConfig:
    """Settings shared by the bootstrap pipelines.

    Attributes
    ----------
    method : {1, 2}
        1 truncates the MA filter at H; 2 extends it through the recursion.
        Only used by :func:`run_lp_bootstrap`.
    B : int
        Number of bootstrap replicates (at least 19).
    alpha : float
        Nominal miscoverage; intervals have level 1 - alpha.
    scheme : ResampleScheme or None
        None picks block wild with block length from ``block_rule`` for the
        LP pipeline and i.i.d. draws for the VAR and AR pipelines.
    block_rule : {"H", "1.5H"}
    weight_law : {"rademacher", "normal"}
        Used when ``scheme`` is None.
    delta : array_like or None
        Contrast on vec(B_h); None selects the own response of variable 0.
    var_ma_s : int or None
        MA truncation for the VAR pipeline; None means the sample length.
    ar_intercept : bool
        Fit the AR benchmark, and its replicates, with a constant.
    """

    method: int = 1
    B: int = 999
    alpha: float = 0.10
    scheme: ResampleScheme | None = None
    block_rule: str = "H"
    weight_law: str = "rademacher"
    delta: tuple | None = None
    var_ma_s: int | None = None
    ar_intercept: bool = True

    def __post_init__(self):
        if self.method not in (1, 2):
            raise InvalidSpecError(f"method must be 1 or 2, got {self.method!r}")
        if int(self.B) != self.B or self.B < 19:
            raise InvalidSpecError(f"B must be an integer >= 19, got {self.B!r}")
        if not (0.0 < self.alpha < 1.0):
            raise InvalidSpecError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        default_block_length(1, self.block_rule)

    def lp_scheme(self, H: int) -> ResampleScheme:
        if self.scheme is not None:
            return self.scheme
        return ResampleScheme("bwb", default_block_length(H, self.block_rule), self.weight_law)

    def benchmark_scheme(self) -> ResampleScheme:
        return self.scheme if self.scheme is not None else ResampleScheme("iid")


@dataclass
class BootstrapResult:
    """Per-horizon bootstrap output for horizons 0..H.

    ``replicates[b, h]`` is delta' beta*_h for the b-th successful replicate
    and ``stats[b, h]`` its studentized version. Horizon 0 is the identity
    and always has a zero-width interval.
    """

    horizons: np.ndarray
    point: np.ndarray
    scale: np.ndarray
    replicates: np.ndarray
    stats: np.ndarray
    q_lo: np.ndarray
    q_hi: np.ndarray
    lo_t: np.ndarray
    hi_t: np.ndarray
    lo_efron: np.ndarray
    hi_efron: np.ndarray
    boot_cov: np.ndarray
    n_failures: int
    alpha: float
    method: str = "lp-method1"
    fallback: bool = False
    n_explosive: int = 0
    p: int = 0
    warnings: list = field(default_factory=list)

    @property
    def H(self) -> int:
        return len(self.horizons) - 1

    @property
    def boot_mean(self) -> np.ndarray:
        return self.replicates.mean(axis=0)

    def records(self) -> list[dict]:
        """JSON-ready rows, one per horizon."""
        return [
            {
                "horizon": int(h),
                "point": float(self.point[h]),
                "lo_t": float(self.lo_t[h]),
                "hi_t": float(self.hi_t[h]),
                "lo_efron": float(self.lo_efron[h]),
                "hi_efron": float(self.hi_efron[h]),
                "n_failures": int(self.n_failures),
            }
            for h in self.horizons
        ]


def order_statistic(sorted_values: np.ndarray, kappa: float) -> np.ndarray:
    """Inverse-ECDF quantile: element ceil(kappa * n) (1-based) along axis 0.

    Examples
    --------
    >>> order_statistic(np.array([-2.0, -1, 0, 1, 2]), 0.2).item()
    -2.0
    >>> order_statistic(np.array([-2.0, -1, 0, 1, 2]), 0.8).item()
    1.0
    """
    n = sorted_values.shape[0]
    k = int(math.ceil(kappa * n - 1e-9))
    return sorted_values[min(max(k, 1), n) - 1]


def summarize_replicates(point, replicates, alpha: float, boot_cov=None, scale=None) -> dict:
    """Percentile-t and Efron intervals from replicate contrasts.

    The same bootstrap standard deviation studentizes the replicates and
    scales the interval. A zero scale gives zero statistics and a
    zero-width interval at the point estimate.

    Parameters
    ----------
    point : ndarray, shape (H + 1,)
    replicates : ndarray, shape (B, H + 1)
    alpha : float
    boot_cov, scale : ndarray, optional
        Precomputed covariance and scale; by default the scale is the
        sample standard deviation of the replicates (ddof=1).
    """
    point = np.asarray(point, dtype=float)
    R = np.asarray(replicates, dtype=float)
    if R.shape[0] < 2:
        raise PipelineError("need at least two successful replicates")
    if scale is None:
        scale = R.std(axis=0, ddof=1)
    # identical replicates leave rounding noise in the standard deviation
    scale = np.where(scale <= 1e-12 * np.maximum(1.0, np.abs(R).max(axis=0)), 0.0, scale)
    if boot_cov is None:
        boot_cov = scale**2
    safe = np.where(scale > 0, scale, 1.0)
    stats = np.where(scale > 0, (R - point) / safe, 0.0)
    s_sorted = np.sort(stats, axis=0)
    r_sorted = np.sort(R, axis=0)
    q_lo = order_statistic(s_sorted, alpha / 2)
    q_hi = order_statistic(s_sorted, 1 - alpha / 2)
    return dict(
        point=point,
        scale=scale,
        replicates=R,
        stats=stats,
        q_lo=q_lo,
        q_hi=q_hi,
        lo_t=point - scale * q_hi,
        hi_t=point - scale * q_lo,
        lo_efron=order_statistic(r_sorted, alpha / 2),
        hi_efron=order_statistic(r_sorted, 1 - alpha / 2),
        boot_cov=boot_cov,
    )


def arrange_innovations(draw: np.ndarray, T: int, s: int) -> np.ndarray:
    """Map a draw of length >= T + s onto times -s..T-1.

    Draw positions 0..T-1 become in-sample times 0..T-1 and positions
    T..T+s-1 become presample times -1..-s. Extending ``s`` therefore only
    adds presample values and leaves the in-sample innovations unchanged.
    """
    if draw.shape[0] < T + s:
        raise InvalidInputError(f"need {T + s} innovations, got {draw.shape[0]}")
    return np.concatenate([draw[T : T + s][::-1], draw[:T]], axis=0)


def generate_ma_path(irf, innovations, T: int) -> np.ndarray:
    """y*_t = sum_{h=0..s} B_h e*_{t-h} for t = 0..T-1.

    ``innovations`` are in time order with the first s entries presample
    (times -s..-1). A 2-D array of univariate innovations, shape (n, L),
    yields n paths at once.

    Examples
    --------
    >>> generate_ma_path(np.array([1.0, 0.5]), np.array([0.0, 2.0, 4.0]), 2).tolist()
    [2.0, 5.0]
    """
    b = np.asarray(irf, dtype=float)
    e = np.asarray(innovations, dtype=float)
    s = b.shape[0] - 1
    if b.ndim == 1:
        batch = e.ndim == 2
        E = e if batch else e[None, :]
        if E.shape[1] < T + s:
            raise InvalidInputError(f"need {T + s} innovations for s={s}, got {E.shape[1]}")
        E = E[:, : T + s]
        if s <= _DIRECT_CONV_MAX:
            out = np.zeros((E.shape[0], T))
            for h in range(s + 1):
                out += b[h] * E[:, s - h : s - h + T]
        else:
            out = signal.fftconvolve(E, b[None, :], mode="valid", axes=1)
        return out if batch else out[0]
    if e.ndim != 2 or e.shape[0] < T + s:
        raise InvalidInputError(f"need ({T + s}, m) innovations for s={s}")
    out = np.zeros((T, b.shape[1]))
    for h in range(s + 1):
        out += e[s - h : s - h + T] @ b[h].T
    return out


def _chunks(B: int, per_replicate: int):
    size = max(1, min(B, _CHUNK_ELEMENTS // max(per_replicate, 1)))
    for start in range(0, B, size):
        yield range(start, min(B, start + size))


def _draw_paths(residuals, irf, T, scheme, seed, idx):
    s = irf.shape[0] - 1
    E = np.stack(
        [arrange_innovations(draw_innovations(residuals, T + s, scheme, seeding.generator(seed, b)), T, s) for b in idx]
    )
    if irf.ndim == 1:
        return generate_ma_path(irf, E, T)
    return np.stack([generate_ma_path(irf, e, T) for e in E])


def _check_failures(n_fail: int, B: int) -> None:
    if n_fail >= B - 1:
        raise PipelineError(f"{n_fail} of {B} bootstrap replicates failed")
    if n_fail > MAX_FAILURE_SHARE * B:
        raise PipelineError(f"{n_fail} of {B} bootstrap replicates failed (more than {MAX_FAILURE_SHARE:.0%})")


def _finish(point_b, rep_b, n_fail, cfg, H, **extra) -> BootstrapResult:
    """Reduce replicate responses to intervals for the chosen contrast."""
    beta = vec_responses(point_b)
    reps = np.stack([vec_responses(r) for r in rep_b]) if rep_b.ndim == 4 else rep_b[:, :, None]
    d = beta.shape[1]
    delta = contrast_vector(int(round(math.sqrt(d))), cfg.delta)
    if reps.shape[0] >= 2:
        centered = reps - reps.mean(axis=0)
        cov = np.einsum("bhi,bhj->hij", centered, centered) / (reps.shape[0] - 1)
    else:
        cov = np.zeros((H + 1, d, d))
    est = LpIrfEstimate(point_b, [], np.zeros(0), 0, ())
    point, scale = lp_point_and_scale(est, cov if d > 1 else cov[:, 0, 0], cfg.delta)
    summary = summarize_replicates(point, reps @ delta, cfg.alpha, cov, scale)
    return BootstrapResult(horizons=np.arange(H + 1), n_failures=int(n_fail), alpha=cfg.alpha, **summary, **extra)


def run_lp_bootstrap(y, p: int, H: int, cfg: BootPipelineConfig, seed=None, lp: LpIrfEstimate | None = None) -> BootstrapResult:
    """LP moving-average bootstrap.

    Parameters
    ----------
    y : array_like
        ``(T,)`` or ``(T, m)`` series.
    p : int
        Lags in every LP regression, reused for the replicates.
    H : int
        Largest response horizon.
    cfg : BootPipelineConfig
    seed : int or SeedSequence
        Root of the per-replicate generators.
    lp : LpIrfEstimate, optional
        Precomputed ``fit_lp(y, p, H)``.

    Returns
    -------
    BootstrapResult
        With ``fallback=True`` when method 2 was requested but the
        extension regression was degenerate, in which case method 1 is used.
    """
    y2, uni = as_2d(y)
    T = y2.shape[0]
    if lp is None:
        lp = fit_lp(y, p, H)
    elif lp.p != p or lp.H != H:
        raise InvalidInputError("precomputed fit does not match p and H")
    irf = lp.b_hats
    method, fallback, notes = cfg.method, False, []
    if method == 2:
        s_max = T - H
        if s_max > H:
            try:
                irf = extended_irf(lp, fit_ma_extension(y, lp, s_max))
            except DegenerateExtensionError as exc:
                fallback, method = True, 1
                notes.append(f"method 2 fell back to method 1: {exc}")
                logger.info(notes[-1])
        else:
            fallback, method = True, 1
            notes.append("method 2 fell back to method 1: sample too short to extend past H")
    scheme = cfg.lp_scheme(H)
    seed = seeding.as_seed_sequence(seed)
    eps = lp.first_step_residuals
    reps, n_fail = [], 0
    per = (p + max(H, 1) + 2) * (T + irf.shape[0])
    for idx in _chunks(cfg.B, per):
        paths = _draw_paths(eps if uni else eps.reshape(-1, y2.shape[1]), irf, T, scheme, seed, idx)
        if uni:
            r, ok = lp_responses(paths, p, H)
            reps.append(r[ok])
            n_fail += int((~ok).sum())
        else:
            for path in paths:
                try:
                    reps.append(fit_lp(path, p, H).b_hats[None])
                except SingularDesignError:
                    n_fail += 1
    _check_failures(n_fail, cfg.B)
    rep = np.concatenate(reps, axis=0)
    return _finish(lp.b_hats, rep, n_fail, cfg, H, method=f"lp-method{method}", fallback=fallback, p=p, warnings=notes)


def _batched_durbin(A: np.ndarray, s: int) -> np.ndarray:
    """Durbin recursion for many univariate AR coefficient rows ``(n, p)``."""
    n, p = A.shape
    Bm = np.zeros((n, s + 1))
    Bm[:, 0] = 1.0
    for h in range(1, s + 1):
        k = min(h, p)
        Bm[:, h] = np.einsum("ni,ni->n", A[:, :k], Bm[:, h - k : h][:, ::-1])
    return Bm


def _spectral_radii(A: np.ndarray) -> np.ndarray:
    n, p = A.shape
    comp = np.zeros((n, p, p))
    comp[:, 0, :] = A
    if p > 1:
        comp[:, 1:, :-1] = np.eye(p - 1)
    return np.max(np.abs(np.linalg.eigvals(comp)), axis=1)


def _refit_ar(paths, p, H, uni, m, intercept=False):
    """AR/VAR refit of replicate paths mapped to responses 0..H."""
    if uni and not intercept:
        coef, ok = batched_lag_regressions(paths, p, 1)
        A = coef[ok, 0, :]
        return _batched_durbin(A, H), A, int((~ok).sum())
    out, coefs, n_fail = [], [], 0
    for path in paths:
        try:
            a = fit_var(path, p, intercept).a_hats
        except SingularDesignError:
            n_fail += 1
            continue
        out.append(durbin_ma_from_ar(a, H))
        coefs.append(a)
    if not out:
        return np.empty((0, H + 1) + ((m, m) if not uni else ())), np.empty((0, p)), n_fail
    return np.stack(out), (np.stack(coefs) if uni else coefs), n_fail


def run_var_ma_bootstrap(y, p: int, H: int, cfg: BootPipelineConfig, seed=None) -> BootstrapResult:
    """VAR-implied moving-average bootstrap.

    MA coefficients up to ``cfg.var_ma_s`` (default: the sample length)
    come from the Durbin recursion on a VAR(p) fit; replicate series are
    filtered resampled residuals, re-fitted by VAR(p) and mapped back to
    responses 0..H.
    """
    y2, uni = as_2d(y)
    T, m = y2.shape
    fit = fit_var(y, p)
    s = T if cfg.var_ma_s is None else int(cfg.var_ma_s)
    if s < H:
        raise InvalidSpecError(f"var_ma_s={s} must be at least H={H}")
    irf = durbin_ma_from_ar(fit.a_hats, s)
    point = irf[: H + 1]
    scheme = cfg.benchmark_scheme()
    seed = seeding.as_seed_sequence(seed)
    reps, n_fail = [], 0
    for idx in _chunks(cfg.B, (p + 2) * (T + s)):
        paths = _draw_paths(fit.centered_residuals, irf, T, scheme, seed, idx)
        r, _, nf = _refit_ar(paths, p, H, uni, m)
        reps.append(r)
        n_fail += nf
    _check_failures(n_fail, cfg.B)
    return _finish(point, np.concatenate(reps, axis=0), n_fail, cfg, H, method="var-ma", p=p)


def run_ar_benchmark(y, p: int, H: int, cfg: BootPipelineConfig, seed=None) -> BootstrapResult:
    """Recursive-design residual bootstrap of an AR(p), no bias correction.

    Replicates start from the first p observations of ``y`` and follow the
    fitted recursion driven by resampled centered residuals. With
    ``cfg.ar_intercept`` the fits and the recursion carry a constant.
    Explosive replicate fits are kept and counted in ``n_explosive``.
    """
    y2, uni = as_2d(y)
    if not uni:
        raise InvalidInputError("the AR benchmark is univariate")
    y = y2[:, 0]
    T = y.shape[0]
    fit = fit_var(y, p, cfg.ar_intercept)
    const = fit.intercept if cfg.ar_intercept else 0.0
    point = durbin_ma_from_ar(fit.a_hats, H)
    scheme = cfg.benchmark_scheme()
    seed = seeding.as_seed_sequence(seed)
    den = np.concatenate(([1.0], -fit.a_hats))
    zi = signal.lfiltic([1.0], den, y=y[p - 1 :: -1][:p])
    reps, n_fail, n_explosive = [], 0, 0
    for idx in _chunks(cfg.B, (p + 2) * T):
        E = np.stack([draw_innovations(fit.centered_residuals, T - p, scheme, seeding.generator(seed, b)) for b in idx]) + const
        tail = signal.lfilter([1.0], den, E, axis=1, zi=np.broadcast_to(zi, (len(idx), zi.size)).copy())[0]
        paths = np.hstack([np.broadcast_to(y[:p], (len(idx), p)), tail])
        r, A, nf = _refit_ar(paths, p, H, True, 1, cfg.ar_intercept)
        n_explosive += int(np.sum(_spectral_radii(A) >= 1.0)) if len(A) else 0
        reps.append(r)
        n_fail += nf
    _check_failures(n_fail, cfg.B)
    return _finish(point, np.concatenate(reps, axis=0), n_fail, cfg, H, method="ar-benchmark", n_explosive=n_explosive, p=p)
