"""Weighted least squares with absorbed fixed effects, and sandwich covariances.

Multi-factor fixed effects are absorbed by alternating weighted within-group
demeaning (max-change tolerance 1e-8, capped sweeps), which agrees with
explicit dummy-variable OLS on any full-rank instance. Cluster covariance is
the CR1 sandwich with the G/(G-1) * (n-1)/(n-K) small-sample factor; with
singleton clusters it reduces exactly to HC1.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy import stats as sps

from ..errors import CollinearityError, EstimationError
from .design import Design, FitResult, encode_factor

DEMEAN_TOL = 1e-8
DEMEAN_MAX_SWEEPS = 10_000


def _absorb(matrix, factor_codes, weights, tol=DEMEAN_TOL, max_sweeps=DEMEAN_MAX_SWEEPS):
    """Residualise columns on the FE factors by alternating weighted demeaning."""
    if not factor_codes:
        return matrix, 0
    work = matrix.copy()
    group_w = [np.bincount(f, weights=weights) for f in factor_codes]
    for sweep in range(1, max_sweeps + 1):
        max_change = 0.0
        for f, gw in zip(factor_codes, group_w):
            for j in range(work.shape[1]):
                gm = np.bincount(f, weights=weights * work[:, j]) / gw
                delta = gm[f]
                work[:, j] -= delta
                if delta.size:
                    max_change = max(max_change, float(np.abs(delta).max()))
        if max_change < tol:
            return work, sweep
    raise EstimationError(
        f"fixed-effect absorption did not converge in {max_sweeps} sweeps "
        f"(last max change {max_change:.3e}, tol {tol:.0e})"
    )


def _absorbed_df(factor_codes):
    """Degrees of freedom used by the absorbed factors.

    Exact for one factor; the usual L1 + sum(Lj - 1) upper-bound convention
    otherwise (connected-component corrections are ignored).
    """
    if not factor_codes:
        return 0
    levels = [int(f.max()) + 1 for f in factor_codes]
    return levels[0] + sum(l - 1 for l in levels[1:])


def _check_rank(Xw, names, tol=1e-7):
    norms = np.sqrt((Xw ** 2).sum(axis=0))
    scale = norms.max() if norms.size else 0.0
    if scale == 0:
        raise CollinearityError(names)
    dead = [names[j] for j in range(len(names)) if norms[j] <= tol * scale]
    if dead:
        raise CollinearityError(dead)
    normed = Xw / norms
    _, R, piv = scipy.linalg.qr(normed, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    bad = [names[piv[j]] for j in range(len(diag)) if diag[j] <= tol * diag[0]]
    if bad:
        raise CollinearityError(bad)


def wls_fe(design: Design) -> FitResult:
    """Weighted OLS with any number of absorbed fixed-effect factors."""
    y, X, w = design.y, design.X, design.weights
    codes = [encode_factor(f)[0] for f in design.fixed_effects]
    stacked = np.column_stack([y, X])
    demeaned, sweeps = _absorb(stacked, codes, w)
    y_t, X_t = demeaned[:, 0], demeaned[:, 1:]

    sw = np.sqrt(w)
    _check_rank(X_t * sw[:, None], list(design.names))

    XtWX = X_t.T @ (w[:, None] * X_t)
    XtWy = X_t.T @ (w * y_t)
    try:
        coef = np.linalg.solve(XtWX, XtWy)
        bread_inv = np.linalg.inv(XtWX)
    except np.linalg.LinAlgError:
        raise CollinearityError(list(design.names)) from None

    resid = y_t - X_t @ coef
    df_absorbed = _absorbed_df(codes)
    k_total = design.k + df_absorbed
    df_resid = design.n - k_total
    if df_resid <= 0:
        raise EstimationError(f"no residual degrees of freedom (n={design.n}, K={k_total})")

    rss = float(np.sum(w * resid ** 2))
    sigma2 = rss / df_resid
    cov = sigma2 * bread_inv
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        tval = np.where(se > 0, coef / se, np.nan)
    pval = 2.0 * sps.t.sf(np.abs(tval), df_resid)

    y_mean = np.sum(w * y) / np.sum(w)
    tss = float(np.sum(w * (y - y_mean) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else None
    r2_within = None
    if codes:
        tss_within = float(np.sum(w * y_t ** 2))
        r2_within = 1.0 - rss / tss_within if tss_within > 0 else None

    scores = (w * resid)[:, None] * X_t
    return FitResult(
        names=design.names, coef=coef, cov=cov, se=se, stat=tval, pvalues=pval,
        n=design.n, df_resid=df_resid, r2=r2, r2_within=r2_within,
        converged=True, n_iter=sweeps, cov_type="nonrobust",
        meta={"df_absorbed": df_absorbed, "rss": rss, "k_total": k_total},
        _scores=scores, _bread_inv=bread_inv, _X=X_t, _weights=w,
        _fitted=y - resid, _sigma2=sigma2,
    )


def cluster_cov(fit: FitResult, cluster_ids) -> np.ndarray:
    """CR1 cluster-robust covariance for a fitted model (OLS or GLM)."""
    if fit._scores is None or fit._bread_inv is None:
        raise EstimationError("fit carries no score context for sandwich covariance")
    ids = np.asarray(cluster_ids)
    if ids.shape[0] != fit._scores.shape[0]:
        raise EstimationError("cluster ids length mismatch")
    codes, levels = encode_factor(ids)
    G = len(levels)
    if G < 2:
        raise EstimationError("clustered covariance needs at least 2 clusters")
    K = fit._scores.shape[1]
    n = fit.n
    k_total = fit.meta.get("k_total", K)
    sums = np.zeros((G, K))
    np.add.at(sums, codes, fit._scores)
    meat = sums.T @ sums
    factor = (G / (G - 1)) * ((n - 1) / (n - k_total))
    return factor * fit._bread_inv @ meat @ fit._bread_inv


def hc1_cov(fit: FitResult) -> np.ndarray:
    """Heteroskedasticity-robust covariance; equals CR1 with singleton clusters."""
    return cluster_cov(fit, np.arange(fit.n))


def cluster_fit(fit: FitResult, cluster_ids) -> FitResult:
    """Convenience: the same fit with CR1 covariance and t(G-1) p-values."""
    cov = cluster_cov(fit, cluster_ids)
    G = len(np.unique(np.asarray(cluster_ids)))
    return fit.with_cov(cov, cov_type="cluster", df=G - 1)
