"""Binary-outcome GLMs (logit/probit) by IRLS, with average marginal effects.

Observation weights are treated as sampling weights and normalised to mean 1
internally, so the model-based covariance follows the normalised-weight
convention; sandwich covariances are invariant to that scale. Convergence is
max-norm of the score below 1e-8; diverging linear predictors raise
SeparationError.
"""

from __future__ import annotations

import numpy as np
from scipy import stats as sps

from ..errors import EstimationError, SeparationError
from .design import Design, FitResult

GRAD_TOL = 1e-8
MAX_ITER = 100
ETA_DIVERGENCE = 100.0
_PROBIT_CLIP = 1e-12


def _link_terms(link, eta, y, w):
    """Per-observation probability, score factor, and IRLS weight."""
    if link == "logit":
        p = 1.0 / (1.0 + np.exp(-np.clip(eta, -500, 500)))
        score = w * (y - p)
        irls_w = w * p * (1.0 - p)
    elif link == "probit":
        p = np.clip(sps.norm.cdf(eta), _PROBIT_CLIP, 1.0 - _PROBIT_CLIP)
        phi = sps.norm.pdf(eta)
        ratio = phi / (p * (1.0 - p))
        score = w * (y - p) * ratio
        irls_w = w * phi * ratio
    else:
        raise EstimationError(f"unknown link '{link}'")
    return p, score, irls_w


def glm_binary(design: Design, link: str = "logit",
               max_iter: int = MAX_ITER, tol: float = GRAD_TOL) -> FitResult:
    y, X = design.y, design.X
    if not np.all((y == 0) | (y == 1)):
        raise EstimationError("binary GLM outcome must be 0/1")
    if y.min() == y.max():
        raise EstimationError("outcome has a single class")
    w = design.weights / design.weights.mean()

    beta = np.zeros(design.k)
    eta = X @ beta
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p, score, irls_w = _link_terms(link, eta, y, w)
        grad = X.T @ score
        if np.abs(grad).max() < tol:
            converged = True
            break
        H = X.T @ (irls_w[:, None] * X)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            raise SeparationError() from None
        beta = beta + step
        eta = X @ beta
        if np.abs(eta).max() > ETA_DIVERGENCE:
            raise SeparationError()
    if not converged:
        raise EstimationError(f"IRLS did not converge in {max_iter} iterations "
                              f"(max |score| {np.abs(grad).max():.3e})")

    p, score, irls_w = _link_terms(link, eta, y, w)
    info = X.T @ (irls_w[:, None] * X)
    cov = np.linalg.inv(info)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, beta / se, np.nan)
    pval = 2.0 * sps.norm.sf(np.abs(z))
    eps = 1e-300
    loglik = float(np.sum(w * (y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))))

    return FitResult(
        names=design.names, coef=beta, cov=cov, se=se, stat=z, pvalues=pval,
        n=design.n, df_resid=design.n - design.k, r2=None,
        converged=True, n_iter=it, cov_type="nonrobust",
        meta={"link": link, "loglik": loglik, "k_total": design.k},
        _scores=score[:, None] * X, _bread_inv=cov, _X=X, _weights=w,
        _fitted=p, _link=link,
    )


def predict_prob(fit: FitResult, X=None):
    X = fit._X if X is None else np.asarray(X, dtype=float)
    eta = X @ fit.coef
    if fit._link == "logit":
        return 1.0 / (1.0 + np.exp(-np.clip(eta, -500, 500)))
    return sps.norm.cdf(eta)


def ame(fit: FitResult, variable: str, at=None, cov=None):
    """Average marginal effect of a continuous regressor, with delta-method SE.

    `at` optionally overrides the evaluation data as (X, weights); default is
    the estimation sample. `cov` substitutes e.g. a clustered covariance.
    """
    if fit._link is None:
        raise EstimationError("average marginal effects need a fitted binary GLM")
    if variable not in fit.names:
        raise EstimationError(f"variable '{variable}' not in the fit")
    j = fit.names.index(variable)
    if at is None:
        X, w = fit._X, fit._weights
    else:
        X, w = at
        X = np.asarray(X, dtype=float)
        w = np.ones(X.shape[0]) if w is None else np.asarray(w, dtype=float)
    V = fit.cov if cov is None else np.asarray(cov, dtype=float)
    wsum = w.sum()
    eta = X @ fit.coef
    beta_j = fit.coef[j]
    if fit._link == "logit":
        p = 1.0 / (1.0 + np.exp(-np.clip(eta, -500, 500)))
        dens = p * (1.0 - p)
        ddens_deta = (1.0 - 2.0 * p) * dens
    else:
        dens = sps.norm.pdf(eta)
        ddens_deta = -eta * dens
    effect = float(np.sum(w * dens) * beta_j / wsum)
    # gradient wrt beta: d/db_m mean(w * dens * b_j)
    grad = (X.T @ (w * ddens_deta) * beta_j) / wsum
    grad[j] += float(np.sum(w * dens) / wsum)
    se = float(np.sqrt(grad @ V @ grad))
    z = effect / se if se > 0 else np.nan
    pval = float(2.0 * sps.norm.sf(abs(z))) if np.isfinite(z) else np.nan
    return {"variable": variable, "ame": effect, "se": se, "z": z, "p": pval}
