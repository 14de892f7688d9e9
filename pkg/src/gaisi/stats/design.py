"""Regression inputs/outputs and small weighted-statistics helpers.

All estimators take a Design and return a FitResult. Reductions are
fixed-order numpy sums over canonically ordered rows, so results are
deterministic regardless of partitioning; `stable_mean` offers a
compensated-summation path for very long accumulations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats as sps

from ..errors import EstimationError


def _as_2d(x):
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


@dataclass(frozen=True)
class Design:
    """Outcome, named regressors, observation weights, clusters, FE factors."""

    y: np.ndarray
    X: np.ndarray
    names: tuple[str, ...]
    weights: np.ndarray | None = None
    cluster: np.ndarray | None = None
    fixed_effects: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        X = _as_2d(self.X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "names", tuple(self.names))
        n = y.shape[0]
        if X.shape[0] != n:
            raise EstimationError(f"X has {X.shape[0]} rows, y has {n}")
        if X.shape[1] != len(self.names):
            raise EstimationError(f"{X.shape[1]} regressors but {len(self.names)} names")
        if self.weights is None:
            object.__setattr__(self, "weights", np.ones(n))
        else:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.shape[0] != n:
                raise EstimationError("weights length mismatch")
            if np.any(w <= 0):
                raise EstimationError("weights must be strictly positive")
            object.__setattr__(self, "weights", w)
        if self.cluster is not None:
            c = np.asarray(self.cluster)
            if c.shape[0] != n:
                raise EstimationError("cluster ids length mismatch")
            object.__setattr__(self, "cluster", c)
        fes = []
        for f in self.fixed_effects:
            f = np.asarray(f)
            if f.shape[0] != n:
                raise EstimationError("fixed-effect factor length mismatch")
            fes.append(f)
        object.__setattr__(self, "fixed_effects", tuple(fes))
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(X)):
            raise EstimationError("NaN or inf in outcome or regressors")

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def k(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class FitResult:
    names: tuple[str, ...]
    coef: np.ndarray
    cov: np.ndarray
    se: np.ndarray
    stat: np.ndarray          # t or z per coefficient
    pvalues: np.ndarray
    n: int
    df_resid: float
    r2: float | None = None
    r2_within: float | None = None
    converged: bool = True
    n_iter: int = 0
    cov_type: str = "nonrobust"
    meta: dict = field(default_factory=dict)
    # private context for sandwich/AME computations
    _scores: np.ndarray | None = None      # n x K, already weight-multiplied
    _bread_inv: np.ndarray | None = None   # (X'WX)^-1 (or information inverse)
    _X: np.ndarray | None = None
    _weights: np.ndarray | None = None
    _fitted: np.ndarray | None = None
    _link: str | None = None
    _sigma2: float | None = None

    def __getitem__(self, name):
        return float(self.coef[self.names.index(name)])

    def se_of(self, name):
        return float(self.se[self.names.index(name)])

    def p_of(self, name):
        return float(self.pvalues[self.names.index(name)])

    def with_cov(self, cov, cov_type, df=None):
        """Same fit with a replacement covariance (e.g. cluster-robust)."""
        cov = np.asarray(cov, dtype=float)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        with np.errstate(divide="ignore", invalid="ignore"):
            stat = np.where(se > 0, self.coef / se, np.nan)
        dfr = self.df_resid if df is None else df
        p = 2.0 * sps.t.sf(np.abs(stat), max(dfr, 1.0))
        return replace(self, cov=cov, se=se, stat=stat, pvalues=p, cov_type=cov_type,
                       df_resid=dfr if df is not None else self.df_resid)

    def summary_table(self):
        return {
            name: {"estimate": float(self.coef[i]), "se": float(self.se[i]),
                   "stat": float(self.stat[i]), "p": float(self.pvalues[i])}
            for i, name in enumerate(self.names)
        }

    def to_json(self, path=None):
        payload = {
            "coefficients": self.summary_table(),
            "covariance": {"type": self.cov_type, "matrix": [[float(v) for v in row] for row in self.cov]},
            "n": int(self.n),
            "df_resid": float(self.df_resid),
            "r2": None if self.r2 is None else float(self.r2),
            "r2_within": None if self.r2_within is None else float(self.r2_within),
            "converged": bool(self.converged),
            "n_iter": int(self.n_iter),
            "meta": self.meta,
        }
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def check_psd(cov, tol=1e-8):
    """Symmetric-PSD check used by tests and result validation."""
    cov = np.asarray(cov)
    if not np.allclose(cov, cov.T, atol=tol * (1 + np.abs(cov).max())):
        return False
    eig = np.linalg.eigvalsh(0.5 * (cov + cov.T))
    return bool(eig.min() >= -tol * max(1.0, eig.max()))


# --- weighted helpers ---

def weighted_mean(values, weights=None, stable=False):
    v = np.asarray(values, dtype=float)
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float)
    if stable:
        return math.fsum(v * w) / math.fsum(w)
    return float(np.sum(v * w) / np.sum(w))


def weighted_sd(values, weights=None):
    v = np.asarray(values, dtype=float)
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float)
    m = weighted_mean(v, w)
    return float(np.sqrt(np.sum(w * (v - m) ** 2) / np.sum(w)))


def weighted_quantile(values, q, weights=None):
    """Step-function weighted quantile: smallest x with F_w(x) >= q."""
    v = np.asarray(values, dtype=float)
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float)
    order = np.argsort(v, kind="stable")
    cw = np.cumsum(w[order])
    qs = np.atleast_1d(np.asarray(q, dtype=float))
    idx = np.searchsorted(cw, qs * cw[-1], side="left")
    out = v[order][np.minimum(idx, len(v) - 1)]
    return float(out[0]) if np.isscalar(q) else out


def zscore(values, weights=None):
    """Weighted z-standardisation (the documented pre-processing op)."""
    v = np.asarray(values, dtype=float)
    sd = weighted_sd(v, weights)
    if sd == 0:
        raise EstimationError("cannot z-score a constant column")
    return (v - weighted_mean(v, weights)) / sd


def stable_mean(values):
    """Compensated-summation mean for very long accumulations."""
    v = np.asarray(values, dtype=float)
    return math.fsum(v) / len(v)


# --- design-matrix assembly ---

def encode_factor(codes):
    """Map arbitrary labels to dense integer codes (sorted label order)."""
    codes = np.asarray(codes)
    levels, idx = np.unique(codes, return_inverse=True)
    return idx.astype(np.int64), levels


def dummies(codes, prefix, drop_first=True):
    """One-hot columns for a categorical, sorted levels, reference dropped."""
    idx, levels = encode_factor(codes)
    keep = range(1, len(levels)) if drop_first else range(len(levels))
    names, cols = [], []
    for j in keep:
        names.append(f"{prefix}[{levels[j]}]")
        cols.append((idx == j).astype(float))
    if not cols:
        return [], np.empty((len(idx), 0))
    return names, np.column_stack(cols)


def interact(codes_a, codes_b):
    """Combined factor for a x b interactions (e.g. region-by-wave FE)."""
    a = np.asarray(codes_a).astype(str)
    b = np.asarray(codes_b).astype(str)
    return np.char.add(np.char.add(a, "\x1f"), b)


class DesignBuilder:
    """Incremental named-column assembly for study regressions."""

    def __init__(self, n):
        self.n = n
        self.names = []
        self.cols = []

    def add(self, name, values):
        v = np.asarray(values, dtype=float).ravel()
        if v.shape[0] != self.n:
            raise EstimationError(f"column '{name}' has length {v.shape[0]}, expected {self.n}")
        self.names.append(name)
        self.cols.append(v)
        return self

    def add_const(self):
        return self.add("const", np.ones(self.n))

    def add_dummies(self, codes, prefix, drop_first=True):
        names, mat = dummies(codes, prefix, drop_first)
        for j, nm in enumerate(names):
            self.add(nm, mat[:, j])
        return self

    def build(self, y, weights=None, cluster=None, fixed_effects=()):
        X = np.column_stack(self.cols) if self.cols else np.empty((self.n, 0))
        return Design(y=y, X=X, names=tuple(self.names), weights=weights,
                      cluster=cluster, fixed_effects=tuple(fixed_effects))
