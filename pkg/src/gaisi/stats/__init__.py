"""Numerical-statistics kernel: weighted OLS with absorbed FE, cluster-robust
covariance, binary GLMs with marginal effects, AUC/DeLong, Spearman, quantile
regression, KDE, and cross-validation of the latent-exposure weight.

All routines are pure and deterministic given input order; reductions use
fixed-order numpy summation.
"""

from .crossval import cv_omega
from .density import kde, silverman_bandwidth
from .design import (Design, DesignBuilder, FitResult, check_psd, dummies, encode_factor,
                     interact, stable_mean, weighted_mean, weighted_quantile,
                     weighted_sd, zscore)
from .glm import ame, glm_binary, predict_prob
from .linear import cluster_cov, cluster_fit, hc1_cov, wls_fe
from .quantile import check_loss, quantile_reg
from .ranking import auc, auc_compare, midranks, spearman

__all__ = [
    "cv_omega", "kde", "silverman_bandwidth",
    "Design", "DesignBuilder", "FitResult", "check_psd", "dummies", "encode_factor",
    "interact", "stable_mean", "weighted_mean", "weighted_quantile", "weighted_sd", "zscore",
    "ame", "glm_binary", "predict_prob",
    "cluster_cov", "cluster_fit", "hc1_cov", "wls_fe",
    "check_loss", "quantile_reg",
    "auc", "auc_compare", "midranks", "spearman",
]
