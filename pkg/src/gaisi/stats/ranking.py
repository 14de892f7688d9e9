"""ROC AUC with DeLong placement-value inference, and Spearman correlation.

AUC is the weighted probability of concordance with half credit for ties.
Variances and the paired comparison use DeLong's placement values; with
observation weights the placement moments are weighted and scaled by Kish
effective counts, reducing exactly to classic DeLong under unit weights.
"""

from __future__ import annotations

import numpy as np
from scipy import stats as sps

from ..errors import EstimationError


def _placements(anchor_scores, other_scores, other_weights):
    """For each anchor score: weighted share of `other` strictly below + half ties."""
    order = np.argsort(other_scores, kind="stable")
    s = other_scores[order]
    cw = np.concatenate([[0.0], np.cumsum(other_weights[order])])
    total = cw[-1]
    lo = np.searchsorted(s, anchor_scores, side="left")
    hi = np.searchsorted(s, anchor_scores, side="right")
    return (cw[lo] + 0.5 * (cw[hi] - cw[lo])) / total


def _weighted_moments(values, weights):
    wsum = weights.sum()
    mean = float(np.sum(weights * values) / wsum)
    n_eff = wsum ** 2 / np.sum(weights ** 2)
    if n_eff <= 1:
        return mean, np.nan, n_eff
    var = float(np.sum(weights * (values - mean) ** 2) / wsum) * n_eff / (n_eff - 1)
    return mean, var, n_eff


def _split(scores, labels, weights):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if weights is None:
        weights = np.ones(len(scores))
    weights = np.asarray(weights, dtype=float)
    pos = labels == 1
    neg = labels == 0
    if not pos.any() or not neg.any():
        raise EstimationError("AUC needs both outcome classes present")
    return scores[pos], weights[pos], scores[neg], weights[neg]


def auc(scores, labels, weights=None):
    """Weighted AUC with a DeLong standard error.

    Returns {"auc", "se", "n_pos", "n_neg"}; se is NaN when either class has a
    single member.
    """
    sp, wp, sn, wn = _split(scores, labels, weights)
    v10 = _placements(sp, sn, wn)          # per-positive concordance vs negatives
    v01 = 1.0 - _placements(sn, sp, wp)    # per-negative concordance vs positives
    a, s10, m_eff = _weighted_moments(v10, wp)
    _, s01, n_eff = _weighted_moments(v01, wn)
    var = np.nan
    if np.isfinite(s10) and np.isfinite(s01):
        var = s10 / m_eff + s01 / n_eff
    return {"auc": a, "se": float(np.sqrt(var)) if np.isfinite(var) else np.nan,
            "n_pos": int(len(sp)), "n_neg": int(len(sn))}


def auc_compare(scores_a, scores_b, labels, weights=None):
    """Paired DeLong test of AUC difference on the same labelled sample.

    Returns {"auc_a", "auc_b", "diff", "se", "z", "p"}. Identical scores give
    diff 0 and p = 1.
    """
    sa_p, wp, sa_n, wn = _split(scores_a, labels, weights)
    sb_p, _, sb_n, _ = _split(scores_b, labels, weights)

    v10a = _placements(sa_p, sa_n, wn)
    v10b = _placements(sb_p, sb_n, wn)
    v01a = 1.0 - _placements(sa_n, sa_p, wp)
    v01b = 1.0 - _placements(sb_n, sb_p, wp)

    auc_a, s10a, m_eff = _weighted_moments(v10a, wp)
    auc_b, s10b, _ = _weighted_moments(v10b, wp)
    _, s01a, n_eff = _weighted_moments(v01a, wn)
    _, s01b, _ = _weighted_moments(v01b, wn)

    def wcov(x, y, w, n_eff):
        wsum = w.sum()
        mx = np.sum(w * x) / wsum
        my = np.sum(w * y) / wsum
        if n_eff <= 1:
            return np.nan
        return float(np.sum(w * (x - mx) * (y - my)) / wsum) * n_eff / (n_eff - 1)

    c10 = wcov(v10a, v10b, wp, m_eff)
    c01 = wcov(v01a, v01b, wn, n_eff)
    diff = auc_a - auc_b
    var = (s10a + s10b - 2 * c10) / m_eff + (s01a + s01b - 2 * c01) / n_eff
    if not np.isfinite(var) or var <= 1e-16:
        # no placement variance in the difference: identical rankings
        z, p = 0.0, 1.0
        if abs(diff) > 1e-12 and np.isfinite(var) and var <= 1e-16:
            z, p = np.inf, 0.0
    else:
        z = diff / np.sqrt(var)
        p = float(2.0 * sps.norm.sf(abs(z)))
    return {"auc_a": auc_a, "auc_b": auc_b, "diff": diff,
            "se": float(np.sqrt(max(var, 0.0))), "z": float(z), "p": float(p)}


def midranks(values):
    """1-based ranks with ties given the average of their positions."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v))
    i = 0
    sorted_v = v[order]
    while i < len(v):
        j = i
        while j < len(v) and sorted_v[j] == sorted_v[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + j - 1) + 1
        i = j
    return ranks


def spearman(x, y):
    """Spearman rank correlation (mid-ranks) with a t-approximation p-value."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 3:
        raise EstimationError("Spearman correlation needs n >= 3")
    if len(y) != n:
        raise EstimationError("length mismatch")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise EstimationError("Spearman correlation undefined for a constant vector")
    rx, ry = midranks(x), midranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    rho = float(np.sum(rx * ry) / np.sqrt(np.sum(rx ** 2) * np.sum(ry ** 2)))
    if abs(rho) >= 1.0:
        return {"rho": float(np.sign(rho)), "p": 0.0, "n": n}
    t = rho * np.sqrt((n - 2) / (1.0 - rho ** 2))
    return {"rho": rho, "p": float(2.0 * sps.t.sf(abs(t), n - 2)), "n": n}
