"""Residual bias audit and the justification-tag regression."""

from __future__ import annotations

import numpy as np
from scipy import stats as sps

from ..errors import CollinearityError, EstimationError
from ..rater.tagging import tag_justification
from ..stats import (Design, DesignBuilder, cluster_fit, quantile_reg,
                     weighted_sd, wls_fe)
from .common import analysis_table
from .result import FAIL, NA, PASS, StudyResult, content_digest


def _fit_dropping_collinear(builder, y, weights, max_rounds=5):
    """Weighted OLS that drops named collinear columns and retries."""
    names, cols = list(builder.names), list(builder.cols)
    for _ in range(max_rounds):
        X = np.column_stack(cols)
        try:
            design = Design(y=y, X=X, names=tuple(names), weights=weights)
            return wls_fe(design), names
        except CollinearityError as exc:
            drop = [c for c in exc.columns if c != "const"]
            if not drop:
                raise
            keep = [i for i, n in enumerate(names) if n not in drop]
            names = [names[i] for i in keep]
            cols = [cols[i] for i in keep]
    raise EstimationError("could not reach a full-rank residualisation design")


def bias_audit(jobs, scores, task_ids, quantiles=(0.2, 0.8), flag_sd=0.02,
               weighted=True, expectations=None) -> StudyResult:
    """Regress index residuals (net of occupation FE and the task profile) on
    demographics at the mean and at the requested conditional quantiles."""
    t = analysis_table(jobs, scores)
    w = t["weight"] if weighted else np.ones(len(t["gaisi"]))
    order = {wid: i for i, wid in enumerate(t["worker_id"])}
    imp = np.zeros((len(order), len(task_ids)))
    for job in jobs:
        i = order.get(job.worker_id)
        if i is None:
            continue
        for j, task in enumerate(task_ids):
            imp[i, j] = job.importance.get(task, 0.0)

    b = DesignBuilder(len(w))
    b.add_const()
    b.add_dummies(t["occ2"], "occ2")
    for j, task in enumerate(task_ids):
        if np.ptp(imp[:, j]) > 0:
            b.add(f"imp_{task}", imp[:, j])
    fit0, kept = _fit_dropping_collinear(b, t["gaisi"], w)
    resid = t["gaisi"] - fit0._fitted

    bd = DesignBuilder(len(w))
    bd.add_const()
    bd.add("female", t["female"])
    bd.add("age", t["age"] - 40.0)
    bd.add("ethnic_minority", t["ethnic_minority"])
    bd.add("tertiary", (t["education"] == "tertiary").astype(float))
    demo_names = [n for n in bd.names if n != "const"]
    X = np.column_stack(bd.cols)

    res = StudyResult("bias_audit",
                      input_digests={"scores": content_digest(sorted(scores))},
                      params={"quantiles": list(quantiles), "flag_sd": flag_sd,
                              "residualisation_r2": fit0.r2})
    sd_g = weighted_sd(t["gaisi"], w)
    threshold = flag_sd * sd_g
    flags = []

    def flagged(coef, se):
        # magnitude beyond the 0.02-sd cut AND distinguishable from zero,
        # so small-sample quantile noise does not trip the audit
        return abs(coef) > threshold and (not np.isfinite(se) or abs(coef) > 1.96 * se)

    mean_fit = cluster_fit(wls_fe(Design(y=resid, X=X, names=tuple(bd.names), weights=w)),
                           t["occ3"])
    res.add_fit("mean", mean_fit)
    idx = [mean_fit.names.index(n) for n in demo_names]
    theta = mean_fit.coef[idx]
    V = mean_fit.cov[np.ix_(idx, idx)]
    try:
        chi2 = float(theta @ np.linalg.solve(V, theta))
        fstat = chi2 / len(idx)
        fp = float(sps.f.sf(fstat, len(idx), max(mean_fit.df_resid, 1)))
    except np.linalg.LinAlgError:
        fstat, fp = np.nan, np.nan
    res.add_table("joint_test_mean", ["F", "df", "p"], [[fstat, len(idx), fp]])
    flags += [(f"mean:{n}", mean_fit[n]) for n in demo_names
              if flagged(mean_fit[n], mean_fit.se_of(n))]

    for q in quantiles:
        qfit = quantile_reg(Design(y=resid, X=X, names=tuple(bd.names), weights=w), q)
        res.add_fit(f"q{int(round(q * 100))}", qfit)
        flags += [(f"q{int(round(q * 100))}:{n}", qfit[n]) for n in demo_names
                  if flagged(qfit[n], qfit.se_of(n))]

    res.add_table("flags", ["where", "coefficient", "threshold"],
                  [[name, val, threshold] for name, val in flags])
    res.expect_true("no_demographic_leakage", not flags,
                    observed=[f[0] for f in flags], target=f"|coef| <= {threshold:.5f}",
                    note="all demographic coefficients within 0.02 sd of the index")
    return res


TAG_COLUMNS = ("affordance_count", "affordance_count_sq", "integration_cue",
               "human_constraint", "limited_contribution", "uncertainty_cue",
               "contrast_cue")


def affordance_regression(ratings, expectations=None) -> StudyResult:
    """OLS of per-rating task-level exposure on justification tags."""
    ys, rows = [], []
    for r in ratings:
        d = r.distribution
        tags = tag_justification(r.justification)
        ys.append(d.p_e1 + 0.5 * (d.p_e2 + d.p_e3))
        rows.append([tags.affordance_count, tags.affordance_count ** 2,
                     float(tags.integration_cue), float(tags.human_constraint),
                     float(tags.limited_contribution), float(tags.uncertainty_cue),
                     float(tags.contrast_cue)])
    y = np.array(ys)
    M = np.array(rows, dtype=float)
    res = StudyResult("affordance_regression",
                      input_digests={"ratings": content_digest(len(ratings))},
                      params={"n": len(ratings)})
    b = DesignBuilder(len(y))
    b.add_const()
    kept = []
    for j, name in enumerate(TAG_COLUMNS):
        if np.ptp(M[:, j]) > 0:
            b.add(name, M[:, j])
            kept.append(name)
    dropped = [n for n in TAG_COLUMNS if n not in kept]
    if dropped:
        res.notes.append(f"constant tag columns dropped: {', '.join(dropped)}")
    fit, _ = _fit_dropping_collinear(b, y, np.ones(len(y)))
    res.add_fit("tags", fit)
    res.add_table("fit_stats", ["n", "r2"], [[fit.n, fit.r2 if kept else 0.0]])
    exp = expectations or {}
    if exp.get("affordance_positive"):
        obs = fit["affordance_count"] if "affordance_count" in fit.names else None
        res.expect_true("affordance_positive", obs is not None and obs > 0, obs, "> 0")
    return res
