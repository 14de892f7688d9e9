"""Predictive, convergent, and design-robustness validation of the index."""

from __future__ import annotations

import numpy as np

from ..errors import EstimationError
from ..index import average_runs, bounded_gaisi, score_corpus, aggregate_worker
from ..stats import (Design, DesignBuilder, auc, auc_compare, cluster_cov, cluster_fit,
                     cv_omega, ame, glm_binary, predict_prob, spearman, weighted_mean,
                     weighted_quantile, weighted_sd, wls_fe, zscore)
from .common import analysis_table, demographic_controls, subset
from .result import FAIL, NA, PASS, StudyResult, content_digest


def _rival_arrays(t, rivals):
    """Worker-level rival columns joined by 3-digit occupation; None-safe."""
    names = sorted({name for vals in rivals.values() for name in vals})
    joined = np.full((len(t["occ3"]), len(names)), np.nan)
    for i, occ in enumerate(t["occ3"]):
        vals = rivals.get(occ)
        if vals is None:
            continue
        for j, name in enumerate(names):
            if name in vals:
                joined[i, j] = vals[name]
    return names, joined


def predictive_validity(jobs, scores, rivals=None, loo_means=None, coverage=None,
                        weighted=True, expectations=None) -> StudyResult:
    """AMEs of the exposure indices on reported AI use, AUCs, quintile margins,
    leave-one-out and occupation-mean variants, and coverage-bound AUCs."""
    t_all = analysis_table(jobs, scores, loo_means)
    mask = np.isfinite(t_all["ai_use"])
    if mask.sum() < 50:
        raise EstimationError("too few workers with an AI-use outcome")
    t = subset(t_all, mask)
    w = t["weight"] if weighted else np.ones(mask.sum())
    y = t["ai_use"]
    res = StudyResult("predictive_validity",
                      input_digests={"scores": content_digest(sorted(scores))},
                      params={"weighted": weighted, "n": int(mask.sum())})
    gz = zscore(t["gaisi"], w)

    def logit_ame(label, score_col, with_rivals, with_score=True, with_demo=True):
        b = DesignBuilder(len(y))
        b.add_const()
        if with_score:
            b.add("z_index", score_col)
        dropped = 0
        sample = np.ones(len(y), dtype=bool)
        rival_names = []
        if with_rivals:
            names, joined = _rival_arrays(t, rivals)
            sample = np.all(np.isfinite(joined), axis=1)
            dropped = int((~sample).sum())
            for j, name in enumerate(names):
                col = np.where(sample, joined[:, j], 0.0)
                b.add(f"z_{name}", np.where(sample, zscore(col[sample], w[sample]), 0.0)
                      if np.ptp(col[sample]) > 0 else col)
                rival_names.append(f"z_{name}")
        b.add("task_load", t["task_load"])
        if with_demo:
            demographic_controls(b, t)
        X = np.column_stack(b.cols)[sample]
        design = Design(y=y[sample], X=X, names=tuple(b.names), weights=w[sample])
        fit = glm_binary(design, link="logit")
        ccov = cluster_cov(fit, t["occ3"][sample])
        rows = []
        for term in (["z_index"] if with_score else []) + rival_names:
            a = ame(fit, term, cov=ccov)
            rows.append([term, a["ame"], a["se"], a["z"], a["p"]])
        res.add_table(label, ["term", "ame", "se", "z", "p"], rows)
        if dropped:
            res.notes.append(f"{label}: {dropped} workers dropped for missing rival indices")
        return fit, rows

    _, rows1 = logit_ame("model1_gaisi", gz, with_rivals=False, with_demo=False)
    _, rows2 = logit_ame("model2_gaisi_demo", gz, with_rivals=False)
    if rivals:
        logit_ame("model3_rivals", None, with_rivals=True, with_score=False)
        logit_ame("model4_gaisi_rivals", gz, with_rivals=True)

    headline = auc(t["gaisi"], y, w)
    res.add_table("auc", ["index", "auc", "se"],
                  [["gaisi", headline["auc"], headline["se"]]])

    # quintile probit margins
    cuts = weighted_quantile(t["gaisi"], np.array([0.2, 0.4, 0.6, 0.8]), w)
    quintile = 1 + np.searchsorted(cuts, t["gaisi"], side="left")
    b = DesignBuilder(len(y))
    b.add_const()
    for q in (2, 3, 4, 5):
        b.add(f"q{q}", (quintile == q).astype(float))
    demographic_controls(b, t)
    design = Design(y=y, X=np.column_stack(b.cols), names=tuple(b.names), weights=w)
    try:
        pfit = glm_binary(design, link="probit")
        margin_rows = []
        Xbase = np.column_stack(b.cols)
        qcols = {q: b.names.index(f"q{q}") for q in (2, 3, 4, 5)}
        for q in (1, 2, 3, 4, 5):
            Xq = Xbase.copy()
            for qq, idx in qcols.items():
                Xq[:, idx] = 1.0 if qq == q else 0.0
            margin_rows.append([q, float(np.sum(w * predict_prob(pfit, Xq)) / w.sum())])
        res.add_figure("quintile_margins", ["quintile", "predicted_ai_use"], margin_rows)
    except EstimationError as exc:
        res.notes.append(f"quintile probit skipped: {exc}")

    # leave-one-out and occupation-mean variants
    if loo_means:
        lmask = np.isfinite(t["loo_gaisi"])
        if lmask.sum() > 50 and np.ptp(t["loo_gaisi"][lmask]) > 0:
            tloo = subset(t, lmask)
            b = DesignBuilder(int(lmask.sum()))
            b.add_const()
            b.add("z_index", zscore(tloo["loo_gaisi"], tloo["weight"]))
            b.add("task_load", tloo["task_load"])
            demographic_controls(b, tloo)
            fit = glm_binary(Design(y=tloo["ai_use"], X=np.column_stack(b.cols),
                                    names=tuple(b.names), weights=tloo["weight"]))
            a = ame(fit, "z_index", cov=cluster_cov(fit, tloo["occ3"]))
            res.add_table("loo_variant", ["term", "ame", "se", "z", "p"],
                          [["z_loo_gaisi", a["ame"], a["se"], a["z"], a["p"]]])
    occ_mean = {}
    for occ in np.unique(t["occ3"]):
        m = t["occ3"] == occ
        occ_mean[occ] = weighted_mean(t["gaisi"][m], w[m])
    om = np.array([occ_mean[o] for o in t["occ3"]])
    if np.ptp(om) > 0:
        b = DesignBuilder(len(y))
        b.add_const()
        b.add("z_index", zscore(om, w))
        b.add("task_load", t["task_load"])
        demographic_controls(b, t)
        fit = glm_binary(Design(y=y, X=np.column_stack(b.cols), names=tuple(b.names), weights=w))
        a = ame(fit, "z_index", cov=cluster_cov(fit, t["occ3"]))
        res.add_table("occupation_mean_variant", ["term", "ame", "se", "z", "p"],
                      [["z_occ_mean_gaisi", a["ame"], a["se"], a["z"], a["p"]]])

    # coverage-bound sensitivity: unseen tasks all resilient vs all exposed
    if coverage and coverage.get("worker_share"):
        share = np.array([coverage["worker_share"].get(wid, np.nan)
                          if coverage["worker_share"].get(wid) is not None else np.nan
                          for wid in t["worker_id"]])
        bmask = np.isfinite(share)
        if bmask.sum() > 50:
            lo = np.array([bounded_gaisi(g, s)[0] for g, s in zip(t["gaisi"][bmask], share[bmask])])
            hi = np.array([bounded_gaisi(g, s)[1] for g, s in zip(t["gaisi"][bmask], share[bmask])])
            yb, wb = y[bmask], w[bmask]
            rows = []
            for name, idx in (("lower_bound", lo), ("upper_bound", hi)):
                a_ = auc(idx, yb, wb)
                cmp_ = auc_compare(t["gaisi"][bmask], idx, yb, wb)
                rows.append([name, a_["auc"], a_["se"], cmp_["p"]])
            res.add_table("coverage_bounds", ["index", "auc", "se", "p_vs_headline"], rows)

    exp = expectations or {}
    if "auc_min" in exp:
        res.expect_true("auc_min", headline["auc"] >= exp["auc_min"],
                        headline["auc"], exp["auc_min"])
    res.expect_true("ame_computed", bool(rows1), note="model 1 produced an AME")
    return res


def convergent_validity(jobs, scores, rivals, weighted=True, expectations=None) -> StudyResult:
    """Spearman table against rival indices and the multivariate z-score regression."""
    t = analysis_table(jobs, scores)
    w = t["weight"] if weighted else np.ones(len(t["gaisi"]))
    names, joined = _rival_arrays(t, rivals)
    res = StudyResult("convergent_validity",
                      input_digests={"scores": content_digest(sorted(scores))},
                      params={"rivals": names, "weighted": weighted})
    rows = []
    for j, name in enumerate(names):
        mask = np.isfinite(joined[:, j])
        if mask.sum() < 3 or np.ptp(joined[mask, j]) == 0:
            rows.append([name, None, None, int(mask.sum())])
            continue
        sp = spearman(t["gaisi"][mask], joined[mask, j])
        rows.append([name, sp["rho"], sp["p"], sp["n"]])
    res.add_table("spearman", ["rival", "rho", "p", "n"], rows)

    mask = np.all(np.isfinite(joined), axis=1)
    if mask.sum() > len(names) + 5:
        b = DesignBuilder(int(mask.sum()))
        b.add_const()
        usable = []
        for j, name in enumerate(names):
            col = joined[mask, j]
            if np.ptp(col) > 0:
                b.add(f"z_{name}", zscore(col, w[mask]))
                usable.append(name)
        design = b.build(zscore(t["gaisi"][mask], w[mask]), weights=w[mask])
        fit = cluster_fit(wls_fe(design), t["occ3"][mask])
        res.add_fit("multivariate", fit)
    exp = expectations or {}
    if "rho_min" in exp:
        for name, target in exp["rho_min"].items():
            obs = next((r[1] for r in rows if r[0] == name), None)
            res.expect_true(f"rho_min_{name}", obs is not None and obs >= target, obs, target)
    return res


def robustness_matrix(variants, jobs, reference, omega=0.5, weighted=True,
                      missing_policy="exclude", expectations=None) -> StudyResult:
    """Table C.5-style harness over rating-set variants.

    variants: {name: rating records}; `reference` names the benchmark variant.
    Per variant: weighted moments of the index, Spearman rank correlation with
    the reference, AUC against reported AI use, and the paired AUC test.
    """
    if reference not in variants:
        raise EstimationError(f"reference variant '{reference}' missing")
    jobs = list(jobs)
    scored = {}
    for name, ratings in variants.items():
        cells = average_runs(ratings)
        sc = {}
        for job in jobs:
            try:
                sc[job.worker_id] = aggregate_worker(job, cells, missing_policy, omega)
            except Exception:
                continue
        scored[name] = sc
    ref_scores = scored[reference]
    res = StudyResult("robustness_matrix",
                      input_digests={name: content_digest(len(r)) for name, r in variants.items()},
                      params={"reference": reference, "omega": omega})

    rows = []
    for name in sorted(scored):
        t = analysis_table(jobs, scored[name])
        w = t["weight"] if weighted else np.ones(len(t["gaisi"]))
        common = sorted(set(scored[name]) & set(ref_scores))
        g_v = np.array([scored[name][wid].gaisi for wid in common])
        g_r = np.array([ref_scores[wid].gaisi for wid in common])
        if name == reference:
            rho = 1.0
        elif len(common) >= 3 and np.ptp(g_v) > 0 and np.ptp(g_r) > 0:
            rho = spearman(g_v, g_r)["rho"]
        else:
            rho = None
        amask = np.isfinite(t["ai_use"])
        auc_v = auc_p = auc_se = None
        if amask.sum() > 10 and len(np.unique(t["ai_use"][amask])) == 2:
            a_ = auc(t["gaisi"][amask], t["ai_use"][amask], w[amask])
            auc_v, auc_se = a_["auc"], a_["se"]
            ref_t = analysis_table(jobs, ref_scores)
            ids = {wid: i for i, wid in enumerate(ref_t["worker_id"])}
            sel = [i for i, wid in enumerate(t["worker_id"])
                   if amask[i] and wid in ids]
            g_ref_aligned = np.array([ref_t["gaisi"][ids[t["worker_id"][i]]] for i in sel])
            g_var_aligned = np.array([t["gaisi"][i] for i in sel])
            y_aligned = np.array([t["ai_use"][i] for i in sel])
            w_aligned = np.array([w[i] for i in sel])
            cmp_ = auc_compare(g_ref_aligned, g_var_aligned, y_aligned, w_aligned)
            auc_p = cmp_["p"]
        rows.append([name, weighted_mean(t["gaisi"], w), weighted_sd(t["gaisi"], w),
                     weighted_quantile(t["gaisi"], 0.2, w),
                     weighted_quantile(t["gaisi"], 0.8, w),
                     rho, auc_v, auc_se, auc_p])
    res.add_table("variants", ["variant", "mean", "sd", "p20", "p80",
                               "spearman_vs_reference", "auc_ai_use", "auc_se",
                               "p_auc_vs_reference"], rows)

    exp = expectations or {}
    for name, target in exp.get("rho_min", {}).items():
        obs = next((r[5] for r in rows if r[0] == name), None)
        res.expect_true(f"rho_min_{name}", obs is not None and obs >= target, obs, target)
    for name, target in exp.get("rho_max", {}).items():
        obs = next((r[5] for r in rows if r[0] == name), None)
        res.expect_true(f"rho_max_{name}", obs is not None and obs <= target, obs, target)
    return res


def cv_omega_study(jobs, scores, folds=5, seed=0, weighted=True,
                   expectations=None) -> StudyResult:
    """Cross-validation of the latent-exposure weight on the adoption outcome."""
    t_all = analysis_table(jobs, scores)
    mask = np.isfinite(t_all["ai_use"])
    t = subset(t_all, mask)
    w = t["weight"] if weighted else np.ones(int(mask.sum()))
    controls = np.column_stack([t["task_load"], t["female"], t["age"] - 40.0])
    out = cv_omega(t["e1"], t["e2e3"], t["ai_use"], controls=controls,
                   control_names=("task_load", "female", "age"),
                   weights=w, folds=folds, seed=seed)
    res = StudyResult("cv_omega",
                      input_digests={"scores": content_digest(sorted(scores))},
                      params={"folds": folds, "seed": seed, "n": int(mask.sum())})
    rows = [[f["fold"], f["beta1"], f["se1"], f["beta2"], f["se2"],
             f["w2"], f["w2_se"], f["auc_derived"], f["auc_canonical"]]
            for f in out["folds"]]
    res.add_table("folds", ["fold", "beta1", "se1", "beta2", "se2", "w2", "w2_se",
                            "auc_derived", "auc_canonical"], rows)
    res.add_table("summary", ["w2_mean", "w2_sd", "n_defined"],
                  [[out["w2_mean"], out["w2_sd"], out["n_defined"]]])
    exp = expectations or {}
    if "w2_range" in exp and out["w2_mean"] is not None:
        lo, hi = exp["w2_range"]
        res.expect_true("w2_in_range", lo <= out["w2_mean"] <= hi, out["w2_mean"], (lo, hi))
    return res
