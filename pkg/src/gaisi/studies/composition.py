"""Distribution mapping, the two-wave shift-share split, and demographic gaps."""

from __future__ import annotations

import numpy as np

from ..corpus.battery import skill_level
from ..errors import EstimationError
from ..stats import (Design, DesignBuilder, cluster_fit, kde, spearman,
                     weighted_mean, weighted_quantile, weighted_sd, wls_fe)
from .common import analysis_table, demographic_controls, subset
from .result import FAIL, NA, PASS, StudyResult, content_digest


def _weighted_cdf(values, weights):
    order = np.argsort(values, kind="stable")
    v = values[order]
    cw = np.cumsum(weights[order]) / weights.sum()
    grid, idx = np.unique(v, return_index=True)
    # cdf at each unique value = cumulative weight through its last occurrence
    last = np.append(idx[1:], len(v)) - 1
    return grid, cw[last]


def distribution_study(jobs, scores, weighted=True, any_threshold=0.0,
                       high_threshold=0.5, min_n=10, expectations=None) -> StudyResult:
    """Weighted CDF and KDEs of the index, exposure shares, and occupation means."""
    t = analysis_table(jobs, scores)
    w = t["weight"] if weighted else np.ones(len(t["gaisi"]))
    g = t["gaisi"]
    res = StudyResult("distribution",
                      input_digests={"scores": content_digest(sorted(scores))},
                      params={"weighted": weighted, "any_threshold": any_threshold,
                              "high_threshold": high_threshold, "min_n": min_n})

    grid, cdf = _weighted_cdf(g, w)
    res.add_figure("gaisi_cdf", ["gaisi", "cdf"], np.column_stack([grid, cdf]))
    any_share = float(np.sum(w * (g > any_threshold)) / w.sum())
    high_share = float(np.sum(w * (g > high_threshold)) / w.sum())

    summary_rows = []
    for name in ("e1", "e2e3", "gaisi"):
        v = t[name]
        summary_rows.append([name, weighted_mean(v, w), weighted_sd(v, w),
                             weighted_quantile(v, 0.1, w), weighted_quantile(v, 0.9, w)])
    res.add_table("summary", ["component", "mean", "sd", "p10", "p90"], summary_rows)
    res.add_table("shares", ["quantity", "value"],
                  [["any_exposure_share", any_share], ["above_half_share", high_share]])

    for name in ("e1", "e2e3", "gaisi"):
        if np.ptp(t[name]) > 0:
            k = kde(t[name], weights=w)
            res.add_figure(f"kde_{name}", ["x", "density"],
                           np.column_stack([k["grid"], k["density"]]))

    levels = {}
    for code in np.unique(t["occ2"]):
        lvl = skill_level(code)
        if lvl is not None:
            levels.setdefault(lvl, []).append(code)
    skill_rows = []
    for lvl in ("High", "Mid-High", "Mid-Low", "Low"):
        if lvl not in levels:
            continue
        mask = np.isin(t["occ2"], levels[lvl])
        skill_rows.append([lvl, weighted_mean(g[mask], w[mask]), int(mask.sum())])
    if skill_rows:
        res.add_table("skill_levels", ["skill_level", "mean_gaisi", "n"], skill_rows)
    else:
        res.notes.append("no occupation codes matched the SOC skill-level map")

    occ_rows = []
    for code in np.unique(t["occ3"]):
        mask = t["occ3"] == code
        if mask.sum() > min_n:
            occ_rows.append([str(code), weighted_mean(g[mask], w[mask]), int(mask.sum())])
    occ_rows.sort(key=lambda r: -r[1])
    res.add_table("top_occupations", ["occ_code", "mean_gaisi", "n"], occ_rows[:3])
    res.add_table("bottom_occupations", ["occ_code", "mean_gaisi", "n"], occ_rows[-3:])

    mean_identity = weighted_mean(t["e1"], w) + scores[next(iter(scores))].omega * weighted_mean(t["e2e3"], w)
    res.expect_close("omega_combination_consistency", weighted_mean(g, w), mean_identity, 1e-9,
                     note="mean gaisi equals mean e1 + omega * mean e2e3")
    res.expect_true("cdf_monotone", bool(np.all(np.diff(cdf) >= -1e-12)), note="CDF non-decreasing")
    for name, target in (expectations or {}).items():
        if name == "any_share_min":
            res.expect_true("any_share_min", any_share >= target, any_share, target)
        elif name == "above_half_max":
            res.expect_true("above_half_max", high_share <= target, high_share, target)
    return res


def shift_share(jobs, scores_t0, scores_t1, digit_depth=3, weighted=True,
                expectations=None) -> StudyResult:
    """Midpoint decomposition of the two-wave index change into within and between.

    scores_t0/scores_t1: worker_id -> GaisiScore per wave. Occupations present
    in only one wave take the other wave's mean (between term only), flagged.
    """
    waves = ("2017", "2023-24")
    per_wave = []
    for wave, sc in zip(waves, (scores_t0, scores_t1)):
        t = analysis_table([j for j in jobs if j.wave == wave], sc)
        w = t["weight"] if weighted else np.ones(len(t["gaisi"]))
        occ = t["occ3"] if digit_depth == 3 else np.array([o[:digit_depth] for o in t["occ3"]], dtype=object)
        shares, means = {}, {}
        total_w = w.sum()
        for code in np.unique(occ):
            mask = occ == code
            shares[str(code)] = float(w[mask].sum() / total_w)
            means[str(code)] = weighted_mean(t["gaisi"][mask], w[mask])
        per_wave.append((shares, means))
    (s0, g0), (s1, g1) = per_wave
    codes = sorted(set(s0) | set(s1))
    imputed = []
    rows, within, between = [], 0.0, 0.0
    for code in codes:
        sh0, sh1 = s0.get(code, 0.0), s1.get(code, 0.0)
        if code not in g0 or code not in g1:
            imputed.append(code)
        m0 = g0.get(code, g1.get(code))
        m1 = g1.get(code, g0.get(code))
        within += 0.5 * (sh0 + sh1) * (m1 - m0)
        between += 0.5 * (m0 + m1) * (sh1 - sh0)
        rows.append([code, sh0, sh1, m0, m1, code in set(imputed)])
    total = sum(s1[c] * g1[c] for c in s1) - sum(s0[c] * g0[c] for c in s0)

    res = StudyResult("shift_share",
                      input_digests={"scores_t0": content_digest(sorted(scores_t0)),
                                     "scores_t1": content_digest(sorted(scores_t1))},
                      params={"digit_depth": digit_depth, "weighted": weighted})
    res.add_table("decomposition", ["component", "value"],
                  [["total_change", total], ["within", within], ["between", between]])
    res.add_table("occupations", ["occ_code", "share_t0", "share_t1",
                                  "mean_t0", "mean_t1", "imputed"], rows)
    if imputed:
        res.notes.append(f"one-wave occupations took the other wave's mean: {', '.join(imputed)}")

    scatter = [[c, g0[c], s1.get(c, 0.0) - s0.get(c, 0.0)] for c in codes if c in g0]
    res.add_figure("growth_vs_exposure", ["occ_code", "mean_t0", "share_change"], scatter)
    if len(scatter) >= 3:
        xs = np.array([r[1] for r in scatter])
        ys = np.array([r[2] for r in scatter])
        if np.ptp(xs) > 0 and np.ptp(ys) > 0:
            sp = spearman(xs, ys)
            res.add_table("exposure_growth_correlation", ["rho", "p", "n"],
                          [[sp["rho"], sp["p"], sp["n"]]])
    res.expect_close("decomposition_identity", within + between, total, 1e-10,
                     note="within + between equals the total change")
    for name, target in (expectations or {}).items():
        if name == "within_abs_max":
            res.expect_true("within_abs_max", abs(within) <= target, within, target)
    return res


def group_gaps(jobs, scores, weighted=True) -> StudyResult:
    """Demographic gaps in the index, with and without occupation fixed effects."""
    t = analysis_table(jobs, scores)
    w = t["weight"] if weighted else np.ones(len(t["gaisi"]))
    res = StudyResult("group_gaps", input_digests={"scores": content_digest(sorted(scores))},
                      params={"weighted": weighted})

    rows = []
    for label, mask in [("female", t["female"] == 1), ("male", t["female"] == 0),
                        ("ethnic_minority", t["ethnic_minority"] == 1)]:
        if mask.any():
            rows.append([label, weighted_mean(t["gaisi"][mask], w[mask]), int(mask.sum())])
    for band in np.unique(t["age_band"]):
        mask = t["age_band"] == band
        rows.append([f"age {band}", weighted_mean(t["gaisi"][mask], w[mask]), int(mask.sum())])
    for edu in np.unique(t["education"]):
        mask = t["education"] == edu
        rows.append([f"edu {edu}", weighted_mean(t["gaisi"][mask], w[mask]), int(mask.sum())])
    res.add_table("group_means", ["group", "mean_gaisi", "n"], rows)

    def build(with_fe):
        b = DesignBuilder(len(w))
        if not with_fe:
            b.add_const()
        b.add("female", t["female"])
        b.add_dummies(t["age_band"], "age_band")
        b.add_dummies(t["education"], "edu")
        b.add("ethnic_minority", t["ethnic_minority"])
        b.add("post", t["post"])
        base_names = [n for n in b.names if n not in ("const", "post")]
        snapshot = {n: c for n, c in zip(b.names, b.cols)}
        for name in base_names:
            b.add(f"post_x_{name}", snapshot[name] * t["post"])
        fes = (t["occ3"],) if with_fe else ()
        return b.build(t["gaisi"], weights=w, fixed_effects=fes), base_names

    for label, with_fe in (("no_fe", False), ("occ_fe", True)):
        design, base_names = build(with_fe)
        fit = cluster_fit(wls_fe(design), t["occ3"])
        res.add_fit(f"gaps_{label}", fit)
        inter = [n for n in fit.names if n.startswith("post_x_")]
        idx = [fit.names.index(n) for n in inter]
        theta = fit.coef[idx]
        V = fit.cov[np.ix_(idx, idx)]
        try:
            stat = float(theta @ np.linalg.solve(V, theta))
            df = len(idx)
            from scipy import stats as sps
            p = float(sps.chi2.sf(stat, df))
        except np.linalg.LinAlgError:
            stat, df, p = np.nan, len(idx), np.nan
        res.add_table(f"joint_wave_interactions_{label}", ["chi2", "df", "p"],
                      [[stat, df, p]])
    return res
