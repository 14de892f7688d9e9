"""Pay-premium and vacancy studies on top of the FE regression kernel."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as sps

from ..corpus.battery import skill_level
from ..corpus.synthetic import GPT_RELEASE, PANDEMIC_END, PANDEMIC_START, REFERENCE_QUARTER
from ..errors import EstimationError
from ..stats import (DesignBuilder, cluster_fit, interact, weighted_mean,
                     weighted_quantile, wls_fe, zscore)
from .common import analysis_table, subset, wage_controls, wave_interactions
from .result import NA, PASS, FAIL, StudyResult, content_digest


def wage_premium(jobs, scores, weighted=True, expectations=None) -> StudyResult:
    """Log-pay regressions: continuous index x wave, and the median-split DiD.

    Specification pairs: (1) continuous GAISI and post-wave interaction with
    occupation, region-by-wave and industry-by-wave FE; (2) adds skill-level-
    by-wave FE; (3)/(4) the same with a high/low median split. The continuous
    index enters both raw and z-scored (separately fitted, labelled).
    """
    t_all = analysis_table(jobs, scores)
    mask = np.isfinite(t_all["log_pay"])
    if mask.sum() < 50:
        raise EstimationError("too few workers with pay data")
    t = subset(t_all, mask)
    w = t["weight"] if weighted else np.ones(mask.sum())
    res = StudyResult("wage_premium",
                      input_digests={"scores": content_digest(sorted(scores))},
                      params={"weighted": weighted, "n": int(mask.sum())})

    g_raw = t["gaisi"]
    g_z = zscore(g_raw, w)
    median = weighted_quantile(g_raw, 0.5, w)
    high = (g_raw > median).astype(float)
    region_wave, industry_wave = wave_interactions(t)
    skill = np.array([skill_level(o) or "unknown" for o in t["occ2"]], dtype=object)
    skill_wave = interact(skill, t["wave"])

    def run(label, exposure, extra_fe):
        b = DesignBuilder(len(w))
        b.add("exposure", exposure)
        b.add("post_x_exposure", exposure * t["post"])
        # the post main effect is absorbed by the region/industry-by-wave FE
        wage_controls(b, t)
        fes = (t["occ3"], region_wave, industry_wave) + extra_fe
        design = b.build(t["log_pay"], weights=w, fixed_effects=fes)
        fit = cluster_fit(wls_fe(design), t["occ3"])
        res.add_fit(label, fit, keep={"exposure", "post_x_exposure"})
        return fit

    fit1 = run("spec1_gaisi_raw", g_raw, ())
    run("spec1_gaisi_z", g_z, ())
    run("spec2_gaisi_raw", g_raw, (skill_wave,))
    run("spec2_gaisi_z", g_z, (skill_wave,))
    fit3 = run("spec3_high_split", high, ())
    run("spec4_high_split", high, (skill_wave,))

    res.add_table("split_info", ["quantity", "value"],
                  [["weighted_median", median], ["share_high", float(np.mean(high))]])

    exp = expectations or {}
    if "planted_did" in exp:
        est = fit1["post_x_exposure"]
        se = fit1.se_of("post_x_exposure")
        ok = abs(est - exp["planted_did"]) <= 2 * se
        res.expect("planted_did_within_2se", PASS if ok else FAIL, est,
                   exp["planted_did"], note=f"se={se:.4f}")
    else:
        res.expect("planted_did_within_2se", NA, note="no planted value supplied")
    return res


def _quarter_label(year, month):
    return f"{year}Q{(month - 1) // 3 + 1}"


def _month_key(year, month):
    return year * 12 + month - 1


def _period(year, month):
    m = _month_key(year, month)
    if m < _month_key(*PANDEMIC_START):
        return "pre"
    if m <= _month_key(*PANDEMIC_END):
        return "pandemic"
    if m < _month_key(*GPT_RELEASE):
        return "inter"
    return "post"


def vacancy_event_study(panel, exposure_shares, reference_quarter=REFERENCE_QUARTER,
                        target_quarter=None, expectations=None) -> StudyResult:
    """ln(count+1) on exposure-share-by-quarter interactions with the three FE
    families (occupation x area, area x quarter, major-occupation x quarter),
    plus the pooled broad-period variant and the pre-trend counterfactual gap.
    """
    cells = [c for c in panel if c.occ_code in exposure_shares]
    dropped = len(panel) - len(cells)
    if len(cells) < 100:
        raise EstimationError("too few panel cells with exposure shares")
    occ = np.array([c.occ_code for c in cells], dtype=object)
    area = np.array([c.area_code for c in cells], dtype=object)
    quarter = np.array([_quarter_label(c.year, c.month) for c in cells], dtype=object)
    period = np.array([_period(c.year, c.month) for c in cells], dtype=object)
    share = np.array([exposure_shares[c.occ_code] for c in cells])
    y = np.array([c.log_outcome for c in cells])
    major = np.array([c.occ_code[0] for c in cells], dtype=object)

    quarters = sorted(set(quarter))
    if reference_quarter not in quarters:
        raise EstimationError(f"reference quarter {reference_quarter} absent from the panel")

    res = StudyResult("vacancy_event_study",
                      input_digests={"panel": content_digest(len(panel))},
                      params={"reference_quarter": reference_quarter,
                              "cells_used": len(cells), "cells_dropped": dropped})

    occ_area = interact(occ, area)
    area_q = interact(area, quarter)
    major_q = interact(major, quarter)

    b = DesignBuilder(len(y))
    event_terms = []
    for q in quarters:
        if q == reference_quarter:
            continue
        name = f"share_x_{q}"
        b.add(name, share * (quarter == q))
        event_terms.append((q, name))
    design = b.build(y, fixed_effects=(occ_area, area_q, major_q))
    fit = cluster_fit(wls_fe(design), occ_area)

    coef_rows = []
    for q, name in event_terms:
        est, se = fit[name], fit.se_of(name)
        coef_rows.append([q, est, se, est - 1.96 * se, est + 1.96 * se, _period(*_parse_q(q))])
    coef_rows.append([reference_quarter, 0.0, 0.0, 0.0, 0.0,
                      _period(*_parse_q(reference_quarter))])
    coef_rows.sort(key=lambda r: r[0])
    res.add_figure("event_study", ["quarter", "coef", "se", "ci_low", "ci_high", "period"],
                   coef_rows)

    # pooled broad periods; the between-pandemic-and-GPT window is the omitted category
    if not np.any(period == "inter"):
        res.notes.append("panel has no inter period; pooled variant skipped")
        pooled_fit = None
    else:
        bp = DesignBuilder(len(y))
        for p in ("pre", "pandemic", "post"):
            if np.any(period == p):
                bp.add(f"share_x_{p}", share * (period == p))
        pooled = bp.build(y, fixed_effects=(occ_area, area_q, major_q))
        pooled_fit = cluster_fit(wls_fe(pooled), occ_area)
        res.add_fit("pooled_periods", pooled_fit)

    # counterfactual gap in the target quarter from the pre-period average slope
    target = target_quarter or quarters[-1]
    pre_coefs = [0.0 if q == reference_quarter else fit[name]
                 for q, name in event_terms + [(reference_quarter, None)]
                 if _period(*_parse_q(q)) in ("pre", "inter")]
    theta_pre = float(np.mean(pre_coefs)) if pre_coefs else 0.0
    in_target = quarter == target
    gap = None
    if in_target.any():
        fitted = fit._fitted[in_target]
        q_name = f"share_x_{target}" if target != reference_quarter else None
        theta_q = fit[q_name] if q_name else 0.0
        cf = fitted + (theta_pre - theta_q) * share[in_target]
        months = np.array([c.month for c in cells], dtype=int)[in_target]
        per_month = {}
        for m in np.unique(months):
            sel = months == m
            per_month[int(m)] = float(np.sum(np.expm1(cf[sel]) - np.expm1(fitted[sel])))
        gap = float(np.mean(list(per_month.values())))
        res.add_table("counterfactual_gap", ["target_quarter", "pre_trend_slope",
                                             "mean_monthly_gap"],
                      [[target, theta_pre, gap]])
        res.notes.append(
            "gap = mean over target-quarter months of sum over cells of "
            "expm1(fitted with pre-period average slope) - expm1(fitted)")

    exp = expectations or {}
    if "planted_post" in exp and pooled_fit is not None:
        est = pooled_fit["share_x_post"]
        se = pooled_fit.se_of("share_x_post")
        ok = abs(est - exp["planted_post"]) <= 2 * se
        res.expect("planted_post_within_2se", PASS if ok else FAIL, est,
                   exp["planted_post"], note=f"se={se:.4f}")
        implied = 1.0 - math.exp(est * 0.3)
        res.add_table("implied_effect", ["iqr_move", "postings_change"], [[0.3, -implied]])
    else:
        res.expect("planted_post_within_2se", NA, note="no planted value supplied")
    res.expect_true("reference_quarter_zero",
                    all(r[1] == 0.0 for r in coef_rows if r[0] == reference_quarter),
                    note="omitted category is exactly zero by construction")
    return res


def _parse_q(label):
    year, q = label.split("Q")
    return int(year), (int(q) - 1) * 3 + 1
