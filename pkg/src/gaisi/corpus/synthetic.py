"""Seeded synthetic corpora with planted effects.

The generator plants, in this order: smooth occupation/task exposure
propensities that become true cell-level distributions; per-run rating noise
around those cells; worker task-importance profiles; an adoption outcome drawn
from a logit on the true worker-level exposure shares; a wage equation with a
level and a wave-interaction coefficient on the true index; an hours equation
linear in task load; and a vacancy panel whose log(count+1) responds to the
occupation high-exposure share with period-specific slopes. Every quantity a
test may want to check recovery against is returned in Corpus.truth.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError
from .battery import DEFAULT_BATTERY, SOC2010_SUBMAJOR
from .types import (Corpus, ExposureDistribution, JobRecord, OccupationVignette,
                    PanelCell, RatingRecord, SyntheticConfig, SyntheticTruth, TaskItem)

# Calendar anchors for the vacancy DGP and studies (year, month).
PANDEMIC_START = (2020, 3)
PANDEMIC_END = (2021, 6)
GPT_RELEASE = (2022, 12)
REFERENCE_QUARTER = "2022Q3"

EDUCATION_LEVELS = ("below_secondary", "secondary", "upper_secondary", "tertiary")
AGE_BANDS = ((20, 29), (30, 39), (40, 49), (50, 59), (60, 65))

# Softmax intercepts calibrated so the grand means sit near (0.50, 0.25, 0.24, 0.01).
# Direct exposure responds to the first propensity dimension, latent exposure to
# the second, so the two worker-level components stay separately identifiable.
_LEVEL_INTERCEPTS = np.array([0.75, 0.00, -0.05, -3.10])
_S1_SLOPES = np.array([-0.35, 0.55, 0.00, 0.00])
_S2_SLOPES = np.array([-0.35, 0.00, 0.50, 0.30])


def _month_index(year, month):
    return year * 12 + (month - 1)


def period_of(year, month):
    """Broad-period label for a calendar month: pre / pandemic / inter / post."""
    m = _month_index(year, month)
    if m < _month_index(*PANDEMIC_START):
        return "pre"
    if m <= _month_index(*PANDEMIC_END):
        return "pandemic"
    if m < _month_index(*GPT_RELEASE):
        return "inter"
    return "post"


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _cell_means(rng, occ2_codes, task_ids, cfg):
    """True per-cell distributions from two-dimensional propensities.

    Returns (means, theta_total) where means has shape (n_occ2, n_tasks, 4)
    and theta_total is each occupation's overall exposure propensity.
    """
    theta = rng.normal(0.0, cfg.occ_spread, (2, len(occ2_codes)))
    phi = rng.normal(0.0, cfg.task_spread, (2, len(task_ids)))
    s1 = theta[0][:, None] + phi[0][None, :]
    s2 = theta[1][:, None] + phi[1][None, :]
    z = (_LEVEL_INTERCEPTS[None, None, :]
         + _S1_SLOPES[None, None, :] * s1[:, :, None]
         + _S2_SLOPES[None, None, :] * s2[:, :, None])
    return _softmax(z), theta.sum(axis=0)


def justification_for(dist, uncertain=False):
    """Deterministic justification text whose keywords track the distribution.

    Gives the lexicon tagger signal that correlates with the rated exposure,
    mirroring how rater explanations ground their numerical scores.
    """
    p0, p1, p2, p3 = dist
    parts = []
    if p1 >= 0.25:
        parts.append("An assistant could draft much of the written output and the model can "
                     "retrieve relevant knowledge on demand.")
    if p1 >= 0.40:
        parts.append("It can also analyse the information involved and help plan the work.")
    if p2 >= 0.25:
        parts.append("Most of the remaining gain needs integration with existing software systems.")
    if p3 >= 0.10:
        parts.append("Image recognition of visual material would unlock further savings.")
    if p0 >= 0.55:
        parts.append("The task requires physical presence and manual dexterity, so the "
                     "contribution would be limited.")
    elif p0 >= 0.40:
        parts.append("Face-to-face elements constrain how much time can be saved.")
    if uncertain or max(p0, p1, p2 + p3) < 0.45:
        parts.append("It is uncertain how much of the task this covers; however, some steps clearly qualify.")
    if not parts:
        parts.append("Savings are plausible but modest for this activity.")
    return " ".join(parts)


def _make_ratings(rng, occ2_codes, task_ids, means, cfg):
    """Per-run records: logits of the true cell means plus run noise, re-softmaxed."""
    records = []
    log_means = np.log(np.clip(means, 1e-9, None))
    run_effects = rng.normal(0.0, cfg.rater_run_sd, (cfg.runs_per_cell, 4))
    for gi, occ in enumerate(occ2_codes):
        for ti, task in enumerate(task_ids):
            base = log_means[gi, ti]
            for run in range(1, cfg.runs_per_cell + 1):
                noise = rng.normal(0.0, cfg.rater_noise_sd, 4) if cfg.rater_noise_sd > 0 else 0.0
                p = _softmax(base + run_effects[run - 1] + noise)
                dist = ExposureDistribution(*np.round(p, 10))
                records.append(RatingRecord(
                    occ_code=occ, task_id=task, run_index=run, distribution=dist,
                    justification=justification_for(dist.as_tuple()),
                    model_id="synthetic", prompt_id="planted", temperature=0.2,
                ))
    return records


def _weighted_quantile(values, weights, q):
    order = np.argsort(values, kind="stable")
    cw = np.cumsum(weights[order])
    idx = np.searchsorted(cw, q * cw[-1], side="left")
    return values[order][min(idx, len(values) - 1)]


def generate_synthetic(config: SyntheticConfig) -> Corpus:
    """Deterministic corpus for the given config; identical config => identical corpus."""
    cfg = config
    rng = np.random.default_rng(cfg.seed)

    occ2 = [code for code, _ in SOC2010_SUBMAJOR[:cfg.n_occ2]]
    titles = {code: title for code, title in SOC2010_SUBMAJOR[:cfg.n_occ2]}
    occ3 = [f"{g}{c + 1}" for g in occ2 for c in range(cfg.children_per_occ2)]
    tasks = [TaskItem(*row) for row in DEFAULT_BATTERY[:cfg.n_tasks]]
    task_ids = [t.task_id for t in tasks]

    vignettes = [
        OccupationVignette(
            occ_code=g,
            title=titles[g],
            narrative=(
                f"{titles[g]} plan, coordinate and deliver the core work of their field. "
                f"A typical week mixes desk-based preparation, record keeping and "
                f"communication with hands-on delivery, using the standard tools and "
                f"software of group {g} workplaces."
            ),
        )
        for g in occ2
    ]

    means, theta = _cell_means(rng, occ2, task_ids, cfg)
    ratings = _make_ratings(rng, occ2, task_ids, means, cfg)

    # --- workers ---
    n = cfg.n_workers
    occ3_idx = rng.integers(0, len(occ3), n)
    occ2_idx = occ3_idx // cfg.children_per_occ2
    post = rng.random(n) < 0.5
    female = (rng.random(n) < 0.5).astype(int)
    age = rng.integers(20, 66, n)
    minority = (rng.random(n) < 0.12).astype(int)
    edu_idx = rng.choice(len(EDUCATION_LEVELS), n, p=[0.15, 0.30, 0.30, 0.25])
    region = rng.integers(1, 7, n)
    industry = rng.integers(1, 6, n)
    full_time = (rng.random(n) < 0.8).astype(int)
    self_emp = (rng.random(n) < 0.12).astype(int)
    # rounded once so file values and planted truth use the same weights
    weight = np.round(np.exp(rng.normal(0.0, 0.3, n)), 6)
    digital = np.clip(0.5 + 0.25 * np.tanh(theta[occ2_idx]) + rng.normal(0, 0.15, n), 0.0, 1.0)

    # importance profiles: occupation-task affinity plus worker noise, cut to the grid
    affinity = rng.normal(0.0, 0.8, (cfg.n_occ2, cfg.n_tasks))
    z = affinity[occ2_idx] + rng.normal(0.0, 1.0, (n, cfg.n_tasks))
    grid_vals = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    cuts = np.array([-1.2, -0.4, 0.2, 0.8])
    imp = grid_vals[np.searchsorted(cuts, z)]
    asked = rng.random((n, cfg.n_tasks)) >= cfg.missing_task_rate
    imp_masked = np.where(asked, imp, 0.0)

    load = imp_masked.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        shares = np.where(load[:, None] > 0, imp_masked / np.where(load > 0, load, 1.0)[:, None], 0.0)
    # true exposure shares: weighted mean of the worker's occupation-group cells
    level_shares = np.einsum("nt,ntl->nl", shares, means[occ2_idx])
    e1_true = level_shares[:, 1]
    e23_true = level_shares[:, 2] + level_shares[:, 3]
    gaisi_true = e1_true + 0.5 * e23_true

    # adoption (asked only in the later wave)
    logits = (cfg.adoption_beta0 + cfg.adoption_beta1 * e1_true + cfg.adoption_beta2 * e23_true
              + cfg.adoption_female_shift * female)
    ai_use = (rng.random(n) < 1.0 / (1.0 + np.exp(-logits))).astype(int)

    # wages: occupation pay level correlated with exposure propensity, absorbed by FE
    occ3_wage = np.repeat(0.30 * theta, cfg.children_per_occ2) + rng.normal(0.0, 0.10, len(occ3))
    region_wave = rng.normal(0.0, 0.05, (7, 2))
    industry_wave = rng.normal(0.0, 0.05, (6, 2))
    edu_fx = np.array([-0.08, 0.0, 0.05, 0.15])
    log_pay = (cfg.wage_base
               + cfg.wage_gaisi * gaisi_true
               + cfg.wage_did * gaisi_true * post
               + occ3_wage[occ3_idx]
               + region_wave[region - 1, post.astype(int)]
               + industry_wave[industry - 1, post.astype(int)]
               + edu_fx[edu_idx]
               + 0.10 * full_time
               + 0.004 * (age - 40) - 0.0002 * (age - 40) ** 2
               + rng.normal(0.0, cfg.wage_noise_sd, n))

    hours = np.maximum(1.0, cfg.hours_intercept + cfg.hours_per_load * load
                       + rng.normal(0.0, cfg.hours_noise_sd, n))

    pad = len(str(n))
    jobs = []
    for i in range(n):
        band = next(f"{lo}-{hi}" for lo, hi in AGE_BANDS if lo <= age[i] <= hi)
        importance = {task_ids[t]: float(imp[i, t]) for t in range(cfg.n_tasks) if asked[i, t]}
        jobs.append(JobRecord(
            worker_id=f"w{i + 1:0{pad}d}",
            wave="2023-24" if post[i] else "2017",
            occ_code=occ3[occ3_idx[i]],
            survey_weight=float(weight[i]),
            female=int(female[i]),
            age=int(age[i]),
            age_band=band,
            ethnic_minority=int(minority[i]),
            education=EDUCATION_LEVELS[edu_idx[i]],
            region=f"R{region[i]}",
            industry=f"I{industry[i]}",
            full_time=int(full_time[i]),
            self_employed=int(self_emp[i]),
            digital_use=float(np.round(digital[i], 6)),
            ai_use=int(ai_use[i]) if post[i] else None,
            log_hourly_pay=float(np.round(log_pay[i], 6)),
            usual_hours=float(np.round(hours[i], 6)),
            importance=importance,
        ))

    # occupation high-exposure shares from the planted index (top 20%, weighted)
    cut = _weighted_quantile(gaisi_true, weight, 0.8)
    high = (gaisi_true > cut).astype(float)
    occ3_share = {}
    for oi, code in enumerate(occ3):
        mask = occ3_idx == oi
        occ3_share[code] = float(np.sum(high[mask] * weight[mask]) / np.sum(weight[mask])) if mask.any() else 0.0

    # --- vacancy panel ---
    panel = []
    n_occ3, n_area, n_m = len(occ3), cfg.n_areas, cfg.n_months
    months = [(cfg.start_year + (cfg.start_month - 1 + m) // 12,
               (cfg.start_month - 1 + m) % 12 + 1) for m in range(n_m)]
    slope = {"pre": cfg.vacancy_slope_pre, "pandemic": cfg.vacancy_slope_pandemic,
             "inter": 0.0, "post": cfg.vacancy_slope_post}
    period_slope = np.array([slope[period_of(y, mo)] for y, mo in months])
    occ_area_fx = rng.normal(0.0, 0.5, (n_occ3, n_area))
    area_month_fx = rng.normal(0.0, 0.2, (n_area, n_m))
    majors = sorted({code[0] for code in occ3})
    major_of = np.array([majors.index(code[0]) for code in occ3])
    major_month_fx = rng.normal(0.0, 0.2, (len(majors), n_m))
    share_vec = np.array([occ3_share[c] for c in occ3])
    noise = rng.normal(0.0, cfg.vacancy_noise_sd, (n_occ3, n_area, n_m))
    y_log = (cfg.vacancy_base_log
             + occ_area_fx[:, :, None]
             + area_month_fx[None, :, :]
             + major_month_fx[major_of][:, None, :]
             + share_vec[:, None, None] * period_slope[None, None, :]
             + noise)
    counts = np.maximum(0, np.round(np.expm1(y_log))).astype(int)
    for oi, code in enumerate(occ3):
        for ai in range(n_area):
            for mi, (yy, mm) in enumerate(months):
                panel.append(PanelCell(code, f"A{ai + 1}", yy, mm, int(counts[oi, ai, mi])))

    truth = SyntheticTruth(
        cell_means={(occ2[g], task_ids[t]): tuple(np.round(means[g, t], 10))
                    for g in range(cfg.n_occ2) for t in range(cfg.n_tasks)},
        worker_e1={jobs[i].worker_id: float(e1_true[i]) for i in range(n)},
        worker_e2e3={jobs[i].worker_id: float(e23_true[i]) for i in range(n)},
        worker_gaisi={jobs[i].worker_id: float(gaisi_true[i]) for i in range(n)},
        occ3_high_share=occ3_share,
        config=cfg,
    )
    return Corpus(tasks=tuple(tasks), vignettes=tuple(vignettes), ratings=tuple(ratings),
                  jobs=tuple(jobs), panel=tuple(panel), truth=truth)


def perturb_ratings(ratings, noise_sd, seed, model_id="variant"):
    """A rating-set variant: logit noise added to every distribution."""
    rng = np.random.default_rng(seed)
    out = []
    for r in sorted(ratings, key=lambda r: r.key):
        z = np.log(np.clip(r.distribution.as_tuple(), 1e-9, None)) + rng.normal(0, noise_sd, 4)
        p = np.round(_softmax(z), 10)
        out.append(RatingRecord(r.occ_code, r.task_id, r.run_index, ExposureDistribution(*p),
                                justification=r.justification, model_id=model_id,
                                prompt_id=r.prompt_id, temperature=r.temperature))
    return out


def randomize_ratings(ratings, seed, model_id="random"):
    """An adversarial variant: distributions replaced by uniform Dirichlet draws."""
    rng = np.random.default_rng(seed)
    out = []
    for r in sorted(ratings, key=lambda r: r.key):
        p = np.round(rng.dirichlet(np.ones(4)), 10)
        out.append(RatingRecord(r.occ_code, r.task_id, r.run_index, ExposureDistribution(*p),
                                justification=r.justification, model_id=model_id,
                                prompt_id=r.prompt_id, temperature=r.temperature))
    return out


def make_rival_indices(corpus, seed=0):
    """Occupation-level rival exposure scores for validity tests.

    Returns {occ3: {name: value}} with one index aligned with the planted
    truth, one inversely related, and one independent noise column.
    """
    if corpus.truth is None:
        raise ConfigError("rival indices need a synthetic corpus with planted truth")
    rng = np.random.default_rng(seed)
    occ_mean = {}
    for job in corpus.jobs:
        occ_mean.setdefault(job.occ_code, []).append(corpus.truth.worker_gaisi[job.worker_id])
    out = {}
    for occ in sorted(occ_mean):
        m = float(np.mean(occ_mean[occ]))
        out[occ] = {
            "rival_ai": math.tanh(2.0 * m) + float(rng.normal(0, 0.01)),
            "rival_automation": 1.0 - m + float(rng.normal(0, 0.01)),
            "rival_noise": float(rng.normal(0, 1)),
        }
    return out


def variance_component_matrix(n_subjects, k_raters, sd_subject, sd_rater, sd_error,
                              seed=0, mean=0.5):
    """Two-way random-effects matrix with known components, for reliability oracles.

    x[i, j] = mean + subject_i + rater_j + error_ij. The analytic single-measure
    absolute-agreement ICC is sd_subject^2 / (sd_subject^2 + sd_rater^2 + sd_error^2).
    """
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, sd_subject, (n_subjects, 1))
    b = rng.normal(0.0, sd_rater, (1, k_raters))
    e = rng.normal(0.0, sd_error, (n_subjects, k_raters))
    return mean + a + b + e
