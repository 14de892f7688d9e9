"""Shared worker-level analysis table and design assembly for the studies."""

from __future__ import annotations

import numpy as np

from ..errors import EstimationError
from ..stats import DesignBuilder, interact


def analysis_table(jobs, scores, loo_means=None):
    """Column arrays for every scored worker, sorted by worker id.

    Outcome columns hold NaN for missing values; callers mask as needed.
    """
    rows = sorted((j for j in jobs if j.worker_id in scores), key=lambda j: j.worker_id)
    if not rows:
        raise EstimationError("no scored workers in the sample")
    loo_means = loo_means or {}

    def col(fn, dtype=float):
        return np.array([fn(j) for j in rows], dtype=dtype)

    def opt(fn):
        return np.array([np.nan if fn(j) is None else float(fn(j)) for j in rows])

    s = [scores[j.worker_id] for j in rows]
    table = {
        "worker_id": np.array([j.worker_id for j in rows], dtype=object),
        "weight": col(lambda j: j.survey_weight),
        "post": col(lambda j: j.post),
        "wave": np.array([j.wave for j in rows], dtype=object),
        "occ1": np.array([j.occ_at(1) for j in rows], dtype=object),
        "occ2": np.array([j.occ_at(2) for j in rows], dtype=object),
        "occ3": np.array([j.occ_at(3) for j in rows], dtype=object),
        "female": col(lambda j: j.female),
        "age": col(lambda j: j.age),
        "age_band": np.array([j.age_band for j in rows], dtype=object),
        "ethnic_minority": col(lambda j: j.ethnic_minority),
        "education": np.array([j.education for j in rows], dtype=object),
        "region": np.array([j.region for j in rows], dtype=object),
        "industry": np.array([j.industry for j in rows], dtype=object),
        "full_time": col(lambda j: j.full_time),
        "self_employed": col(lambda j: j.self_employed),
        "digital_use": col(lambda j: j.digital_use),
        "ai_use": opt(lambda j: j.ai_use),
        "log_pay": opt(lambda j: j.log_hourly_pay),
        "hours": opt(lambda j: j.usual_hours),
        "e0": np.array([x.e0 for x in s]),
        "e1": np.array([x.e1 for x in s]),
        "e2e3": np.array([x.e2e3 for x in s]),
        "e3": np.array([x.e3 for x in s]),
        "task_load": np.array([x.task_load for x in s]),
        "gaisi": np.array([x.gaisi for x in s]),
        "loo_gaisi": np.array([np.nan if loo_means.get(j.worker_id) is None
                               else loo_means[j.worker_id] for j in rows]),
    }
    return table


def subset(table, mask):
    return {k: v[mask] for k, v in table.items()}


def wage_controls(builder: DesignBuilder, t):
    """The pay-equation control block: sex-age interactions, education, status, load."""
    age = t["age"] - 40.0
    builder.add("female", t["female"])
    builder.add("age", age)
    builder.add("age_sq", age ** 2)
    builder.add("female_age", t["female"] * age)
    builder.add("female_age_sq", t["female"] * age ** 2)
    builder.add_dummies(t["education"], "edu")
    builder.add("ethnic_minority", t["ethnic_minority"])
    builder.add("full_time", t["full_time"])
    builder.add("self_employed", t["self_employed"])
    builder.add("task_load", t["task_load"])
    return builder


def demographic_controls(builder: DesignBuilder, t, regions=True):
    builder.add("female", t["female"])
    builder.add("age", t["age"] - 40.0)
    builder.add("age_sq", (t["age"] - 40.0) ** 2)
    builder.add("ethnic_minority", t["ethnic_minority"])
    builder.add_dummies(t["education"], "edu")
    if regions:
        builder.add_dummies(t["region"], "region")
    return builder


def wave_interactions(t):
    """(region x wave, industry x wave) FE factors for the pay equation."""
    return interact(t["region"], t["wave"]), interact(t["industry"], t["wave"])
