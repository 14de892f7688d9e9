import numpy as np
import pytest

from gaisi.corpus import (Corpus, ExposureDistribution, JobRecord, OccupationVignette,
                          RatingRecord, SyntheticConfig, TaskItem, generate_synthetic)


def make_job(worker_id="w1", occ_code="211", importance=None, wave="2023-24",
             weight=1.0, **overrides):
    base = dict(
        worker_id=worker_id, wave=wave, occ_code=occ_code, survey_weight=weight,
        female=0, age=40, age_band="40-49", ethnic_minority=0,
        education="tertiary", region="R1", industry="I1", full_time=1,
        self_employed=0, digital_use=0.5, ai_use=None, log_hourly_pay=None,
        usual_hours=None, importance=importance or {},
    )
    base.update(overrides)
    return JobRecord(**base)


def make_rating(occ="21", task="read_short", run=1, dist=(0.5, 0.3, 0.2, 0.0), **kw):
    return RatingRecord(occ_code=occ, task_id=task, run_index=run,
                        distribution=ExposureDistribution(*dist), **kw)


@pytest.fixture(scope="session")
def small_corpus():
    """Two occupations x four tasks fixture with jobs, ratings, and a panel."""
    tasks = (
        TaskItem("read_short", "Reading", "Reading short reports, letters or emails"),
        TaskItem("read_long", "Reading", "Reading long reports, manuals, articles or books"),
        TaskItem("write_short", "Writing", "Writing short documents such as letters or emails"),
        TaskItem("manual_heavy", "Manual Skills", "Carrying, pushing or pulling heavy objects"),
    )
    vignettes = (
        OccupationVignette("21", "Science and Engineering Professionals",
                           "Desk-based analytical work with standard office software."),
        OccupationVignette("91", "Elementary Trades Workers",
                           "Physical site work using hand tools and machinery."),
    )
    ratings = []
    dists = {
        ("21", "read_short"): (0.2, 0.6, 0.2, 0.0),
        ("21", "read_long"): (0.3, 0.4, 0.3, 0.0),
        ("21", "write_short"): (0.1, 0.7, 0.2, 0.0),
        ("21", "manual_heavy"): (0.9, 0.0, 0.1, 0.0),
        ("91", "read_short"): (0.6, 0.3, 0.1, 0.0),
        ("91", "read_long"): (0.7, 0.2, 0.1, 0.0),
        ("91", "write_short"): (0.5, 0.4, 0.1, 0.0),
        ("91", "manual_heavy"): (0.95, 0.0, 0.05, 0.0),
    }
    for (occ, task), d in dists.items():
        for run in (1, 2, 3):
            ratings.append(make_rating(occ, task, run, d))
    jobs = (
        make_job("w1", "211", {"read_short": 1.0, "write_short": 0.5},
                 ai_use=1, log_hourly_pay=3.0, usual_hours=40.0),
        make_job("w2", "212", {"read_long": 0.75, "manual_heavy": 0.25},
                 ai_use=0, log_hourly_pay=2.5, usual_hours=38.0, wave="2017"),
        make_job("w3", "911", {"manual_heavy": 1.0, "read_short": 0.25},
                 ai_use=0, log_hourly_pay=2.2, usual_hours=42.0),
    )
    from gaisi.corpus import PanelCell
    panel = tuple(PanelCell("211", "A1", 2022, m, 100 + m) for m in range(1, 13))
    return Corpus(tasks=tasks, vignettes=vignettes, ratings=tuple(ratings),
                  jobs=jobs, panel=panel)


@pytest.fixture(scope="session")
def desk_corpus():
    """Desk-scale synthetic corpus shared across study tests."""
    return generate_synthetic(SyntheticConfig(seed=11))


@pytest.fixture(scope="session")
def desk_scores(desk_corpus):
    from gaisi.index import score_corpus
    scores, undefined = score_corpus(desk_corpus)
    assert not undefined
    return scores


@pytest.fixture(scope="session")
def desk_jobs(desk_corpus, desk_scores):
    return [j for j in desk_corpus.jobs if j.worker_id in desk_scores]
