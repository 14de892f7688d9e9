import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaisi.corpus import (CorpusPaths, ExposureDistribution, SyntheticConfig,
                          generate_synthetic, load_corpus, write_corpus)
from gaisi.corpus.io import load_rivals, write_rivals
from gaisi.errors import (ConfigError, CorpusError, DanglingReferenceError,
                          InvalidDistribution, MalformedRowError)

from conftest import make_job, make_rating


def digest_dir(directory):
    h = hashlib.sha256()
    for p in sorted(Path(directory).rglob("*")):
        if p.is_file():
            h.update(p.name.encode())
            h.update(p.read_bytes())
    return h.hexdigest()


class TestDistribution:
    def test_normalises_small_deviation(self):
        d = ExposureDistribution(0.4995, 0.2505, 0.25, 0.0)
        assert abs(sum(d.as_tuple()) - 1.0) < 1e-12

    def test_rejects_large_deviation(self):
        with pytest.raises(InvalidDistribution):
            ExposureDistribution(0.5, 0.3, 0.1, 0.0)  # sums to 0.9

    def test_rejects_negative(self):
        with pytest.raises(InvalidDistribution):
            ExposureDistribution(1.2, -0.2, 0.0, 0.0)

    @given(st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4))
    def test_any_normalised_vector_sums_to_one(self, raw):
        total = sum(raw)
        d = ExposureDistribution(*(v / total for v in raw))
        assert abs(sum(d.as_tuple()) - 1.0) <= 1e-6


class TestLoadWrite:
    def test_round_trip_content_identical(self, small_corpus, tmp_path):
        write_corpus(small_corpus, tmp_path)
        loaded = load_corpus(CorpusPaths.in_dir(tmp_path))
        second = tmp_path / "second"
        write_corpus(loaded, second)
        for name in ("tasks.csv", "vignettes.jsonl", "ratings.csv",
                     "survey.csv", "vacancies.csv"):
            assert (tmp_path / name).read_bytes() == (second / name).read_bytes(), name

    def test_fixture_shape(self, small_corpus, tmp_path):
        write_corpus(small_corpus, tmp_path)
        loaded = load_corpus(CorpusPaths.in_dir(tmp_path))
        assert len(loaded.vignettes) == 2
        assert len(loaded.tasks) == 4
        assert len(loaded.ratings) == len(small_corpus.ratings)
        assert len(loaded.jobs) == 3

    def test_bad_probability_sum_names_cell(self, small_corpus, tmp_path):
        write_corpus(small_corpus, tmp_path)
        path = tmp_path / "ratings.csv"
        lines = path.read_text().splitlines()
        hit = next(i for i, l in enumerate(lines) if "0.9,0,0.1,0" in l)
        lines[hit] = lines[hit].replace("0.9,0,0.1,0", "0.8,0,0.1,0")  # sum 0.9
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(MalformedRowError) as err:
            load_corpus(CorpusPaths.in_dir(tmp_path))
        assert f":{hit + 1}:" in str(err.value)
        assert "manual_heavy" in str(err.value)

    def test_dangling_task_reference(self, small_corpus, tmp_path):
        write_corpus(small_corpus, tmp_path)
        path = tmp_path / "ratings.csv"
        text = path.read_text().replace("read_short", "no_such_task")
        path.write_text(text)
        with pytest.raises(DanglingReferenceError) as err:
            load_corpus(CorpusPaths.in_dir(tmp_path))
        assert "no_such_task" in str(err.value)

    def test_missing_column_is_malformed(self, tmp_path):
        (tmp_path / "tasks.csv").write_text("task_id,category\nx,Reading\n")
        with pytest.raises(MalformedRowError):
            load_corpus(CorpusPaths.in_dir(tmp_path))

    def test_nonexistent_path_rejected(self, tmp_path):
        with pytest.raises(CorpusError):
            load_corpus(CorpusPaths(tasks=tmp_path / "absent.csv"))

    def test_blank_importance_is_missing_by_default(self, small_corpus, tmp_path):
        write_corpus(small_corpus, tmp_path)
        loaded = load_corpus(CorpusPaths.in_dir(tmp_path))
        w1 = next(j for j in loaded.jobs if j.worker_id == "w1")
        assert "manual_heavy" not in w1.importance
        loaded0 = load_corpus(CorpusPaths.in_dir(tmp_path), blank_is_zero=True)
        w1z = next(j for j in loaded0.jobs if j.worker_id == "w1")
        assert w1z.importance["manual_heavy"] == 0.0

    def test_rivals_round_trip(self, tmp_path):
        rivals = {"211": {"a": 0.5, "b": -1.0}, "911": {"a": 0.1}}
        write_rivals(rivals, tmp_path / "rivals.csv")
        back = load_rivals(tmp_path / "rivals.csv")
        assert back["211"] == {"a": 0.5, "b": -1.0}
        assert back["911"] == {"a": 0.1}


class TestJobRecord:
    def test_importance_off_grid_rejected(self):
        with pytest.raises(CorpusError):
            make_job(importance={"read_short": 0.6})

    def test_weight_positive(self):
        with pytest.raises(CorpusError):
            make_job(weight=0.0)


class TestSynthetic:
    def test_same_seed_byte_identical(self, tmp_path):
        cfg = SyntheticConfig(seed=5, n_workers=200, n_months=24)
        write_corpus(generate_synthetic(cfg), tmp_path / "a")
        write_corpus(generate_synthetic(cfg), tmp_path / "b")
        assert digest_dir(tmp_path / "a") == digest_dir(tmp_path / "b")

    def test_different_seed_differs(self, tmp_path):
        write_corpus(generate_synthetic(SyntheticConfig(seed=5, n_workers=50)), tmp_path / "a")
        write_corpus(generate_synthetic(SyntheticConfig(seed=6, n_workers=50)), tmp_path / "b")
        assert digest_dir(tmp_path / "a") != digest_dir(tmp_path / "b")

    def test_zero_noise_runs_identical(self):
        corpus = generate_synthetic(SyntheticConfig(seed=3, n_workers=20,
                                                    rater_noise_sd=0.0))
        by_cell = {}
        for r in corpus.ratings:
            by_cell.setdefault((r.occ_code, r.task_id), set()).add(r.distribution.as_tuple())
        assert all(len(v) == 1 for v in by_cell.values())

    def test_degenerate_config_rejected(self):
        with pytest.raises(ConfigError):
            SyntheticConfig(occ_spread=0.0, task_spread=0.0)
        with pytest.raises(ConfigError):
            SyntheticConfig(n_workers=0)

    def test_counts_match_config(self, desk_corpus):
        cfg = desk_corpus.truth.config
        assert len(desk_corpus.vignettes) == cfg.n_occ2
        assert len(desk_corpus.tasks) == cfg.n_tasks
        assert len(desk_corpus.ratings) == cfg.n_occ2 * cfg.n_tasks * cfg.runs_per_cell
        assert len(desk_corpus.jobs) == cfg.n_workers
        n_occ3 = cfg.n_occ2 * cfg.children_per_occ2
        assert len(desk_corpus.panel) == n_occ3 * cfg.n_areas * cfg.n_months

    def test_truth_shares_match_pipeline_definition(self, desk_corpus):
        # occupation high-exposure shares recomputed from planted worker truth
        import collections
        truth = desk_corpus.truth
        g = np.array([truth.worker_gaisi[j.worker_id] for j in desk_corpus.jobs])
        w = np.array([j.survey_weight for j in desk_corpus.jobs])
        order = np.argsort(g, kind="stable")
        cw = np.cumsum(w[order])
        cut = g[order][np.searchsorted(cw, 0.8 * cw[-1], side="left")]
        high = g > cut
        agg = collections.defaultdict(lambda: [0.0, 0.0])
        for j, h in zip(desk_corpus.jobs, high):
            agg[j.occ_code][0] += j.survey_weight * h
            agg[j.occ_code][1] += j.survey_weight
        for occ, (num, den) in agg.items():
            assert truth.occ3_high_share[occ] == pytest.approx(num / den, abs=1e-9)
