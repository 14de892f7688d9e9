import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from gaisi.corpus import SyntheticConfig, generate_synthetic, variance_component_matrix
from gaisi.errors import CorpusError, EstimationError
from gaisi.reliability import icc_absolute, rating_matrices, reliability_report, write_icc_report

from conftest import make_rating


def oracle_icc(matrix):
    """Explicit sum-of-squares enumeration, pure python loops."""
    n = len(matrix)
    k = len(matrix[0])
    grand = sum(sum(row) for row in matrix) / (n * k)
    row_means = [sum(row) / k for row in matrix]
    col_means = [sum(matrix[i][j] for i in range(n)) / n for j in range(k)]
    ss_rows = k * sum((m - grand) ** 2 for m in row_means)
    ss_cols = n * sum((m - grand) ** 2 for m in col_means)
    ss_total = sum((matrix[i][j] - grand) ** 2 for i in range(n) for j in range(k))
    ss_err = ss_total - ss_rows - ss_cols
    msr = ss_rows / (n - 1)
    msc = ss_cols / (k - 1)
    mse = ss_err / ((n - 1) * (k - 1))
    icc1 = (msr - mse) / (msr + (k - 1) * mse + (k / n) * (msc - mse))
    icck = (msr - mse) / (msr + (msc - mse) / n)
    return icc1, icck


def random_matrix(rng, n=None, k=None):
    n = n or rng.integers(2, 21)
    k = k or rng.integers(2, 7)
    return rng.normal(size=(n, k)) + rng.normal(size=(n, 1)) * rng.uniform(0.5, 2.0)


class TestIccAbsolute:
    def test_perfect_agreement(self):
        m = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [3.0, 3.0, 3.0]])
        r = icc_absolute(m)
        assert r.icc_single == 1.0
        assert r.icc_average == 1.0
        assert r.ci_single == (1.0, 1.0)

    def test_fixture_matches_oracle(self):
        m = [[9, 2, 5, 8], [6, 1, 3, 2], [8, 4, 6, 8],
             [7, 1, 2, 6], [10, 5, 6, 9], [6, 2, 4, 7]]
        o1, ok = oracle_icc(m)
        r = icc_absolute(np.array(m, float))
        assert r.icc_single == pytest.approx(o1, abs=1e-12)
        assert r.icc_average == pytest.approx(ok, abs=1e-12)

    def test_random_matrices_match_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            m = random_matrix(rng)
            o1, ok = oracle_icc(m.tolist())
            r = icc_absolute(m)
            assert r.icc_single == pytest.approx(o1, abs=1e-10)
            assert r.icc_average == pytest.approx(ok, abs=1e-10)
            assert r.ci_single[0] - 1e-9 <= r.icc_single <= r.ci_single[1] + 1e-9

    def test_analytic_variance_components(self):
        sa, sb, se = 0.05, 0.005, 0.02
        analytic = sa ** 2 / (sa ** 2 + sb ** 2 + se ** 2)
        m = variance_component_matrix(1000, 5, sa, sb, se, seed=2)
        r = icc_absolute(m)
        assert abs(r.icc_single - analytic) < 0.02

    def test_constant_matrix_degenerate(self):
        r = icc_absolute(np.full((4, 3), 0.7))
        assert r.degenerate
        assert math.isnan(r.icc_single)

    def test_missing_cells_rejected(self):
        m = np.array([[1.0, np.nan], [2.0, 2.0]])
        with pytest.raises(EstimationError):
            icc_absolute(m)

    def test_too_small_rejected(self):
        with pytest.raises(EstimationError):
            icc_absolute(np.array([[1.0, 2.0]]))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        m = random_matrix(rng, n=8, k=4)
        base = icc_absolute(m)
        rows = icc_absolute(m[rng.permutation(8)])
        cols = icc_absolute(m[:, rng.permutation(4)])
        assert rows.icc_single == pytest.approx(base.icc_single, abs=1e-12)
        assert cols.icc_single == pytest.approx(base.icc_single, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.floats(-5, 5), st.floats(0.1, 10))
    def test_affine_invariance(self, seed, shift, scale):
        rng = np.random.default_rng(seed)
        m = random_matrix(rng, n=6, k=3)
        base = icc_absolute(m)
        shifted = icc_absolute(m + shift)
        scaled = icc_absolute(m * scale)
        assert shifted.icc_single == pytest.approx(base.icc_single, abs=1e-8)
        assert scaled.icc_single == pytest.approx(base.icc_single, abs=1e-8)

    def test_average_dominates_single_when_positive(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            r = icc_absolute(random_matrix(rng))
            if r.icc_single >= 0:
                assert r.icc_average >= r.icc_single - 1e-12


class TestReliabilityReport:
    def test_zero_noise_corpus_all_one(self):
        corpus = generate_synthetic(SyntheticConfig(seed=4, n_workers=5,
                                                    rater_noise_sd=0.0, n_months=2))
        results = reliability_report(corpus.ratings)
        for level in ("E0", "E1", "E2"):
            assert results[level].icc_single == 1.0
            assert results[level].icc_average == 1.0

    def test_unbalanced_runs_named(self):
        records = [make_rating(run=r) for r in (1, 2, 3)]
        records += [make_rating(task="read_long", run=r, dist=(0.4, 0.3, 0.3, 0.0))
                    for r in (1, 2)]
        with pytest.raises(CorpusError) as err:
            reliability_report(records)
        assert "read_long" in str(err.value)

    def test_two_run_corpus_flagged_low_k(self):
        corpus = generate_synthetic(SyntheticConfig(seed=4, n_workers=5,
                                                    runs_per_cell=2, n_months=2))
        results = reliability_report(corpus.ratings)
        assert all(r.k_raters == 2 and r.low_k for r in results.values())

    def test_e2_level_pools_integration_and_multimodal(self):
        records = [make_rating(run=r, dist=(0.4, 0.2, 0.3, 0.1)) for r in (1, 2)]
        records += [make_rating(task="read_long", run=r, dist=(0.5, 0.2, 0.2, 0.1))
                    for r in (1, 2)]
        matrices, cells, runs = rating_matrices(records)
        assert cells == [("21", "read_long"), ("21", "read_short")]
        assert matrices["E2"][0, 0] == pytest.approx(0.2 + 0.1)
        assert matrices["E2"][1, 0] == pytest.approx(0.3 + 0.1)

    def test_synthetic_icc_tracks_noise(self):
        low = generate_synthetic(SyntheticConfig(seed=4, n_workers=5,
                                                 rater_noise_sd=0.02, n_months=2))
        high = generate_synthetic(SyntheticConfig(seed=4, n_workers=5,
                                                  rater_noise_sd=0.6, n_months=2))
        icc_low = reliability_report(low.ratings)["E1"].icc_single
        icc_high = reliability_report(high.ratings)["E1"].icc_single
        assert icc_low > icc_high

    def test_report_written_with_components(self, desk_corpus, tmp_path):
        results = reliability_report(desk_corpus.ratings)
        path = write_icc_report(results, tmp_path / "icc_report.json")
        data = json.loads(path.read_text())
        for level in ("E0", "E1", "E2"):
            block = data[level]
            assert {"ms_rows", "ms_cols", "ms_error", "n_subjects", "k_raters"} <= set(block)
            assert block["n_subjects"] == len({(r.occ_code, r.task_id)
                                               for r in desk_corpus.ratings})
