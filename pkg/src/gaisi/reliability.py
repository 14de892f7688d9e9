"""Two-way random-effects intraclass correlation, absolute agreement.

ICC(A,1) and ICC(A,k) follow the McGraw-Wong definitions with F-based
confidence intervals (Satterthwaite degrees of freedom for the single
measure; the average-measure interval is the Spearman-Brown transform of the
single-measure bounds). A constant matrix is degenerate and reported as such
rather than propagating NaN silently.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import stats as sps

from .errors import CorpusError, EstimationError

LEVELS = ("E0", "E1", "E2")


@dataclass(frozen=True)
class IccResult:
    level: str
    icc_single: float
    icc_average: float
    ci_single: tuple
    ci_average: tuple
    ms_rows: float
    ms_cols: float
    ms_error: float
    n_subjects: int
    k_raters: int
    degenerate: bool = False
    low_k: bool = False


def _anova(matrix):
    m = np.asarray(matrix, dtype=float)
    n, k = m.shape
    grand = m.mean()
    row_means = m.mean(axis=1)
    col_means = m.mean(axis=0)
    ss_rows = k * np.sum((row_means - grand) ** 2)
    ss_cols = n * np.sum((col_means - grand) ** 2)
    ss_total = np.sum((m - grand) ** 2)
    ss_err = ss_total - ss_rows - ss_cols
    return (ss_rows / (n - 1), ss_cols / (k - 1), max(ss_err, 0.0) / ((n - 1) * (k - 1)))


def _sb(r, k):
    """Spearman-Brown step-up of a single-measure coefficient."""
    denom = 1.0 + (k - 1) * r
    return float("nan") if denom == 0 else k * r / denom


def icc_absolute(matrix, level="", alpha=0.05) -> IccResult:
    """ICC(A,1)/ICC(A,k) for a complete subjects x raters matrix."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise EstimationError("ICC expects a 2-d subjects x raters matrix")
    n, k = m.shape
    if n < 2 or k < 2:
        raise EstimationError(f"ICC needs >= 2 subjects and >= 2 raters, got {n} x {k}")
    if not np.all(np.isfinite(m)):
        raise EstimationError("ICC matrix has missing cells; complete-case filter first")

    if np.ptp(m) <= 1e-12 * max(1.0, float(np.abs(m).max())):
        # constant matrix: no variance anywhere, coefficient undefined
        msr, msc, mse = _anova(m)
        return IccResult(level, float("nan"), float("nan"), (float("nan"), float("nan")),
                         (float("nan"), float("nan")), msr, msc, mse, n, k,
                         degenerate=True, low_k=k < 3)

    msr, msc, mse = _anova(m)
    if max(msc, mse) <= 1e-12 * msr:
        # perfect agreement: raters identical per subject, subjects differ
        return IccResult(level, 1.0, 1.0, (1.0, 1.0), (1.0, 1.0),
                         msr, msc, mse, n, k, low_k=k < 3)

    icc1 = (msr - mse) / (msr + (k - 1) * mse + (k / n) * (msc - mse))
    icck = (msr - mse) / (msr + (msc - mse) / n)

    # Satterthwaite df for the single-measure F interval
    one_minus = max(1.0 - icc1, 1e-12)
    a = k * icc1 / (n * one_minus)
    b = 1.0 + k * icc1 * (n - 1) / (n * one_minus)
    num = (a * msc + b * mse) ** 2
    den = (a * msc) ** 2 / (k - 1) + (b * mse) ** 2 / ((n - 1) * (k - 1))
    v = num / den if den > 0 else float("inf")
    fl = sps.f.ppf(1 - alpha / 2, n - 1, v)
    fu = sps.f.ppf(1 - alpha / 2, v, n - 1)
    lo = n * (msr - fl * mse) / (fl * (k * msc + (k * n - k - n) * mse) + n * msr)
    hi = n * (fu * msr - mse) / (k * msc + (k * n - k - n) * mse + n * fu * msr)
    lo, hi = min(lo, icc1), max(hi, icc1)
    return IccResult(
        level=level,
        icc_single=float(icc1), icc_average=float(icck),
        ci_single=(float(lo), float(hi)),
        ci_average=(_sb(lo, k), _sb(hi, k)),
        ms_rows=float(msr), ms_cols=float(msc), ms_error=float(mse),
        n_subjects=n, k_raters=k, low_k=k < 3,
    )


def rating_matrices(ratings):
    """One subjects x runs matrix per exposure level from rating records.

    Subjects are (occupation, task) cells in sorted order; columns are run
    indices. The E2 level pools the integration and multimodal components.
    Unbalanced run counts raise, naming the offending cells.
    """
    by_cell: dict = {}
    for r in ratings:
        by_cell.setdefault((r.occ_code, r.task_id), {})[r.run_index] = r.distribution
    if not by_cell:
        raise CorpusError("no ratings")
    counts = {cell: len(runs) for cell, runs in by_cell.items()}
    k = max(counts.values())
    bad = sorted(cell for cell, c in counts.items() if c != k)
    if bad:
        shown = ", ".join(map(str, bad[:5]))
        raise CorpusError(f"unbalanced run counts (expected {k}): {shown}"
                          + ("" if len(bad) <= 5 else f" (+{len(bad) - 5} more)"))
    run_ids = sorted({run for runs in by_cell.values() for run in runs})
    cells = sorted(by_cell)
    def build(component):
        return np.array([[component(by_cell[c][j]) for j in run_ids] for c in cells])
    return {
        "E0": build(lambda d: d.p_e0),
        "E1": build(lambda d: d.p_e1),
        "E2": build(lambda d: d.p_e2 + d.p_e3),
    }, cells, run_ids


def reliability_report(ratings, alpha=0.05):
    """IccResult per exposure level across runs; every cell must share one run count."""
    matrices, cells, run_ids = rating_matrices(ratings)
    return {level: icc_absolute(matrices[level], level=level, alpha=alpha)
            for level in LEVELS}


def write_icc_report(results, path):
    """icc_report.json with full ANOVA components for audit."""
    payload = {}
    for level, r in sorted(results.items()):
        d = asdict(r)
        payload[level] = {key: (None if isinstance(v, float) and math.isnan(v) else v)
                          for key, v in d.items()}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path
