"""Cell-level mean exposure, worker-level aggregation, and derived constructs.

average_runs turns rating records into per-cell mean distributions; the
worker aggregation importance-weights those means over each worker's rated
tasks and scales by total task load, folding the multimodal level into latent
exposure before the omega combination. Derived constructs: occupation means
with leave-one-out variants, high-exposure shares, the hours-on-task-load
coverage regression, and coverage-adjusted bounds.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import CorpusError, EstimationError, UndefinedExposure
from .stats import Design, weighted_quantile, wls_fe

DEFAULT_OMEGA = 0.5
SUM_TOL = 1e-6


@dataclass(frozen=True)
class CellExposure:
    occ_code: str
    task_id: str
    p_e0: float
    p_e1: float
    p_e2: float
    p_e3: float
    run_count: int

    def __post_init__(self):
        total = self.p_e0 + self.p_e1 + self.p_e2 + self.p_e3
        if abs(total - 1.0) > SUM_TOL:
            raise CorpusError(f"cell ({self.occ_code},{self.task_id}): means sum to {total}")
        if self.run_count < 1:
            raise CorpusError(f"cell ({self.occ_code},{self.task_id}): run_count must be >= 1")


@dataclass(frozen=True)
class GaisiScore:
    worker_id: str
    e0: float
    e1: float
    e2e3: float
    e3: float          # multimodal component kept separately for diagnostics
    task_load: float
    gaisi: float
    omega: float
    defined: bool = True


def average_runs(records) -> dict:
    """Per-cell arithmetic mean of each level across runs.

    Returns {(occ_code, task_id): CellExposure}; empty input or an empty cell
    is an error.
    """
    if not records:
        raise CorpusError("no rating records to average")
    sums: dict = {}
    for r in records:
        key = (r.occ_code, r.task_id)
        acc = sums.setdefault(key, [0.0, 0.0, 0.0, 0.0, 0])
        d = r.distribution
        acc[0] += d.p_e0
        acc[1] += d.p_e1
        acc[2] += d.p_e2
        acc[3] += d.p_e3
        acc[4] += 1
    cells = {}
    for (occ, task), (s0, s1, s2, s3, k) in sorted(sums.items()):
        cells[(occ, task)] = CellExposure(occ, task, s0 / k, s1 / k, s2 / k, s3 / k, k)
    return cells


def cell_digit_depth(cells) -> int:
    depths = {len(occ) for occ, _ in cells}
    if len(depths) != 1:
        raise CorpusError(f"cells mix occupation digit depths: {sorted(depths)}")
    return depths.pop()


def aggregate_worker(job, cells, missing_policy="exclude", omega=DEFAULT_OMEGA) -> GaisiScore:
    """Importance-weighted worker-level exposure shares and the combined index.

    missing_policy:
      exclude - tasks the worker was not asked are dropped from numerator and
                denominator; rated tasks lacking a cell are also dropped.
      zero    - unasked tasks enter with importance 0 (numerically identical).
      strict  - a positively-weighted task without a cell raises.
    """
    if missing_policy not in ("exclude", "zero", "strict"):
        raise CorpusError(f"unknown missing_policy '{missing_policy}'")
    depth = cell_digit_depth(cells)
    occ = job.occ_code[:depth]
    num = np.zeros(4)
    load = 0.0
    for task_id, importance in job.importance.items():
        cell = cells.get((occ, task_id))
        if cell is None:
            if missing_policy == "strict" and importance > 0:
                raise CorpusError(
                    f"worker {job.worker_id}: no rated cell for ({occ},{task_id}) under strict policy")
            continue
        load += importance
        num += importance * np.array([cell.p_e0, cell.p_e1, cell.p_e2, cell.p_e3])
    if load <= 0:
        raise UndefinedExposure(job.worker_id)
    shares = num / load
    e2e3 = shares[2] + shares[3]
    return GaisiScore(
        worker_id=job.worker_id,
        e0=float(shares[0]), e1=float(shares[1]), e2e3=float(e2e3), e3=float(shares[3]),
        task_load=float(load),
        gaisi=float(shares[1] + omega * e2e3),
        omega=omega,
    )


def score_corpus(corpus, missing_policy="exclude", omega=DEFAULT_OMEGA):
    """Scores for every worker; undefined-exposure workers are flagged, not scored.

    Returns (scores: {worker_id: GaisiScore}, undefined: [worker_id]).
    """
    cells = average_runs(corpus.ratings)
    scores, undefined = {}, []
    for job in corpus.jobs:
        try:
            scores[job.worker_id] = aggregate_worker(job, cells, missing_policy, omega)
        except UndefinedExposure:
            undefined.append(job.worker_id)
    return scores, undefined


@dataclass(frozen=True)
class OccupationStats:
    occ_code: str
    n: int
    mean_gaisi: float
    high_share: float
    imputed: bool


def occupation_stats(scores, jobs, digit_depth=3, min_n=10, high_percentile=0.8,
                     weighted=True):
    """Per-occupation weighted means and high-exposure shares, plus LOO means.

    The high-exposure flag marks scores above the weighted `high_percentile`
    quantile of the worker distribution. Occupations with fewer than min_n
    workers take the parent-group (one digit shorter) mean and are marked
    imputed. Leave-one-out means exclude the focal worker; a single-worker
    occupation yields a missing LOO value.

    Returns (by_occupation: {occ: OccupationStats}, loo_mean: {worker_id: float|None}).
    """
    rows = [(j, scores[j.worker_id]) for j in jobs if j.worker_id in scores]
    if not rows:
        raise EstimationError("no scored workers")
    g = np.array([s.gaisi for _, s in rows])
    w = np.array([j.survey_weight for j, _ in rows]) if weighted else np.ones(len(rows))
    cut = weighted_quantile(g, high_percentile, w)
    high = (g > cut).astype(float)

    occ = np.array([j.occ_at(digit_depth) for j, _ in rows])
    parents = np.array([j.occ_at(digit_depth - 1) for j, _ in rows]) if digit_depth > 1 else occ

    by_occ = {}
    loo = {}
    order = np.argsort(occ, kind="stable")
    # group sums for LOO and means
    for code in np.unique(occ):
        mask = occ == code
        ws, gs = w[mask], g[mask]
        swg, sw = float(np.sum(ws * gs)), float(np.sum(ws))
        n = int(mask.sum())
        mean = swg / sw
        share = float(np.sum(ws * high[mask]) / sw)
        by_occ[str(code)] = OccupationStats(str(code), n, mean, share, False)
        for idx in np.flatnonzero(mask):
            job, s = rows[idx]
            if n == 1:
                loo[job.worker_id] = None
            else:
                loo[job.worker_id] = (swg - w[idx] * g[idx]) / (sw - w[idx])
    # impute small occupations from the parent group
    if digit_depth > 1:
        parent_stats = {}
        for pcode in np.unique(parents):
            mask = parents == pcode
            ws = w[mask]
            parent_stats[str(pcode)] = (
                float(np.sum(ws * g[mask]) / np.sum(ws)),
                float(np.sum(ws * high[mask]) / np.sum(ws)),
            )
        for code, st in list(by_occ.items()):
            if st.n < min_n:
                pmean, pshare = parent_stats[code[:digit_depth - 1]]
                by_occ[code] = OccupationStats(code, st.n, pmean, pshare, True)
    return by_occ, loo


def coverage_share(jobs, scores=None, weighted=True):
    """Coverage share from a weighted regression of usual hours on task load.

    S_i = beta * load_i / hours_i clamped to [0, 1]. Requires positive hours
    and task load; a non-positive fitted slope yields missing shares with a
    warning flag.

    Returns {"alpha", "beta", "worker_share": {id: float|None},
             "occupation_share": {occ2: float}, "grand_mean", "degenerate"}.
    """
    usable = [j for j in jobs if j.usual_hours and j.usual_hours > 0]
    loads = {}
    for j in usable:
        load = sum(v for v in j.importance.values())
        if load > 0:
            loads[j.worker_id] = load
    usable = [j for j in usable if j.worker_id in loads]
    if len(usable) < 3:
        raise EstimationError("coverage regression needs at least 3 usable workers")
    y = np.array([j.usual_hours for j in usable])
    L = np.array([loads[j.worker_id] for j in usable])
    w = np.array([j.survey_weight for j in usable]) if weighted else np.ones(len(usable))
    fit = wls_fe(Design(y=y, X=np.column_stack([np.ones(len(y)), L]),
                        names=("const", "task_load"), weights=w))
    beta = fit["task_load"]
    out = {"alpha": fit["const"], "beta": beta, "degenerate": beta <= 0,
           "worker_share": {}, "occupation_share": {}, "grand_mean": None}
    if beta <= 0:
        out["worker_share"] = {j.worker_id: None for j in usable}
        return out
    shares = np.clip(beta * L / y, 0.0, 1.0)
    out["worker_share"] = {j.worker_id: float(s) for j, s in zip(usable, shares)}
    out["grand_mean"] = float(np.sum(w * shares) / np.sum(w))
    occ = np.array([j.occ_at(1) for j in usable])
    for code in np.unique(occ):
        mask = occ == code
        out["occupation_share"][str(code)] = float(np.sum(w[mask] * shares[mask]) / np.sum(w[mask]))
    return out


def bounded_gaisi(score, s):
    """Coverage-adjusted bounds: unseen tasks all resilient vs all exposed."""
    if not 0.0 <= s <= 1.0:
        raise EstimationError(f"coverage share must lie in [0, 1], got {s}")
    g = score.gaisi if isinstance(score, GaisiScore) else float(score)
    return (s * g, s * g + (1.0 - s))


# --- exports ---

CELL_COLUMNS = ["occ_code", "task_id", "p_e0", "p_e1", "p_e2", "p_e3", "run_count"]
SCORE_COLUMNS = ["worker_id", "e0", "e1", "e2e3", "e3", "task_load", "gaisi", "omega"]


def write_cells(cells, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CELL_COLUMNS)
        for key in sorted(cells):
            c = cells[key]
            w.writerow([c.occ_code, c.task_id, repr(c.p_e0), repr(c.p_e1),
                        repr(c.p_e2), repr(c.p_e3), c.run_count])


def write_scores(scores, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SCORE_COLUMNS)
        for wid in sorted(scores):
            s = scores[wid]
            w.writerow([s.worker_id, repr(s.e0), repr(s.e1), repr(s.e2e3), repr(s.e3),
                        repr(s.task_load), repr(s.gaisi), repr(s.omega)])
