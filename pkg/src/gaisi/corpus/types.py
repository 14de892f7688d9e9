"""Domain types for tasks, vignettes, ratings, survey microdata, and vacancy panels.

All types are frozen dataclasses; a Corpus is an immutable bundle of them.
Probability vectors within 1e-3 of unit sum are renormalised on construction,
larger deviations raise InvalidDistribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from ..errors import ConfigError, CorpusError, InvalidDistribution
from .battery import CATEGORIES

IMPORTANCE_GRID = (1.0, 0.75, 0.5, 0.25, 0.0)
SUM_REPAIR_BAND = 1e-3
SUM_TOL = 1e-6
WAVES = ("2017", "2023-24")


@dataclass(frozen=True)
class TaskItem:
    task_id: str
    category: str
    text: str

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise CorpusError(f"task '{self.task_id}': unknown category '{self.category}'")
        if not self.task_id or not self.text:
            raise CorpusError("task_id and text must be non-empty")


@dataclass(frozen=True)
class OccupationVignette:
    occ_code: str
    title: str
    narrative: str

    def __post_init__(self):
        if not self.occ_code:
            raise CorpusError("vignette occ_code must be non-empty")
        if not self.narrative:
            raise CorpusError(f"vignette '{self.occ_code}': narrative must be non-empty")


@dataclass(frozen=True)
class ExposureDistribution:
    """Probabilities over the four exposure levels for one occupation-task cell."""

    p_e0: float
    p_e1: float
    p_e2: float
    p_e3: float

    def __post_init__(self):
        values = (self.p_e0, self.p_e1, self.p_e2, self.p_e3)
        if any(not math.isfinite(v) for v in values):
            raise InvalidDistribution(None, float("nan"), "non-finite probability")
        if any(v < -1e-12 or v > 1 + SUM_REPAIR_BAND for v in values):
            raise InvalidDistribution(None, sum(values), f"component outside [0, 1]: {values}")
        total = sum(values)
        if abs(total - 1.0) > SUM_REPAIR_BAND:
            raise InvalidDistribution(None, total)
        if abs(total - 1.0) > SUM_TOL:
            object.__setattr__(self, "p_e0", self.p_e0 / total)
            object.__setattr__(self, "p_e1", self.p_e1 / total)
            object.__setattr__(self, "p_e2", self.p_e2 / total)
            object.__setattr__(self, "p_e3", self.p_e3 / total)

    def as_tuple(self):
        return (self.p_e0, self.p_e1, self.p_e2, self.p_e3)


@dataclass(frozen=True)
class RatingRecord:
    occ_code: str
    task_id: str
    run_index: int
    distribution: ExposureDistribution
    justification: str = ""
    model_id: str = "mock"
    prompt_id: str = "main"
    temperature: float = 0.2

    def __post_init__(self):
        if self.run_index < 1:
            raise CorpusError(f"rating ({self.occ_code},{self.task_id}): run_index must be >= 1")

    @property
    def key(self):
        return (self.occ_code, self.task_id, self.run_index, self.model_id, self.prompt_id)


@dataclass(frozen=True)
class JobRecord:
    worker_id: str
    wave: str
    occ_code: str
    survey_weight: float
    # covariates
    female: int
    age: int
    age_band: str
    ethnic_minority: int
    education: str
    region: str
    industry: str
    full_time: int
    self_employed: int
    digital_use: float
    # outcomes (None = missing)
    ai_use: int | None
    log_hourly_pay: float | None
    usual_hours: float | None
    # task_id -> importance on the five-point grid; absent = not asked
    importance: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.survey_weight <= 0:
            raise CorpusError(f"worker '{self.worker_id}': survey_weight must be > 0")
        if self.wave not in WAVES:
            raise CorpusError(f"worker '{self.worker_id}': unknown wave '{self.wave}'")
        for task_id, value in self.importance.items():
            if not any(abs(value - g) < 1e-9 for g in IMPORTANCE_GRID):
                raise CorpusError(
                    f"worker '{self.worker_id}', task '{task_id}': importance {value} "
                    f"not on the grid {IMPORTANCE_GRID}"
                )
        if self.ai_use not in (0, 1, None):
            raise CorpusError(f"worker '{self.worker_id}': ai_use must be 0, 1, or missing")

    def occ_at(self, digits):
        return self.occ_code[:digits]

    @property
    def post(self):
        return int(self.wave == "2023-24")


@dataclass(frozen=True)
class PanelCell:
    occ_code: str  # 3-digit
    area_code: str
    year: int
    month: int
    vacancy_count: int

    def __post_init__(self):
        if self.vacancy_count < 0:
            raise CorpusError(f"panel ({self.occ_code},{self.area_code},{self.year}-{self.month}): negative count")
        if not 1 <= self.month <= 12:
            raise CorpusError(f"panel ({self.occ_code},{self.area_code}): month {self.month} outside 1..12")

    @property
    def quarter(self):
        return (self.month - 1) // 3 + 1

    @property
    def period_key(self):
        return self.year * 12 + (self.month - 1)

    @property
    def quarter_label(self):
        return f"{self.year}Q{self.quarter}"

    @property
    def log_outcome(self):
        return math.log1p(self.vacancy_count)


@dataclass(frozen=True)
class SyntheticConfig:
    """Planted-effect data-generating configuration. The seed fully determines output."""

    seed: int = 0
    # counts
    n_occ2: int = 8                 # 2-digit occupation groups (<= 25)
    children_per_occ2: int = 2      # 3-digit codes per group
    n_tasks: int = 12               # first n of the default battery (<= 44)
    n_workers: int = 2000
    n_areas: int = 6
    n_months: int = 99  # 2017-04 .. 2025-06 with the default start
    start_year: int = 2017
    start_month: int = 4
    runs_per_cell: int = 5
    # rating noise structure
    rater_noise_sd: float = 0.15    # per-run logit noise around the true cell distribution
    rater_run_sd: float = 0.0       # per-run (column) effect, for two-way reliability structure
    occ_spread: float = 1.0         # occupation exposure-propensity sd
    task_spread: float = 1.0        # task exposure-propensity sd
    # adoption DGP: logit(b0 + b1*E1_true + b2*E2E3_true + shift*female)
    adoption_beta0: float = -3.0
    adoption_beta1: float = 6.0
    adoption_beta2: float = 3.0
    adoption_female_shift: float = 0.2
    # wage DGP
    wage_base: float = 2.2
    wage_gaisi: float = 2.393
    wage_did: float = -0.279
    wage_noise_sd: float = 0.25
    # hours / coverage DGP
    hours_intercept: float = 8.0
    hours_per_load: float = 1.2
    hours_noise_sd: float = 1.0
    # vacancy DGP (on the log(count+1) scale)
    vacancy_base_log: float = 4.5
    vacancy_slope_pre: float = 0.036
    vacancy_slope_pandemic: float = -0.032
    vacancy_slope_post: float = -0.223
    vacancy_noise_sd: float = 0.3
    # survey structure
    missing_task_rate: float = 0.1

    def __post_init__(self):
        counts = {
            "n_occ2": self.n_occ2, "children_per_occ2": self.children_per_occ2,
            "n_tasks": self.n_tasks, "n_workers": self.n_workers,
            "n_areas": self.n_areas, "n_months": self.n_months,
            "runs_per_cell": self.runs_per_cell,
        }
        for name, value in counts.items():
            if value < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")
        if self.n_occ2 > 25:
            raise ConfigError("n_occ2 cannot exceed the 25 SOC sub-major groups")
        if self.n_tasks > 44:
            raise ConfigError("n_tasks cannot exceed the 44-item battery")
        if self.occ_spread == 0 and self.task_spread == 0:
            raise ConfigError("degenerate config: occ_spread and task_spread both zero leaves no exposure variation")
        if self.rater_noise_sd < 0 or self.rater_run_sd < 0:
            raise ConfigError("noise standard deviations must be non-negative")
        if not 0 <= self.missing_task_rate < 1:
            raise ConfigError("missing_task_rate must be in [0, 1)")


@dataclass(frozen=True)
class SyntheticTruth:
    """Planted quantities a test oracle may check recovery against."""

    cell_means: dict          # (occ2, task_id) -> (p0, p1, p2, p3) noise-free means
    worker_e1: dict           # worker_id -> true direct-exposure share
    worker_e2e3: dict         # worker_id -> true latent-exposure share
    worker_gaisi: dict        # worker_id -> e1 + 0.5*e2e3
    occ3_high_share: dict     # occ3 -> share of workers above the weighted 80th pct
    config: SyntheticConfig


@dataclass(frozen=True)
class Corpus:
    tasks: tuple[TaskItem, ...] = ()
    vignettes: tuple[OccupationVignette, ...] = ()
    ratings: tuple[RatingRecord, ...] = ()
    jobs: tuple[JobRecord, ...] = ()
    panel: tuple[PanelCell, ...] = ()
    truth: SyntheticTruth | None = None

    def __post_init__(self):
        seen = set()
        for t in self.tasks:
            if t.task_id in seen:
                raise CorpusError(f"duplicate task_id '{t.task_id}'")
            seen.add(t.task_id)
        seen = set()
        for v in self.vignettes:
            if v.occ_code in seen:
                raise CorpusError(f"duplicate vignette occ_code '{v.occ_code}'")
            seen.add(v.occ_code)
        seen = set()
        for r in self.ratings:
            if r.key in seen:
                raise CorpusError(f"duplicate rating key {r.key}")
            seen.add(r.key)
        seen = set()
        for c in self.panel:
            key = (c.occ_code, c.area_code, c.year, c.month)
            if key in seen:
                raise CorpusError(f"duplicate panel cell {key}")
            seen.add(key)

    @property
    def task_ids(self):
        return tuple(t.task_id for t in self.tasks)

    @property
    def occ_codes(self):
        return tuple(v.occ_code for v in self.vignettes)

    def tasks_by_category(self):
        out = {}
        for t in self.tasks:
            out.setdefault(t.category, []).append(t)
        return out

    def with_ratings(self, ratings):
        return replace(self, ratings=tuple(ratings))
