"""The paper-battery studies: each composes corpus, index, and stats into a
reproducible workflow returning a StudyResult with tables, figure data, and
expectation flags. Studies are pure functions of their inputs and parameters;
re-running yields identical content."""

from .audit import affordance_regression, bias_audit
from .composition import distribution_study, group_gaps, shift_share
from .market import vacancy_event_study, wage_premium
from .result import FAIL, NA, PASS, StudyResult, content_digest
from .validity import (convergent_validity, cv_omega_study, predictive_validity,
                       robustness_matrix)

STUDY_NAMES = (
    "distribution", "shift-share", "group-gaps", "wage-premium", "vacancies",
    "predictive", "convergent", "bias-audit", "affordances", "robustness",
    "cv-omega",
)

__all__ = [
    "affordance_regression", "bias_audit",
    "distribution_study", "group_gaps", "shift_share",
    "vacancy_event_study", "wage_premium",
    "FAIL", "NA", "PASS", "StudyResult", "content_digest",
    "convergent_validity", "cv_omega_study", "predictive_validity", "robustness_matrix",
    "STUDY_NAMES",
]
