"""Data model, file formats, and synthetic data with planted effects."""

from .battery import CATEGORIES, DEFAULT_BATTERY, SKILL_LEVELS, SOC2010_SUBMAJOR, skill_level
from .io import CorpusPaths, load_corpus, write_corpus
from .synthetic import (GPT_RELEASE, PANDEMIC_END, PANDEMIC_START, REFERENCE_QUARTER,
                        generate_synthetic, make_rival_indices, period_of,
                        perturb_ratings, randomize_ratings, variance_component_matrix)
from .types import (Corpus, ExposureDistribution, JobRecord, OccupationVignette,
                    PanelCell, RatingRecord, SyntheticConfig, SyntheticTruth, TaskItem)

__all__ = [
    "CATEGORIES", "DEFAULT_BATTERY", "SKILL_LEVELS", "SOC2010_SUBMAJOR", "skill_level",
    "CorpusPaths", "load_corpus", "write_corpus",
    "GPT_RELEASE", "PANDEMIC_END", "PANDEMIC_START", "REFERENCE_QUARTER",
    "generate_synthetic", "make_rival_indices", "period_of",
    "perturb_ratings", "randomize_ratings", "variance_component_matrix",
    "Corpus", "ExposureDistribution", "JobRecord", "OccupationVignette",
    "PanelCell", "RatingRecord", "SyntheticConfig", "SyntheticTruth", "TaskItem",
]
