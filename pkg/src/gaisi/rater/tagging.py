"""Keyword tagging of rater justifications.

A deterministic regex lexicon (rater/data/lexicon.csv, columns tag,pattern)
marks five affordance families plus integration, human-constraint,
limited-contribution, uncertainty, and contrast cues. Same text, same tags.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..errors import ConfigError

AFFORDANCE_TAGS = (
    "affordance_text_generation",
    "affordance_knowledge_retrieval",
    "affordance_information_analysis",
    "affordance_planning_scheduling",
    "affordance_multimodal",
)
CUE_TAGS = ("integration_cue", "human_constraint", "limited_contribution",
            "uncertainty_cue", "contrast_cue")


@dataclass(frozen=True)
class JustificationTags:
    affordance_count: int
    affordances: tuple
    integration_cue: bool
    human_constraint: bool
    limited_contribution: bool
    uncertainty_cue: bool
    contrast_cue: bool

    def __post_init__(self):
        if not 0 <= self.affordance_count <= len(AFFORDANCE_TAGS):
            raise ConfigError("affordance_count outside 0..5")


@lru_cache(maxsize=4)
def load_lexicon(path=None):
    """{tag: compiled pattern}; default is the packaged lexicon.csv."""
    if path is None:
        text = resources.files("gaisi.rater.data").joinpath("lexicon.csv").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    lexicon = {}
    for row in csv.DictReader(io.StringIO(text)):
        lexicon[row["tag"]] = re.compile(row["pattern"], re.IGNORECASE)
    missing = [t for t in AFFORDANCE_TAGS + CUE_TAGS if t not in lexicon]
    if missing:
        raise ConfigError(f"lexicon missing tags: {', '.join(missing)}")
    return lexicon


def tag_justification(text, lexicon_path=None) -> JustificationTags:
    lexicon = load_lexicon(lexicon_path)
    text = text or ""
    hits = tuple(tag for tag in AFFORDANCE_TAGS if lexicon[tag].search(text))
    cues = {tag: bool(lexicon[tag].search(text)) for tag in CUE_TAGS}
    return JustificationTags(
        affordance_count=len(hits),
        affordances=hits,
        integration_cue=cues["integration_cue"],
        human_constraint=cues["human_constraint"],
        limited_contribution=cues["limited_contribution"],
        uncertainty_cue=cues["uncertainty_cue"],
        contrast_cue=cues["contrast_cue"],
    )
