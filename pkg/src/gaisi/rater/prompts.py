"""Prompt specification and deterministic rendering.

Templates are plain text with named placeholders; unknown or unresolved
placeholder names raise. The examples block and the existing-tools clause are
toggled by PromptSpec flags, and the four exposure-level definitions carry the
configured time-saving threshold.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from ..errors import ConfigError, GaisiError

DATA_PACKAGE = "gaisi.rater.data"
THRESHOLDS = (25, 50)

DEFAULT_SYSTEM_TEXT = (
    "You are an expert assessor of how large language models (LLMs) change the "
    "time that work tasks need. For each task you estimate a probability "
    "distribution over four exposure levels{existing_tools_clause}."
)

_SYSTEM_TOOLS_CLAUSE = ", crediting only what LLMs add beyond the tools already in use"
_USER_TOOLS_CLAUSE = ", and credit only time savings beyond what those tools already deliver"

_PLACEHOLDER = re.compile(r"\{([a-z_][a-z0-9_]*)\}")
KNOWN_PLACEHOLDERS = {
    "examples", "occupation_details", "occupation_code", "category_name",
    "task_list_str", "threshold_pct", "existing_tools_clause",
}


def _read_data(name):
    return resources.files(DATA_PACKAGE).joinpath(name).read_text(encoding="utf-8")


@dataclass(frozen=True)
class PromptSpec:
    prompt_id: str
    system_text: str
    user_template: str
    threshold_pct: int = 25
    include_examples: bool = True
    include_existing_tools: bool = True

    def __post_init__(self):
        if self.threshold_pct not in THRESHOLDS:
            raise ConfigError(f"threshold_pct must be one of {THRESHOLDS}, got {self.threshold_pct}")

    @classmethod
    def load(cls, prompt_id="main", **overrides):
        """Built-in templates: 'main' (full rubric) or 'simplified'."""
        if prompt_id not in ("main", "simplified"):
            raise ConfigError(f"unknown built-in prompt '{prompt_id}'")
        template = _read_data(f"{prompt_id}_prompt.txt")
        return cls(prompt_id=prompt_id, system_text=DEFAULT_SYSTEM_TEXT,
                   user_template=template, **overrides)


def _substitute(template, mapping):
    out = template
    for name, value in mapping.items():
        out = out.replace("{%s}" % name, value)
    leftovers = [m.group(1) for m in _PLACEHOLDER.finditer(out)
                 if m.group(1) in KNOWN_PLACEHOLDERS or m.group(1).isidentifier()]
    # tolerate brace patterns that are not placeholder-like words inside JSON examples
    leftovers = [name for name in leftovers if name in KNOWN_PLACEHOLDERS]
    if leftovers:
        raise GaisiError(f"unresolved placeholders: {', '.join(sorted(set(leftovers)))}")
    return out


def task_list_string(tasks):
    return "\n".join(f"- {t.task_id}: {t.text}" for t in tasks)


def render_prompt(spec: PromptSpec, vignette, category, tasks):
    """Deterministic (system_text, user_text) for one occupation-category cell."""
    if not tasks:
        raise GaisiError("cannot render a prompt for an empty task list")
    off_category = [t.task_id for t in tasks if t.category != category]
    if off_category:
        raise GaisiError(f"tasks outside category '{category}': {', '.join(off_category)}")
    examples = ""
    if spec.include_examples:
        examples = _read_data("examples.txt").rstrip() + "\n\n"
    tools_user = _USER_TOOLS_CLAUSE if spec.include_existing_tools else ""
    tools_system = _SYSTEM_TOOLS_CLAUSE if spec.include_existing_tools else ""
    occupation_details = f"{vignette.title} (occupation code {vignette.occ_code}). {vignette.narrative}"
    mapping = {
        "examples": examples,
        "occupation_details": occupation_details,
        "occupation_code": vignette.occ_code,
        "category_name": category,
        "task_list_str": task_list_string(tasks),
        "threshold_pct": str(spec.threshold_pct),
        "existing_tools_clause": tools_user,
    }
    user_text = _substitute(spec.user_template, mapping)
    system_text = _substitute(spec.system_text, {**mapping, "existing_tools_clause": tools_system})
    for t in tasks:
        count = user_text.count(t.text)
        if count != 1:
            raise GaisiError(f"task '{t.task_id}' appears {count} times in the rendered prompt")
    if f"{spec.threshold_pct}%" not in user_text:
        raise GaisiError("rendered prompt does not state the configured threshold")
    return system_text, user_text
