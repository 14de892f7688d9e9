"""Parsing of rater responses into per-task distributions and justifications.

Accepts the requested fenced-JSON format and, as a fallback, loose
"E0: 0.4 / E1: ..." text segments keyed by task id. Sums within 1e-3 of 1 are
renormalised; larger deviations raise InvalidDistribution. Tasks absent from
the response raise MissingTask.
"""

from __future__ import annotations

import json
import re

from ..corpus.types import ExposureDistribution
from ..errors import InvalidDistribution, MissingTask, ParseError

LEVELS = ("E0", "E1", "E2", "E3")
_FENCE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)
_NUMBER = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")


def format_response(distributions, justifications=None, preamble=""):
    """The canonical well-formed response for a set of task distributions."""
    justifications = justifications or {}
    payload = {}
    for task_id, dist in distributions.items():
        values = dist.as_tuple() if isinstance(dist, ExposureDistribution) else tuple(dist)
        payload[task_id] = {
            "E0": values[0], "E1": values[1], "E2": values[2], "E3": values[3],
            "justification": justifications.get(task_id, ""),
        }
    body = json.dumps(payload, indent=2, sort_keys=True)
    return f"{preamble}```json\n{body}\n```\n"


def _entries_from_json(raw):
    """Task entries from every parseable fenced JSON block."""
    entries = {}
    for match in _FENCE.finditer(raw):
        try:
            obj = json.loads(match.group(1))
        except json.JSONDecodeError:
            continue
        items = []
        if isinstance(obj, dict):
            items = [(k, v) for k, v in obj.items() if isinstance(v, dict)]
        elif isinstance(obj, list):
            items = [(d.get("task_id"), d) for d in obj if isinstance(d, dict)]
        for task_id, payload in items:
            if task_id is None:
                continue
            levels = {key.upper(): payload[key] for key in payload if key.upper() in LEVELS}
            if len(levels) == len(LEVELS):
                entries[str(task_id)] = (levels, str(payload.get("justification", "")),
                                         match.span())
    return entries


def _segment_spans(raw, expected_tasks):
    """(task_id -> (start, end)) text segments anchored at task-id mentions."""
    positions = []
    for task_id in expected_tasks:
        hits = [m.start() for m in re.finditer(re.escape(task_id), raw)]
        if hits:
            positions.append((hits[-1], task_id))
    positions.sort()
    spans = {}
    for i, (start, task_id) in enumerate(positions):
        end = positions[i + 1][0] if i + 1 < len(positions) else len(raw)
        spans[task_id] = (start, end)
    return spans


def _entry_from_text(raw, span):
    start, end = span
    segment = raw[start:end]
    levels = {}
    for level in LEVELS:
        m = re.search(rf"\b{level}\b\s*[:=]?\s*(\S+)", segment)
        if m is None:
            return None
        token = m.group(1).rstrip(",;)")
        if not _NUMBER.fullmatch(token):
            raise ParseError(f"non-numeric probability '{token}' for {level}",
                             span=(start + m.start(1), start + m.end(1)))
        levels[level] = float(token)
    justification = re.sub(r"\s+", " ", segment).strip()
    return levels, justification, span


def parse_response(raw, expected_tasks):
    """(task_id -> ExposureDistribution, task_id -> justification) or a structured error."""
    raw = raw or ""
    entries = _entries_from_json(raw)
    missing = [t for t in expected_tasks if t not in entries]
    if missing:
        spans = _segment_spans(raw, missing)
        for task_id in list(missing):
            span = spans.get(task_id)
            if span is None:
                continue
            entry = _entry_from_text(raw, span)
            if entry is not None:
                entries[task_id] = entry
    for task_id in expected_tasks:
        if task_id not in entries:
            raise MissingTask(task_id)
    distributions, justifications = {}, {}
    for task_id in expected_tasks:
        levels, justification, span = entries[task_id]
        values = [levels[l] for l in LEVELS]
        for v in values:
            if not isinstance(v, (int, float)):
                raise ParseError(f"non-numeric probability {v!r} for task '{task_id}'", span=span)
        total = float(sum(values))
        if abs(total - 1.0) > 1e-3:
            raise InvalidDistribution((task_id,), total)
        distributions[task_id] = ExposureDistribution(*values)
        justifications[task_id] = justification
    return distributions, justifications
