"""Prompt assembly, backends, response parsing, caching, and justification tagging."""

from .backends import (BackendConfig, HttpChatBackend, MockBackend, RateRequest,
                       RetryPolicy, make_backend, mock_rate)
from .parsing import format_response, parse_response
from .prompts import PromptSpec, render_prompt, task_list_string
from .runner import CellFailure, cache_key, rate_corpus, write_failure_manifest
from .tagging import AFFORDANCE_TAGS, CUE_TAGS, JustificationTags, load_lexicon, tag_justification

__all__ = [
    "BackendConfig", "HttpChatBackend", "MockBackend", "RateRequest", "RetryPolicy",
    "make_backend", "mock_rate",
    "format_response", "parse_response",
    "PromptSpec", "render_prompt", "task_list_string",
    "CellFailure", "cache_key", "rate_corpus", "write_failure_manifest",
    "AFFORDANCE_TAGS", "CUE_TAGS", "JustificationTags", "load_lexicon", "tag_justification",
]
