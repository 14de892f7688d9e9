"""Chat-completion backends: a deterministic mock and an HTTP client.

The HTTP client speaks the de-facto chat JSON schema (messages array,
temperature) against a configurable endpoint, with the API key read from a
named environment variable. The mock synthesises a well-formed response whose
distributions are a pure hash of (seed, occupation, task, run) and whose
justification keywords track the sampled distribution.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass, field

import numpy as np
import requests

from ..corpus.synthetic import justification_for
from ..corpus.types import ExposureDistribution
from ..errors import BackendError, ConfigError
from .parsing import format_response


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_seconds: float = 1.0


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"                    # mock | http
    endpoint: str = ""
    model_id: str = "mock"
    temperature: float = 0.2
    runs_per_cell: int = 5
    max_parallel: int = 4
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    credential_env: str = "GAISI_API_KEY"
    timeout_seconds: float = 60.0
    mock_seed: int = 0
    mock_noise_sd: float = 0.05

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ConfigError(f"backend kind must be mock or http, got '{self.kind}'")
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError(f"temperature must lie in [0, 2], got {self.temperature}")
        if self.runs_per_cell < 1:
            raise ConfigError("runs_per_cell must be >= 1")
        if self.max_parallel < 1:
            raise ConfigError("max_parallel must be >= 1")
        if self.kind == "http" and not self.endpoint:
            raise ConfigError("http backend needs an endpoint URL")


@dataclass(frozen=True)
class RateRequest:
    occ_code: str
    category: str
    task_ids: tuple
    system_text: str
    user_text: str
    run_index: int
    model_id: str
    temperature: float


def _hash_rng(*parts):
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))

_MOCK_INTERCEPTS = np.array([1.0, 0.35, 0.25, -2.6])
_MOCK_SPREAD = 0.9


def mock_rate(seed, occ_code, task_id, run_index, noise_sd=0.05):
    """Deterministic distribution + justification for one cell-run."""
    base_rng = _hash_rng(seed, occ_code, task_id)
    z = _MOCK_INTERCEPTS + base_rng.normal(0.0, _MOCK_SPREAD, 4)
    if noise_sd > 0:
        z = z + _hash_rng(seed, occ_code, task_id, run_index).normal(0.0, noise_sd, 4)
    e = np.exp(z - z.max())
    p = np.round(e / e.sum(), 10)
    dist = ExposureDistribution(*p)
    return dist, justification_for(dist.as_tuple())


class MockBackend:
    """Offline backend producing parseable responses; counts its calls."""

    def __init__(self, seed=0, noise_sd=0.05, fail_cells=()):
        self.seed = seed
        self.noise_sd = noise_sd
        self.fail_cells = set(fail_cells)
        self.calls = 0

    def complete(self, request: RateRequest) -> str:
        self.calls += 1
        if (request.occ_code, request.category) in self.fail_cells:
            raise BackendError(f"mock failure for cell ({request.occ_code}, {request.category})")
        dists, justs = {}, {}
        for task_id in request.task_ids:
            dist, just = mock_rate(self.seed, request.occ_code, task_id,
                                   request.run_index, self.noise_sd)
            dists[task_id] = dist
            justs[task_id] = just
        preamble = (f"Category analysis for occupation {request.occ_code}, "
                    f"category {request.category}, run {request.run_index}.\n\n")
        return format_response(dists, justs, preamble=preamble)


class HttpChatBackend:
    """Minimal chat-completion client with retry and exponential backoff."""

    def __init__(self, config: BackendConfig, session=None, sleep=time.sleep):
        if config.kind != "http":
            raise ConfigError("HttpChatBackend needs an http backend config")
        key = os.environ.get(config.credential_env, "")
        if not key:
            raise BackendError(
                f"credential environment variable '{config.credential_env}' is not set")
        self._key = key
        self.config = config
        self._session = session or requests.Session()
        self._sleep = sleep

    def complete(self, request: RateRequest) -> str:
        payload = {
            "model": request.model_id,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
        }
        headers = {"Authorization": f"Bearer {self._key}",
                   "Content-Type": "application/json"}
        attempts = self.config.retry.max_attempts
        last = None
        for attempt in range(attempts):
            try:
                resp = self._session.post(self.config.endpoint, json=payload,
                                          headers=headers,
                                          timeout=self.config.timeout_seconds)
                if resp.status_code >= 500:
                    raise BackendError(f"server error {resp.status_code}")
                if resp.status_code != 200:
                    raise BackendError(f"backend returned {resp.status_code}: {resp.text[:200]}")
                data = resp.json()
                return data["choices"][0]["message"]["content"]
            except (requests.RequestException, BackendError, KeyError, IndexError, ValueError) as exc:
                last = exc
                if attempt + 1 < attempts:
                    self._sleep(self.config.retry.backoff_seconds * 2 ** attempt)
        raise BackendError(f"exhausted {attempts} attempts: {last}")


def make_backend(config: BackendConfig):
    if config.kind == "mock":
        return MockBackend(seed=config.mock_seed, noise_sd=config.mock_noise_sd)
    return HttpChatBackend(config)
