"""Batch rating with content-addressed caching and a failure manifest.

One request covers every task of an (occupation, category) cell for one run.
Responses are cached under a hash of (system text, user text, model id, run
index); re-running with a warm cache issues no backend calls and reproduces
identical records. Cells that exhaust their retries are recorded in the
failure manifest and the run continues. Cache writes are atomic
(write-temp-then-rename) so interruption leaves the cache consistent; output
ordering is canonical (occupation, task, run) regardless of completion order.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..corpus.types import RatingRecord
from ..errors import BackendError, GaisiError, ParseError
from .backends import BackendConfig, RateRequest, make_backend
from .parsing import parse_response
from .prompts import PromptSpec, render_prompt


def cache_key(system_text, user_text, model_id, run_index):
    payload = json.dumps({"system": system_text, "user": user_text,
                          "model": model_id, "run": run_index}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _cache_path(cache_dir, key):
    return Path(cache_dir) / key[:2] / f"{key}.json"


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class CellFailure:
    occ_code: str
    category: str
    run_index: int
    task_ids: tuple
    error: str

    def to_json(self):
        return {"occ_code": self.occ_code, "category": self.category,
                "run_index": self.run_index, "task_ids": list(self.task_ids),
                "error": self.error}


def write_failure_manifest(failures, path):
    with open(path, "w", encoding="utf-8") as fh:
        for f in sorted(failures, key=lambda f: (f.occ_code, f.category, f.run_index)):
            fh.write(json.dumps(f.to_json(), sort_keys=True) + "\n")
    return path


def _one_request(backend, config, request, cache_dir):
    """Response text for a request, served from cache when possible."""
    key = cache_key(request.system_text, request.user_text, request.model_id,
                    request.run_index)
    path = _cache_path(cache_dir, key)
    if path.exists():
        return json.loads(path.read_text(encoding="utf-8"))["response"], True
    attempts = config.retry.max_attempts
    last = None
    for attempt in range(attempts):
        try:
            response = backend.complete(request)
            break
        except BackendError as exc:
            last = exc
            if attempt + 1 < attempts:
                time.sleep(config.retry.backoff_seconds * 2 ** attempt)
    else:
        raise BackendError(f"cell ({request.occ_code}, {request.category}) run "
                           f"{request.run_index}: {last}")
    _atomic_write(path, json.dumps({"key": key, "model_id": request.model_id,
                                    "run_index": request.run_index,
                                    "response": response}, sort_keys=True))
    return response, False


def rate_corpus(config: BackendConfig, spec: PromptSpec, corpus, cache_dir,
                backend=None, prompt_id=None):
    """Rate every (occupation, category) cell of the corpus runs_per_cell times.

    Returns (records, failures, stats). Records are sorted by (occupation,
    task, run); cardinality is cells x runs minus the tasks listed in
    failures, never silently fewer.
    """
    if not corpus.tasks or not corpus.vignettes:
        raise GaisiError("rating needs tasks and vignettes")
    backend = backend or make_backend(config)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    label = prompt_id or spec.prompt_id

    requests_list = []
    by_category = corpus.tasks_by_category()
    for vignette in sorted(corpus.vignettes, key=lambda v: v.occ_code):
        for category in sorted(by_category):
            tasks = by_category[category]
            system_text, user_text = render_prompt(spec, vignette, category, tasks)
            for run in range(1, config.runs_per_cell + 1):
                requests_list.append(RateRequest(
                    occ_code=vignette.occ_code, category=category,
                    task_ids=tuple(t.task_id for t in tasks),
                    system_text=system_text, user_text=user_text,
                    run_index=run, model_id=config.model_id,
                    temperature=config.temperature,
                ))

    records, failures = [], []
    cache_hits = 0

    def handle(request):
        response, hit = _one_request(backend, config, request, cache_dir)
        dists, justs = parse_response(response, list(request.task_ids))
        recs = [RatingRecord(occ_code=request.occ_code, task_id=task_id,
                             run_index=request.run_index, distribution=dists[task_id],
                             justification=justs[task_id], model_id=request.model_id,
                             prompt_id=label, temperature=request.temperature)
                for task_id in request.task_ids]
        return recs, hit

    with ThreadPoolExecutor(max_workers=config.max_parallel) as pool:
        futures = {pool.submit(handle, r): r for r in requests_list}
        for future, request in futures.items():
            try:
                recs, hit = future.result()
                records.extend(recs)
                cache_hits += int(hit)
            except (BackendError, ParseError) as exc:
                failures.append(CellFailure(request.occ_code, request.category,
                                            request.run_index, request.task_ids,
                                            str(exc)))

    records.sort(key=lambda r: (r.occ_code, r.task_id, r.run_index))
    stats = {"requests": len(requests_list), "cache_hits": cache_hits,
             "failures": len(failures),
             "backend_calls": getattr(backend, "calls", None)}
    return records, failures, stats
