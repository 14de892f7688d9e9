"""Command-line pipeline: synth | rate | index | reliability | study | report | validate-config.

Configuration is a flat JSON key-value file (see DEFAULT_CONFIG); command-line
flags override file values, and the effective configuration is echoed into the
output directory. Every command rewrites manifest.json with the sha256 of each
output file (relative paths, cache and echo excluded) so identical inputs give
byte-identical manifests.

Exit codes: 0 success, 1 usage, 2 data validation, 3 backend failure,
4 expectation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import fields as dc_fields
from pathlib import Path

from . import corpus as corpus_mod
from .corpus import (CorpusPaths, SyntheticConfig, generate_synthetic, load_corpus,
                     make_rival_indices, write_corpus)
from .corpus.io import load_rivals, write_rivals
from .errors import (BackendError, ConfigError, CorpusError, ExpectationFailure,
                     GaisiError)
from .index import (coverage_share, occupation_stats, score_corpus, write_cells,
                    write_scores, average_runs)
from .rater import (BackendConfig, PromptSpec, RetryPolicy, rate_corpus,
                    write_failure_manifest)
from .reliability import reliability_report, write_icc_report
from .studies import (STUDY_NAMES, affordance_regression, bias_audit,
                      convergent_validity, cv_omega_study, distribution_study,
                      group_gaps, predictive_validity, robustness_matrix,
                      shift_share, vacancy_event_study, wage_premium)

USAGE_EXIT, DATA_EXIT, BACKEND_EXIT, EXPECTATION_EXIT = 1, 2, 3, 4

DEFAULT_CONFIG = {
    # input files (synth fills corpus_dir itself)
    "corpus_dir": "",
    "rivals": "",
    "out": "out",
    # index parameters
    "omega": 0.5,
    "missing_policy": "exclude",
    "exposure_cut": 0.5,
    "high_percentile": 0.8,
    "min_n": 10,
    "weighted": True,
    "blank_is_zero": False,
    # rater backend
    "backend": "mock",
    "endpoint": "",
    "model_id": "mock",
    "temperature": 0.2,
    "runs": 5,
    "jobs": 4,
    "retry_attempts": 3,
    "retry_backoff": 1.0,
    "credential_env": "GAISI_API_KEY",
    "prompt": "main",
    "threshold": 25,
    "include_examples": True,
    "include_existing_tools": True,
    "mock_seed": 0,
    "mock_noise_sd": 0.05,
    # synthetic generation (synth_* keys override SyntheticConfig fields)
    "seed": 0,
    # optional nested per-study expectations: {"study": {...}}
    "expectations": {},
}

_SYNTH_FIELDS = {f.name for f in dc_fields(SyntheticConfig)}


def load_config(path=None, overrides=None):
    cfg = dict(DEFAULT_CONFIG)
    if path:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        unknown = [k for k in data
                   if k not in DEFAULT_CONFIG and not k.startswith("synth_")]
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(data)
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value
    if not 0.0 <= float(cfg["omega"]) <= 1.0:
        raise ConfigError(f"omega must lie in [0, 1], got {cfg['omega']}")
    if cfg["missing_policy"] not in ("exclude", "zero", "strict"):
        raise ConfigError(f"unknown missing_policy '{cfg['missing_policy']}'")
    if int(cfg["threshold"]) not in (25, 50):
        raise ConfigError("threshold must be 25 or 50")
    if cfg["backend"] not in ("mock", "http"):
        raise ConfigError("backend must be mock or http")
    for key in cfg:
        if key.startswith("synth_") and key[6:] not in _SYNTH_FIELDS:
            raise ConfigError(f"unknown synthetic field '{key}'")
    return cfg


def synthetic_config(cfg):
    kwargs = {"seed": int(cfg["seed"])}
    for key, value in cfg.items():
        if key.startswith("synth_"):
            kwargs[key[6:]] = value
    return SyntheticConfig(**kwargs)


def backend_config(cfg):
    return BackendConfig(
        kind=cfg["backend"], endpoint=cfg["endpoint"], model_id=cfg["model_id"],
        temperature=float(cfg["temperature"]), runs_per_cell=int(cfg["runs"]),
        max_parallel=int(cfg["jobs"]),
        retry=RetryPolicy(int(cfg["retry_attempts"]), float(cfg["retry_backoff"])),
        credential_env=cfg["credential_env"],
        mock_seed=int(cfg["mock_seed"]), mock_noise_sd=float(cfg["mock_noise_sd"]),
    )


def corpus_paths(cfg, out):
    """Input locations: explicit corpus_dir, else the out directory's corpus/."""
    base = Path(cfg["corpus_dir"]) if cfg["corpus_dir"] else Path(out) / "corpus"
    paths = CorpusPaths.in_dir(base)
    rated = Path(out) / "ratings.csv"
    if rated.exists():
        paths = CorpusPaths(tasks=paths.tasks, vignettes=paths.vignettes,
                            ratings=rated, survey=paths.survey,
                            vacancies=paths.vacancies)
    return paths


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out):
    out = Path(out)
    skip = {"manifest.json", "config_echo.json"}
    entries = {}
    for p in sorted(out.rglob("*")):
        if not p.is_file():
            continue
        rel = p.relative_to(out).as_posix()
        if p.name in skip or rel.startswith("cache/"):
            continue
        entries[rel] = _sha256(p)
    payload = json.dumps({"files": entries}, sort_keys=True, indent=2) + "\n"
    (out / "manifest.json").write_text(payload, encoding="utf-8")


def echo_config(cfg, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config_echo.json").write_text(
        json.dumps(cfg, sort_keys=True, indent=2) + "\n", encoding="utf-8")


# --- subcommands ---

def cmd_synth(cfg, out):
    corpus = generate_synthetic(synthetic_config(cfg))
    cdir = Path(out) / "corpus"
    write_corpus(corpus, cdir)
    write_rivals(make_rival_indices(corpus, seed=int(cfg["seed"])), cdir / "rivals.csv")
    truth = {
        "occ3_high_share": corpus.truth.occ3_high_share,
        "planted": {
            "adoption_beta0": corpus.truth.config.adoption_beta0,
            "adoption_beta1": corpus.truth.config.adoption_beta1,
            "adoption_beta2": corpus.truth.config.adoption_beta2,
            "wage_gaisi": corpus.truth.config.wage_gaisi,
            "wage_did": corpus.truth.config.wage_did,
            "vacancy_slope_post": corpus.truth.config.vacancy_slope_post,
        },
    }
    (cdir / "truth.json").write_text(json.dumps(truth, sort_keys=True, indent=2) + "\n",
                                     encoding="utf-8")
    print(f"synth: {len(corpus.jobs)} workers, {len(corpus.ratings)} ratings, "
          f"{len(corpus.panel)} panel cells -> {cdir}")
    return 0


def cmd_rate(cfg, out):
    paths = corpus_paths(cfg, out)
    corpus = load_corpus(CorpusPaths(tasks=paths.tasks, vignettes=paths.vignettes),
                         check_references=False)
    spec = PromptSpec.load(cfg["prompt"], threshold_pct=int(cfg["threshold"]),
                           include_examples=bool(cfg["include_examples"]),
                           include_existing_tools=bool(cfg["include_existing_tools"]))
    records, failures, stats = rate_corpus(backend_config(cfg), spec, corpus,
                                           Path(out) / "cache")
    corpus_mod.io.write_ratings(records, Path(out) / "ratings.csv")
    write_failure_manifest(failures, Path(out) / "rate_failures.jsonl")
    print(f"rate: {len(records)} records, {len(failures)} failed cells, "
          f"{stats['cache_hits']}/{stats['requests']} cache hits")
    return 0


def _load_full(cfg, out):
    paths = corpus_paths(cfg, out)
    return load_corpus(paths, blank_is_zero=bool(cfg["blank_is_zero"]))


def cmd_index(cfg, out):
    corpus = _load_full(cfg, out)
    cells = average_runs(corpus.ratings)
    write_cells(cells, Path(out) / "cells.csv")
    scores, undefined = score_corpus(corpus, missing_policy=cfg["missing_policy"],
                                     omega=float(cfg["omega"]))
    write_scores(scores, Path(out) / "scores.csv")
    if undefined:
        (Path(out) / "undefined_workers.json").write_text(
            json.dumps(sorted(undefined), indent=2) + "\n", encoding="utf-8")
    print(f"index: {len(cells)} cells, {len(scores)} scores, "
          f"{len(undefined)} undefined workers")
    return 0


def cmd_reliability(cfg, out):
    corpus = _load_full(cfg, out)
    results = reliability_report(corpus.ratings)
    write_icc_report(results, Path(out) / "icc_report.json")
    for level, r in sorted(results.items()):
        print(f"reliability {level}: ICC(A,1)={r.icc_single:.4f} "
              f"ICC(A,k)={r.icc_average:.4f} (n={r.n_subjects}, k={r.k_raters})")
    return 0


def _study_inputs(cfg, out):
    corpus = _load_full(cfg, out)
    scores, _ = score_corpus(corpus, missing_policy=cfg["missing_policy"],
                             omega=float(cfg["omega"]))
    jobs = [j for j in corpus.jobs if j.worker_id in scores]
    rivals = None
    rival_path = cfg["rivals"] or (Path(out) / "corpus" / "rivals.csv")
    if rival_path and Path(rival_path).exists():
        rivals = load_rivals(rival_path)
    return corpus, jobs, scores, rivals


def run_study(name, cfg, out):
    corpus, jobs, scores, rivals = _study_inputs(cfg, out)
    exp = (cfg.get("expectations") or {}).get(name, {}) or None
    weighted = bool(cfg["weighted"])
    if name == "distribution":
        return distribution_study(jobs, scores, weighted=weighted,
                                  high_threshold=float(cfg["exposure_cut"]),
                                  min_n=int(cfg["min_n"]), expectations=exp)
    if name == "shift-share":
        sc0 = {j.worker_id: scores[j.worker_id] for j in jobs if j.wave == "2017"}
        sc1 = {j.worker_id: scores[j.worker_id] for j in jobs if j.wave == "2023-24"}
        if not sc0 or not sc1:
            raise CorpusError("shift-share needs workers in both waves")
        return shift_share(jobs, sc0, sc1, weighted=weighted, expectations=exp)
    if name == "group-gaps":
        return group_gaps(jobs, scores, weighted=weighted)
    if name == "wage-premium":
        return wage_premium(jobs, scores, weighted=weighted, expectations=exp)
    if name == "vacancies":
        stats_by_occ, _ = occupation_stats(scores, jobs, min_n=int(cfg["min_n"]),
                                           high_percentile=float(cfg["high_percentile"]),
                                           weighted=weighted)
        shares = {occ: st.high_share for occ, st in stats_by_occ.items()}
        return vacancy_event_study(corpus.panel, shares, expectations=exp)
    if name == "predictive":
        _, loo = occupation_stats(scores, jobs, min_n=int(cfg["min_n"]),
                                  weighted=weighted)
        coverage = coverage_share(jobs, weighted=weighted)
        return predictive_validity(jobs, scores, rivals=rivals, loo_means=loo,
                                   coverage=coverage, weighted=weighted,
                                   expectations=exp)
    if name == "convergent":
        if not rivals:
            raise CorpusError("convergent validity needs a rivals.csv")
        return convergent_validity(jobs, scores, rivals, weighted=weighted,
                                   expectations=exp)
    if name == "bias-audit":
        return bias_audit(jobs, scores, task_ids=list(corpus.task_ids),
                          weighted=weighted, expectations=exp)
    if name == "affordances":
        return affordance_regression(corpus.ratings, expectations=exp)
    if name == "robustness":
        variants = {
            "reference": list(corpus.ratings),
            "perturbed": corpus_mod.perturb_ratings(corpus.ratings, 0.05,
                                                    int(cfg["seed"]) + 1),
            "random": corpus_mod.randomize_ratings(corpus.ratings,
                                                   int(cfg["seed"]) + 2),
        }
        return robustness_matrix(variants, jobs, "reference",
                                 omega=float(cfg["omega"]), weighted=weighted,
                                 expectations=exp)
    if name == "cv-omega":
        return cv_omega_study(jobs, scores, seed=int(cfg["seed"]),
                              weighted=weighted, expectations=exp)
    raise ConfigError(f"unknown study '{name}'")


def cmd_study(cfg, out, name):
    names = list(STUDY_NAMES) if name == "all" else [name]
    if any(n not in STUDY_NAMES for n in names):
        print(f"unknown study '{name}'. available: {', '.join(STUDY_NAMES)} | all",
              file=sys.stderr)
        return USAGE_EXIT
    sdir = Path(out) / "studies"
    sdir.mkdir(parents=True, exist_ok=True)
    for n in names:
        try:
            result = run_study(n, cfg, out)
        except CorpusError as exc:
            if name == "all":
                print(f"study {n}: skipped ({exc})")
                continue
            raise
        result.write_json(sdir / f"{result.study}.json")
        result.write_tables(sdir)
        status = "ok" if result.passed else "EXPECTATION FAIL"
        print(f"study {n}: {status} ({len(result.tables)} tables, "
              f"{len(result.expectations)} expectations)")
    return 0


def cmd_report(cfg, out):
    sdir = Path(out) / "studies"
    files = sorted(sdir.glob("*.json")) if sdir.exists() else []
    if not files:
        raise CorpusError(f"no study results under {sdir}; run `study` first")
    lines = ["# Pipeline report", ""]
    n_fail = 0
    for path in files:
        data = json.loads(path.read_text(encoding="utf-8"))
        lines.append(f"## {data['study']}")
        lines.append("")
        for digest_name, digest in sorted(data.get("input_digests", {}).items()):
            lines.append(f"- input `{digest_name}`: `{digest[:16]}`")
        expectations = data.get("expectations", [])
        if not expectations:
            lines.append("- no expectations declared")
        for e in expectations:
            status = e["status"].upper()
            if e["status"] == "fail":
                n_fail += 1
            detail = ""
            if e.get("observed") is not None:
                detail = f" (observed {e['observed']}, target {e['target']})"
            lines.append(f"- [{status}] {e['name']}{detail}")
        for note in data.get("notes", []):
            lines.append(f"- note: {note}")
        lines.append("")
    lines.append(f"Total expectation failures: {n_fail}")
    (Path(out) / "report.md").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"report: {len(files)} studies, {n_fail} expectation failures -> "
          f"{Path(out) / 'report.md'}")
    if n_fail:
        raise ExpectationFailure(f"{n_fail} expectations failed")
    return 0


def cmd_validate_config(cfg, config_path):
    problems = []
    if cfg["corpus_dir"]:
        base = Path(cfg["corpus_dir"])
        if not base.exists():
            problems.append(f"corpus_dir does not exist: {base}")
    if cfg["rivals"] and not Path(cfg["rivals"]).exists():
        problems.append(f"rivals file does not exist: {cfg['rivals']}")
    if cfg["backend"] == "http" and not cfg["endpoint"]:
        problems.append("http backend configured without an endpoint")
    try:
        synthetic_config(cfg)
    except (ConfigError, TypeError) as exc:
        problems.append(f"synthetic config: {exc}")
    try:
        backend_config(cfg)
    except ConfigError as exc:
        problems.append(f"backend config: {exc}")
    for study, exp in (cfg.get("expectations") or {}).items():
        if study not in STUDY_NAMES:
            problems.append(f"expectations for unknown study '{study}'")
        elif not isinstance(exp, dict):
            problems.append(f"expectations for '{study}' must be an object")
    if problems:
        for p in problems:
            print(f"config problem: {p}", file=sys.stderr)
        raise CorpusError(f"{len(problems)} config problems")
    print(f"config ok ({config_path or 'defaults'})")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def build_parser():
    parser = _Parser(prog="gaisi", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--omega", type=float, default=None)
        p.add_argument("--backend", choices=["mock", "http"], default=None)
        p.add_argument("--runs", type=int, default=None, help="rating runs per cell")
        p.add_argument("--threshold", type=int, choices=[25, 50], default=None,
                       help="time-saving threshold in the prompt")
        p.add_argument("--jobs", type=int, default=None, help="max parallel requests")
        return p

    common(sub.add_parser("synth", help="generate a planted-effect synthetic corpus"))
    common(sub.add_parser("rate", help="rate every occupation-category cell"))
    common(sub.add_parser("index", help="cell means and worker scores"))
    common(sub.add_parser("reliability", help="ICC report across runs"))
    ps = common(sub.add_parser("study", help="run a named study (or `all`)"))
    ps.add_argument("name", help=f"one of: {', '.join(STUDY_NAMES)} | all")
    common(sub.add_parser("report", help="collate study results into report.md"))
    pv = common(sub.add_parser("validate-config", help="check a config file"))
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {key: getattr(args, key, None)
                 for key in ("out", "seed", "omega", "backend", "runs",
                             "threshold", "jobs")}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        cfg = load_config(args.config, overrides)
        out = cfg["out"]
        if args.command != "validate-config":
            echo_config(cfg, out)
        if args.command == "synth":
            code = cmd_synth(cfg, out)
        elif args.command == "rate":
            code = cmd_rate(cfg, out)
        elif args.command == "index":
            code = cmd_index(cfg, out)
        elif args.command == "reliability":
            code = cmd_reliability(cfg, out)
        elif args.command == "study":
            code = cmd_study(cfg, out, args.name)
        elif args.command == "report":
            code = cmd_report(cfg, out)
        elif args.command == "validate-config":
            return cmd_validate_config(cfg, args.config)
        else:  # pragma: no cover
            return USAGE_EXIT
        if code == 0:
            write_manifest(out)
        return code
    except ExpectationFailure as exc:
        write_manifest(cfg["out"])
        print(f"error: {exc}", file=sys.stderr)
        return EXPECTATION_EXIT
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BACKEND_EXIT
    except (CorpusError, ConfigError, GaisiError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
