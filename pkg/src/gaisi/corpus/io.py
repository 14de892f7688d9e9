"""File formats and loading/writing for the five corpus components.

Formats (UTF-8, mandatory header row, column order free):
  tasks.csv      task_id, category, text
  vignettes.jsonl one JSON object per line: {occ_code, title, narrative}
  ratings.csv    occ_code, task_id, run_index, p_e0..p_e3, model_id, prompt_id,
                 temperature, justification (RFC-4180 quoting)
  survey.csv     worker_id, wave, occ_code, survey_weight, covariates, outcomes,
                 then one column per task_id holding {1, 0.75, 0.5, 0.25, 0, NA}
  vacancies.csv  occ_code, area_code, year, month, count

Reading a value written by write_corpus reproduces it exactly (floats are
emitted with shortest round-trip repr), so write(load(x)) is content-identical
for canonical fixtures.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import CorpusError, DanglingReferenceError, InvalidDistribution, MalformedRowError
from .types import Corpus, ExposureDistribution, JobRecord, OccupationVignette, PanelCell, RatingRecord, TaskItem

SURVEY_FIXED_COLUMNS = [
    "worker_id", "wave", "occ_code", "survey_weight",
    "female", "age", "age_band", "ethnic_minority", "education", "region",
    "industry", "full_time", "self_employed", "digital_use",
    "ai_use", "log_hourly_pay", "usual_hours",
]

MISSING_TOKENS = {"", "NA", "na", "NaN", "nan", "."}


@dataclass(frozen=True)
class CorpusPaths:
    tasks: Path | None = None
    vignettes: Path | None = None
    ratings: Path | None = None
    survey: Path | None = None
    vacancies: Path | None = None

    @classmethod
    def in_dir(cls, directory):
        d = Path(directory)

        def opt(name):
            p = d / name
            return p if p.exists() else None

        return cls(tasks=opt("tasks.csv"), vignettes=opt("vignettes.jsonl"),
                   ratings=opt("ratings.csv"), survey=opt("survey.csv"),
                   vacancies=opt("vacancies.csv"))


def _fmt(x):
    """Canonical text for a float: shortest round-trip repr, ints without dot."""
    if x is None:
        return "NA"
    if isinstance(x, float) and x.is_integer() and abs(x) < 1e16:
        return repr(int(x))
    return repr(x)


def _float(row_path, line_no, name, raw):
    try:
        return float(raw)
    except ValueError:
        raise MalformedRowError(row_path, line_no, f"column '{name}': expected a number, got '{raw}'") from None


def _int(row_path, line_no, name, raw):
    try:
        return int(raw)
    except ValueError:
        raise MalformedRowError(row_path, line_no, f"column '{name}': expected an integer, got '{raw}'") from None


def _reader(path, required):
    """Yield (line_no, row-dict), validating the header against required columns."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise MalformedRowError(path, 1, "missing header row")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise MalformedRowError(path, 1, f"missing required columns: {', '.join(missing)}")
        for row in reader:
            if None in row or any(v is None for v in row.values()):
                raise MalformedRowError(path, reader.line_num, "row width does not match header")
            yield reader.line_num, row


def load_tasks(path):
    tasks = []
    for line_no, row in _reader(path, ["task_id", "category", "text"]):
        try:
            tasks.append(TaskItem(row["task_id"], row["category"], row["text"]))
        except CorpusError as exc:
            raise MalformedRowError(path, line_no, str(exc)) from None
    return tasks


def load_vignettes(path):
    vignettes = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRowError(path, line_no, f"invalid JSON: {exc.msg}") from None
            try:
                vignettes.append(OccupationVignette(str(obj["occ_code"]), obj.get("title", ""), obj["narrative"]))
            except KeyError as exc:
                raise MalformedRowError(path, line_no, f"missing field {exc}") from None
            except CorpusError as exc:
                raise MalformedRowError(path, line_no, str(exc)) from None
    return vignettes


def load_ratings(path):
    required = ["occ_code", "task_id", "run_index", "p_e0", "p_e1", "p_e2", "p_e3"]
    ratings = []
    for line_no, row in _reader(path, required):
        cell = (row["occ_code"], row["task_id"], row["run_index"])
        probs = [_float(path, line_no, c, row[c]) for c in ("p_e0", "p_e1", "p_e2", "p_e3")]
        try:
            dist = ExposureDistribution(*probs)
        except InvalidDistribution as exc:
            raise MalformedRowError(path, line_no, f"cell {cell}: {exc}") from None
        ratings.append(RatingRecord(
            occ_code=row["occ_code"],
            task_id=row["task_id"],
            run_index=_int(path, line_no, "run_index", row["run_index"]),
            distribution=dist,
            justification=row.get("justification", ""),
            model_id=row.get("model_id", "mock"),
            prompt_id=row.get("prompt_id", "main"),
            temperature=_float(path, line_no, "temperature", row.get("temperature", "0.2")),
        ))
    return ratings


def load_survey(path, task_ids=None, blank_is_zero=False):
    """Load worker microdata.

    Task columns are every non-fixed column (or `task_ids` when given). A
    blank/NA importance cell means "not asked" unless blank_is_zero is set,
    in which case it is read as "not at all important" (0).
    """
    jobs = []
    first = True
    task_cols = list(task_ids) if task_ids is not None else None
    for line_no, row in _reader(path, SURVEY_FIXED_COLUMNS):
        if first:
            first = False
            if task_cols is None:
                task_cols = [c for c in row if c not in SURVEY_FIXED_COLUMNS]
        importance = {}
        for t in task_cols:
            raw = row.get(t, "")
            if raw in MISSING_TOKENS:
                if blank_is_zero:
                    importance[t] = 0.0
                continue
            importance[t] = _float(path, line_no, t, raw)
        def opt_float(name):
            raw = row[name]
            return None if raw in MISSING_TOKENS else _float(path, line_no, name, raw)
        ai_raw = row["ai_use"]
        try:
            jobs.append(JobRecord(
                worker_id=row["worker_id"],
                wave=row["wave"],
                occ_code=row["occ_code"],
                survey_weight=_float(path, line_no, "survey_weight", row["survey_weight"]),
                female=_int(path, line_no, "female", row["female"]),
                age=_int(path, line_no, "age", row["age"]),
                age_band=row["age_band"],
                ethnic_minority=_int(path, line_no, "ethnic_minority", row["ethnic_minority"]),
                education=row["education"],
                region=row["region"],
                industry=row["industry"],
                full_time=_int(path, line_no, "full_time", row["full_time"]),
                self_employed=_int(path, line_no, "self_employed", row["self_employed"]),
                digital_use=_float(path, line_no, "digital_use", row["digital_use"]),
                ai_use=None if ai_raw in MISSING_TOKENS else _int(path, line_no, "ai_use", ai_raw),
                log_hourly_pay=opt_float("log_hourly_pay"),
                usual_hours=opt_float("usual_hours"),
                importance=importance,
            ))
        except CorpusError as exc:
            raise MalformedRowError(path, line_no, str(exc)) from None
    return jobs


def load_vacancies(path):
    cells = []
    for line_no, row in _reader(path, ["occ_code", "area_code", "year", "month", "count"]):
        try:
            cells.append(PanelCell(
                occ_code=row["occ_code"],
                area_code=row["area_code"],
                year=_int(path, line_no, "year", row["year"]),
                month=_int(path, line_no, "month", row["month"]),
                vacancy_count=_int(path, line_no, "count", row["count"]),
            ))
        except CorpusError as exc:
            raise MalformedRowError(path, line_no, str(exc)) from None
    return cells


def _check_references(corpus):
    task_ids = set(corpus.task_ids)
    occ_codes = set(corpus.occ_codes)
    dangling = []
    for r in corpus.ratings:
        if corpus.tasks and r.task_id not in task_ids:
            dangling.append(f"rating ({r.occ_code},{r.task_id},run {r.run_index}): unknown task_id")
        if corpus.vignettes and r.occ_code not in occ_codes:
            dangling.append(f"rating ({r.occ_code},{r.task_id},run {r.run_index}): unknown occ_code")
    if corpus.tasks:
        for j in corpus.jobs:
            for t in j.importance:
                if t not in task_ids:
                    dangling.append(f"worker {j.worker_id}: unknown task_id '{t}'")
    if dangling:
        raise DanglingReferenceError(dangling)


def load_corpus(paths, blank_is_zero=False, check_references=True):
    """Load and cross-validate whichever components the paths provide."""
    if not isinstance(paths, CorpusPaths):
        paths = CorpusPaths(**{k: Path(v) for k, v in dict(paths).items()})
    for name in ("tasks", "vignettes", "ratings", "survey", "vacancies"):
        p = getattr(paths, name)
        if p is not None and not Path(p).exists():
            raise CorpusError(f"{name} file does not exist: {p}")
    tasks = load_tasks(paths.tasks) if paths.tasks else []
    task_ids = [t.task_id for t in tasks] or None
    corpus = Corpus(
        tasks=tuple(tasks),
        vignettes=tuple(load_vignettes(paths.vignettes)) if paths.vignettes else (),
        ratings=tuple(load_ratings(paths.ratings)) if paths.ratings else (),
        jobs=tuple(load_survey(paths.survey, task_ids, blank_is_zero)) if paths.survey else (),
        panel=tuple(load_vacancies(paths.vacancies)) if paths.vacancies else (),
    )
    if check_references:
        _check_references(corpus)
    return corpus


def _open_w(path):
    return open(path, "w", newline="", encoding="utf-8")


def write_tasks(tasks, path):
    with _open_w(path) as fh:
        w = csv.writer(fh)
        w.writerow(["task_id", "category", "text"])
        for t in tasks:
            w.writerow([t.task_id, t.category, t.text])


def write_vignettes(vignettes, path):
    with open(path, "w", encoding="utf-8") as fh:
        for v in vignettes:
            fh.write(json.dumps({"occ_code": v.occ_code, "title": v.title, "narrative": v.narrative},
                                sort_keys=True) + "\n")


def write_ratings(ratings, path):
    with _open_w(path) as fh:
        w = csv.writer(fh)
        w.writerow(["occ_code", "task_id", "run_index", "p_e0", "p_e1", "p_e2", "p_e3",
                    "model_id", "prompt_id", "temperature", "justification"])
        for r in sorted(ratings, key=lambda r: r.key):
            d = r.distribution
            w.writerow([r.occ_code, r.task_id, r.run_index,
                        _fmt(d.p_e0), _fmt(d.p_e1), _fmt(d.p_e2), _fmt(d.p_e3),
                        r.model_id, r.prompt_id, _fmt(r.temperature), r.justification])


def write_survey(jobs, path, task_ids):
    with _open_w(path) as fh:
        w = csv.writer(fh)
        w.writerow(SURVEY_FIXED_COLUMNS + list(task_ids))
        for j in jobs:
            row = [
                j.worker_id, j.wave, j.occ_code, _fmt(j.survey_weight),
                j.female, j.age, j.age_band, j.ethnic_minority, j.education,
                j.region, j.industry, j.full_time, j.self_employed, _fmt(j.digital_use),
                "NA" if j.ai_use is None else j.ai_use,
                _fmt(j.log_hourly_pay), _fmt(j.usual_hours),
            ]
            for t in task_ids:
                v = j.importance.get(t)
                row.append("NA" if v is None else _fmt(v))
            w.writerow(row)


def write_vacancies(panel, path):
    with _open_w(path) as fh:
        w = csv.writer(fh)
        w.writerow(["occ_code", "area_code", "year", "month", "count"])
        for c in sorted(panel, key=lambda c: (c.occ_code, c.area_code, c.year, c.month)):
            w.writerow([c.occ_code, c.area_code, c.year, c.month, c.vacancy_count])


def load_rivals(path):
    """Occupation-keyed rival exposure indices: occ_code column plus one column
    per index. Returns {occ_code: {name: float}} with blank cells missing."""
    rivals = {}
    for line_no, row in _reader(path, ["occ_code"]):
        entry = {}
        for name, raw in row.items():
            if name == "occ_code" or raw in MISSING_TOKENS:
                continue
            entry[name] = _float(path, line_no, name, raw)
        rivals[row["occ_code"]] = entry
    return rivals


def write_rivals(rivals, path):
    names = sorted({n for vals in rivals.values() for n in vals})
    with _open_w(path) as fh:
        w = csv.writer(fh)
        w.writerow(["occ_code"] + names)
        for occ in sorted(rivals):
            w.writerow([occ] + [_fmt(rivals[occ].get(n)) if rivals[occ].get(n) is not None
                                else "NA" for n in names])


def write_corpus(corpus, directory):
    """Write every present component into `directory`; returns the paths written."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = {}
    if corpus.tasks:
        write_tasks(corpus.tasks, d / "tasks.csv")
        written["tasks"] = d / "tasks.csv"
    if corpus.vignettes:
        write_vignettes(corpus.vignettes, d / "vignettes.jsonl")
        written["vignettes"] = d / "vignettes.jsonl"
    if corpus.ratings:
        write_ratings(corpus.ratings, d / "ratings.csv")
        written["ratings"] = d / "ratings.csv"
    if corpus.jobs:
        write_survey(corpus.jobs, d / "survey.csv", corpus.task_ids or sorted(
            {t for j in corpus.jobs for t in j.importance}))
        written["survey"] = d / "survey.csv"
    if corpus.panel:
        write_vacancies(corpus.panel, d / "vacancies.csv")
        written["vacancies"] = d / "vacancies.csv"
    return written
