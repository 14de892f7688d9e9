"""Uniform study artifact: named tables, figure data, expectation flags."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PASS, FAIL, NA = "pass", "fail", "not-applicable"


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if not np.isfinite(v) else v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def content_digest(*parts):
    """Stable digest of canonically-serialised inputs (reproducibility echo)."""
    h = hashlib.sha256()
    for part in parts:
        h.update(json.dumps(jsonable(part), sort_keys=True, default=repr).encode())
    return h.hexdigest()


@dataclass
class StudyResult:
    study: str
    input_digests: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)     # name -> {"columns": [...], "rows": [...]}
    figures: dict = field(default_factory=dict)    # name -> {"columns": [...], "rows": [...]}
    expectations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add_table(self, name, columns, rows):
        self.tables[name] = {"columns": list(columns), "rows": [list(r) for r in rows]}

    def add_figure(self, name, columns, rows):
        self.figures[name] = {"columns": list(columns), "rows": [list(r) for r in rows]}

    def add_fit(self, name, fit, keep=None):
        """Coefficient block from a FitResult, optionally restricted to `keep` terms."""
        rows = []
        for i, term in enumerate(fit.names):
            if keep is not None and term not in keep:
                continue
            rows.append([term, float(fit.coef[i]), float(fit.se[i]),
                         float(fit.stat[i]), float(fit.pvalues[i])])
        self.tables[name] = {"columns": ["term", "estimate", "se", "stat", "p"],
                             "rows": rows,
                             "n": fit.n, "r2": fit.r2, "r2_within": fit.r2_within,
                             "cov_type": fit.cov_type}

    def expect(self, name, status, observed=None, target=None, note=""):
        self.expectations.append({"name": name, "status": status,
                                  "observed": jsonable(observed),
                                  "target": jsonable(target), "note": note})

    def expect_close(self, name, observed, target, tol, note=""):
        ok = observed is not None and abs(observed - target) <= tol
        self.expect(name, PASS if ok else FAIL, observed, target,
                    note or f"|observed - target| <= {tol}")

    def expect_true(self, name, condition, observed=None, target=None, note=""):
        self.expect(name, PASS if condition else FAIL, observed, target, note)

    @property
    def passed(self):
        return all(e["status"] != FAIL for e in self.expectations)

    def to_dict(self):
        return jsonable({
            "study": self.study,
            "input_digests": self.input_digests,
            "params": self.params,
            "tables": self.tables,
            "figures": self.figures,
            "expectations": self.expectations,
            "notes": self.notes,
        })

    def write_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n",
                              encoding="utf-8")
        return path

    def write_tables(self, directory):
        """Every table and figure as a CSV under `directory`; returns the paths."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = []
        for kind, blocks in (("table", self.tables), ("figure", self.figures)):
            for name, block in sorted(blocks.items()):
                p = d / f"{self.study}__{kind}__{name}.csv"
                with open(p, "w", newline="", encoding="utf-8") as fh:
                    w = csv.writer(fh)
                    w.writerow(block["columns"])
                    for row in block["rows"]:
                        w.writerow(["" if v is None else v for v in jsonable(row)])
                paths.append(p)
        return paths
