"""K-fold cross-validation of the latent-exposure weight.

Each estimation fold fits a weighted logit of adoption on the direct and
latent exposure shares (plus any controls); the implied relative weight is
w2 = beta_latent / beta_direct with a delta-method SE. The held-out fold
scores the derived index e1 + w2 * e2e3 against the canonical 0.5 weighting
by AUC. Folds with beta_direct <= 0 report w2 as undefined.
"""

from __future__ import annotations

import numpy as np

from ..errors import EstimationError
from .design import Design
from .glm import glm_binary
from .ranking import auc

CANONICAL_OMEGA = 0.5


def cv_omega(e1, e2e3, outcome, controls=None, control_names=(), weights=None,
             folds=5, seed=0):
    """Cross-validated estimate of the latent-exposure discount.

    controls: optional n x c matrix appended to the logit design.
    Returns {"folds": [...], "w2_mean", "w2_sd", "n_defined"}.
    """
    e1 = np.asarray(e1, dtype=float)
    e2e3 = np.asarray(e2e3, dtype=float)
    y = np.asarray(outcome, dtype=float)
    n = len(y)
    if folds < 2:
        raise EstimationError("cross-validation needs at least 2 folds")
    if n < 2 * folds:
        raise EstimationError(f"too few observations ({n}) for {folds} folds")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if controls is None:
        controls = np.empty((n, 0))
        control_names = ()
    controls = np.asarray(controls, dtype=float)
    if controls.ndim == 1:
        controls = controls[:, None]

    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    fold_of = np.empty(n, dtype=int)
    fold_of[perm] = np.arange(n) % folds

    names = ("const", "e1", "e2e3") + tuple(control_names)
    results = []
    for f in range(folds):
        test = fold_of == f
        train = ~test
        X = np.column_stack([np.ones(train.sum()), e1[train], e2e3[train], controls[train]])
        fit = glm_binary(Design(y=y[train], X=X, names=names, weights=w[train]), link="logit")
        b1, b2 = fit["e1"], fit["e2e3"]
        i1, i2 = names.index("e1"), names.index("e2e3")
        entry = {
            "fold": f + 1,
            "beta1": b1, "se1": fit.se_of("e1"),
            "beta2": b2, "se2": fit.se_of("e2e3"),
        }
        if b1 <= 0:
            entry.update({"w2": None, "w2_se": None, "defined": False})
            derived = None
        else:
            w2 = b2 / b1
            g = np.zeros(len(names))
            g[i1] = -b2 / b1 ** 2
            g[i2] = 1.0 / b1
            entry.update({"w2": float(w2),
                          "w2_se": float(np.sqrt(g @ fit.cov @ g)),
                          "defined": True})
            derived = e1[test] + w2 * e2e3[test]
        canonical = e1[test] + CANONICAL_OMEGA * e2e3[test]
        y_t, w_t = y[test], w[test]
        entry["auc_canonical"] = auc(canonical, y_t, w_t)["auc"]
        entry["auc_derived"] = auc(derived, y_t, w_t)["auc"] if derived is not None else None
        results.append(entry)

    defined = [r["w2"] for r in results if r["defined"]]
    return {
        "folds": results,
        "w2_mean": float(np.mean(defined)) if defined else None,
        "w2_sd": float(np.std(defined, ddof=1)) if len(defined) > 1 else None,
        "n_defined": len(defined),
    }
