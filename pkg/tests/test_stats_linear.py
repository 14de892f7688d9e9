import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaisi.errors import CollinearityError, EstimationError
from gaisi.stats import Design, check_psd, cluster_cov, cluster_fit, hc1_cov, wls_fe


def dummy_oracle(y, X, w, factors):
    """Frisch-Waugh projection onto the explicit dummy span (independent route)."""
    n = len(y)
    blocks = []
    for f in factors:
        levels = np.unique(f)
        blocks.append((f[:, None] == levels[None, :]).astype(float))
    if blocks:
        D = np.column_stack(blocks)
        sw = np.sqrt(w)
        stacked = np.column_stack([y, X])
        coefs, *_ = np.linalg.lstsq(D * sw[:, None], stacked * sw[:, None], rcond=None)
        resid = stacked - D @ coefs
        y_t, X_t = resid[:, 0], resid[:, 1:]
    else:
        y_t, X_t = y, X
    return np.linalg.solve(X_t.T @ (w[:, None] * X_t), X_t.T @ (w * y_t))


def random_design(rng, n=None, k=None, n_factors=None, max_rows=500):
    n = n or int(rng.integers(30, max_rows + 1))
    k = k or int(rng.integers(1, 4))
    n_factors = rng.integers(0, 4) if n_factors is None else n_factors
    X = rng.normal(size=(n, k))
    w = np.exp(rng.normal(0, 0.4, n))
    factors = tuple(rng.integers(0, rng.integers(2, 8), n) for _ in range(n_factors))
    beta = rng.normal(size=k)
    y = X @ beta + rng.normal(size=n)
    for f in factors:
        y = y + rng.normal(size=int(f.max()) + 1)[f]
    names = tuple(f"x{j}" for j in range(k))
    if n_factors == 0:
        X = np.column_stack([np.ones(n), X])
        names = ("const",) + names
    return Design(y=y, X=X, names=names, weights=w, fixed_effects=factors)


class TestWlsFe:
    def test_single_factor_exact(self):
        rng = np.random.default_rng(0)
        n = 120
        f = rng.integers(0, 2, n)
        X = rng.normal(size=(n, 2))
        w = np.exp(rng.normal(0, 0.3, n))
        y = X @ [1.0, -0.5] + f * 2.0 + rng.normal(size=n)
        d = Design(y=y, X=X, names=("a", "b"), weights=w, fixed_effects=(f,))
        fit = wls_fe(d)
        oracle = dummy_oracle(y, X, w, [f])
        assert fit.coef == pytest.approx(oracle, abs=1e-10)

    def test_three_factor_200_rows(self):
        rng = np.random.default_rng(1)
        d = random_design(rng, n=200, k=2, n_factors=3)
        fit = wls_fe(d)
        oracle = dummy_oracle(d.y, d.X, d.weights, list(d.fixed_effects))
        assert fit.coef == pytest.approx(oracle, abs=1e-6)

    def test_randomized_equivalence(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            d = random_design(rng, max_rows=300)
            fit = wls_fe(d)
            oracle = dummy_oracle(d.y, d.X, d.weights, list(d.fixed_effects))
            assert fit.coef == pytest.approx(oracle, abs=1e-6)

    def test_collinear_named(self):
        rng = np.random.default_rng(3)
        n = 50
        x = rng.normal(size=n)
        X = np.column_stack([np.ones(n), x, 2 * x])
        with pytest.raises(CollinearityError) as err:
            wls_fe(Design(y=rng.normal(size=n), X=X, names=("const", "x", "x_twice")))
        assert "x_twice" in err.value.columns or "x" in err.value.columns

    def test_fe_absorbed_constant_rejected(self):
        rng = np.random.default_rng(4)
        n = 40
        f = rng.integers(0, 3, n)
        X = np.column_stack([np.ones(n), rng.normal(size=n)])
        with pytest.raises(CollinearityError) as err:
            wls_fe(Design(y=rng.normal(size=n), X=X, names=("const", "x"),
                          fixed_effects=(f,)))
        assert "const" in err.value.columns

    def test_no_nan_accepted(self):
        with pytest.raises(EstimationError):
            Design(y=np.array([1.0, np.nan]), X=np.ones((2, 1)), names=("c",))

    def test_r2_within_present_only_with_fe(self):
        rng = np.random.default_rng(5)
        d0 = random_design(rng, n=100, k=2, n_factors=0)
        d1 = random_design(rng, n=100, k=2, n_factors=1)
        assert wls_fe(d0).r2_within is None
        assert wls_fe(d1).r2_within is not None

    def test_covariance_psd(self):
        rng = np.random.default_rng(6)
        d = random_design(rng, n=150, k=3, n_factors=2)
        fit = wls_fe(d)
        assert check_psd(fit.cov)


class TestClusterCov:
    def oracle_meat(self, scores, cluster):
        """Literal per-cluster outer-product summation."""
        K = scores.shape[1]
        meat = np.zeros((K, K))
        for g in np.unique(cluster):
            sg = scores[cluster == g].sum(axis=0)
            meat += np.outer(sg, sg)
        return meat

    def test_singleton_equals_hc1(self):
        rng = np.random.default_rng(7)
        d = random_design(rng, n=80, k=2, n_factors=0)
        fit = wls_fe(d)
        singles = cluster_cov(fit, np.arange(d.n))
        hc1 = hc1_cov(fit)
        assert singles == pytest.approx(hc1, abs=1e-12)
        # literal HC1 oracle
        X = fit._X
        w = fit._weights
        u = d.y - fit._fitted
        bread = np.linalg.inv(X.T @ (w[:, None] * X))
        meat = (X * (w * u)[:, None]).T @ (X * (w * u)[:, None])
        expected = d.n / (d.n - fit.meta["k_total"]) * bread @ meat @ bread
        assert hc1 == pytest.approx(expected, abs=1e-12)

    def test_thirty_row_five_cluster_oracle(self):
        rng = np.random.default_rng(8)
        n, G = 30, 5
        cluster = np.repeat(np.arange(G), n // G)
        X = np.column_stack([np.ones(n), rng.normal(size=n)])
        w = np.exp(rng.normal(0, 0.2, n))
        y = X @ [1.0, 0.7] + rng.normal(size=n)[cluster % n] + rng.normal(size=n)
        fit = wls_fe(Design(y=y, X=X, names=("const", "x"), weights=w))
        cov = cluster_cov(fit, cluster)
        meat = self.oracle_meat(fit._scores, cluster)
        bread = fit._bread_inv
        factor = (G / (G - 1)) * ((n - 1) / (n - 2))
        assert cov == pytest.approx(factor * bread @ meat @ bread, abs=1e-12)

    def test_single_cluster_rejected(self):
        rng = np.random.default_rng(9)
        d = random_design(rng, n=40, k=1, n_factors=0)
        fit = wls_fe(d)
        with pytest.raises(EstimationError):
            cluster_cov(fit, np.zeros(d.n))

    def test_duplication_halved_weights_invariance(self):
        rng = np.random.default_rng(10)
        n = 60
        X = np.column_stack([np.ones(n), rng.normal(size=n)])
        w = np.exp(rng.normal(0, 0.3, n))
        y = X @ [0.5, -1.0] + rng.normal(size=n)
        base = wls_fe(Design(y=y, X=X, names=("const", "x"), weights=w))
        doubled = wls_fe(Design(y=np.concatenate([y, y]),
                                X=np.vstack([X, X]),
                                names=("const", "x"),
                                weights=np.concatenate([w / 2, w / 2])))
        assert doubled.coef == pytest.approx(base.coef, abs=1e-12)

    def test_cluster_fit_dof(self):
        rng = np.random.default_rng(11)
        d = random_design(rng, n=90, k=2, n_factors=1)
        fit = wls_fe(d)
        cl = np.arange(90) % 9
        cfit = cluster_fit(fit, cl)
        assert cfit.cov_type == "cluster"
        assert cfit.df_resid == 8
        assert check_psd(cfit.cov)
