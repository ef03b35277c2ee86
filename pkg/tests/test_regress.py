"""Weighted least squares, robust covariance, prediction."""

from __future__ import annotations

import numpy as np
import pytest

from eomwage.design import matrix_design
from eomwage.errors import (
    ColumnMismatch,
    InsufficientObservations,
    RankDeficient,
    TooFewClusters,
)
from eomwage.regress import fit_wls, fit_with_covariance, predict, sandwich_cov


def design_from(y, cols, w=None, cluster=None):
    return matrix_design(np.asarray(y, float), cols, weights=w, cluster_ids=cluster)


class TestFit:
    def test_perfect_line(self):
        d = design_from([1, 2, 3], {"const": np.ones(3), "x": np.array([1.0, 2.0, 3.0])})
        fit = fit_wls(d)
        assert fit.coefficients["x"] == pytest.approx(1.0, abs=1e-12)
        assert fit.coefficients["const"] == pytest.approx(0.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0)

    def test_constant_response(self):
        d = design_from([5, 5, 5, 5], {"const": np.ones(4), "x": np.array([1.0, 2, 3, 4])})
        fit = fit_wls(d)
        assert fit.coefficients["x"] == pytest.approx(0.0, abs=1e-12)
        assert fit.r_squared == 0.0

    def test_duplicated_column_names_both(self):
        x = np.array([1.0, 2, 3, 4, 5])
        d = design_from(x + 1, {"const": np.ones(5), "a": x, "b": x.copy()})
        with pytest.raises(RankDeficient) as err:
            fit_wls(d)
        assert {"a", "b"} <= set(err.value.columns)

    def test_insufficient_observations(self):
        d = design_from([1.0, 2.0], {"const": np.ones(2), "x": np.array([0.0, 1.0])})
        with pytest.raises(InsufficientObservations):
            fit_wls(d)

    def test_residual_weighted_orthogonality(self, rng):
        X = rng.standard_normal((80, 3))
        w = rng.uniform(0.5, 2.0, 80)
        y = X @ np.array([1.0, -2.0, 0.5]) + rng.standard_normal(80)
        d = design_from(y, {"a": X[:, 0], "b": X[:, 1], "c": X[:, 2]}, w=w)
        fit = fit_wls(d)
        moments = X.T @ (w * fit.residuals)
        assert np.max(np.abs(moments)) < 1e-8


class TestSandwich:
    def homoskedastic_fit(self, rng, n=10_000):
        x = rng.standard_normal(n)
        y = 1.0 + 0.5 * x + rng.standard_normal(n)
        d = design_from(y, {"const": np.ones(n), "x": x})
        return fit_wls(d), d

    def test_hc1_close_to_classical_under_homoskedasticity(self, rng):
        fit, d = self.homoskedastic_fit(rng)
        hc1 = sandwich_cov(fit, d, "HC1")
        se_hc1 = np.sqrt(np.diag(hc1))
        se_cl = np.sqrt(np.diag(fit.covariance))
        assert np.all(np.abs(se_hc1 / se_cl - 1) < 0.10)

    def test_singleton_clusters_equal_hc1_exactly(self, rng):
        n = 60
        x = rng.standard_normal(n)
        w = rng.uniform(0.5, 2, n)
        y = 1 + x + rng.standard_normal(n) * (1 + 0.5 * np.abs(x))
        d = design_from(y, {"const": np.ones(n), "x": x}, w=w,
                        cluster=np.arange(n).astype(str))
        fit = fit_wls(d)
        np.testing.assert_allclose(sandwich_cov(fit, d, "cluster"),
                                   sandwich_cov(fit, d, "HC1"), rtol=0, atol=1e-12)

    def test_one_cluster_rejected(self, rng):
        n = 20
        d = design_from(rng.standard_normal(n),
                        {"const": np.ones(n), "x": rng.standard_normal(n)},
                        cluster=np.zeros(n).astype(str))
        fit = fit_wls(d)
        with pytest.raises(TooFewClusters):
            sandwich_cov(fit, d, "cluster")

    def test_cluster_covariance_psd_and_symmetric(self, rng):
        n = 200
        x = rng.standard_normal(n)
        cl = rng.choice(list("abcdefgh"), n)
        y = 1 + x + rng.standard_normal(n)
        d = design_from(y, {"const": np.ones(n), "x": x}, cluster=cl)
        fit = fit_wls(d)
        for kind in ("HC1", "cluster"):
            C = sandwich_cov(fit, d, kind)
            assert np.max(np.abs(C - C.T)) < 1e-12
            assert np.linalg.eigvalsh(C).min() > -1e-10 * np.trace(C)


class TestInvariances:
    def test_weight_scaling_leaves_everything(self, rng):
        n = 150
        X = rng.standard_normal((n, 2))
        w = rng.uniform(0.5, 2, n)
        y = X @ np.array([1.0, -0.5]) + rng.standard_normal(n)
        cols = {"a": X[:, 0], "b": X[:, 1]}
        d1 = design_from(y, cols, w=w)
        d2 = design_from(y, cols, w=7.3 * w)
        f1, f2 = fit_wls(d1), fit_wls(d2)
        for nm in ("a", "b"):
            assert f1.coefficients[nm] == pytest.approx(f2.coefficients[nm], rel=1e-12)
        assert f1.r_squared == pytest.approx(f2.r_squared, rel=1e-12)
        np.testing.assert_allclose(sandwich_cov(f1, d1, "HC1"), sandwich_cov(f2, d2, "HC1"),
                                   rtol=1e-10)

    def test_orthogonal_column_leaves_coefficients(self, rng):
        n = 120
        w = rng.uniform(0.5, 2, n)
        X = np.column_stack([np.ones(n), rng.standard_normal(n)])
        y = X @ np.array([1.0, 2.0]) + rng.standard_normal(n)
        # build a column orthogonal (weight metric) to X and y by projection
        raw = rng.standard_normal(n)
        basis = np.column_stack([X, y])
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(basis * sw[:, None], raw * sw, rcond=None)
        ortho = raw - basis @ coef
        d0 = design_from(y, {"const": X[:, 0], "x": X[:, 1]}, w=w)
        d1 = design_from(y, {"const": X[:, 0], "x": X[:, 1], "z": ortho}, w=w)
        f0, f1 = fit_wls(d0), fit_wls(d1)
        assert f1.coefficients["const"] == pytest.approx(f0.coefficients["const"], abs=1e-10)
        assert f1.coefficients["x"] == pytest.approx(f0.coefficients["x"], abs=1e-10)
        assert f1.coefficients["z"] == pytest.approx(0.0, abs=1e-10)


class TestPredict:
    def test_identity_design_returns_coefficients(self):
        d = design_from([2.0, 3.0, 1.0], {"a": np.array([1.0, 0, 0]),
                                          "b": np.array([0.0, 1, 0]),
                                          "c": np.array([0.0, 0, 1])})
        # n must exceed k: use a taller system with an identity block
        X = np.vstack([np.eye(3), np.eye(3)])
        d = matrix_design(np.array([2.0, 3, 1, 2, 3, 1]),
                          {"a": X[:, 0], "b": X[:, 1], "c": X[:, 2]})
        fit = fit_wls(d)
        pred = predict(fit, np.eye(3), names=("a", "b", "c"))
        np.testing.assert_allclose(pred, [2.0, 3.0, 1.0], atol=1e-12)

    def test_training_design_reproduces_fitted(self, rng):
        n = 50
        d = design_from(rng.standard_normal(n),
                        {"const": np.ones(n), "x": rng.standard_normal(n)})
        fit = fit_wls(d)
        np.testing.assert_allclose(predict(fit, d), fit.fitted, atol=1e-12)

    def test_column_mismatch(self, rng):
        n = 30
        d = design_from(rng.standard_normal(n),
                        {"const": np.ones(n), "x": rng.standard_normal(n)})
        fit = fit_wls(d)
        with pytest.raises(ColumnMismatch):
            predict(fit, d.columns, names=("x", "const"))


class TestTags:
    def test_estimator_tags(self, rng):
        n = 60
        d = design_from(rng.standard_normal(n),
                        {"const": np.ones(n), "x": rng.standard_normal(n)},
                        cluster=rng.choice(["a", "b", "c"], n))
        assert fit_with_covariance(d, "classical").estimator_tag == "classical"
        assert fit_with_covariance(d, "HC1").estimator_tag == "HC1"
        assert fit_with_covariance(d, "cluster").estimator_tag == "cluster"

    def test_json_dict(self, rng):
        n = 40
        d = design_from(rng.standard_normal(n),
                        {"const": np.ones(n), "x": rng.standard_normal(n)})
        obj = fit_wls(d).to_json_dict()
        assert set(obj) == {"coefficients", "standard_errors", "estimator_tag",
                            "n", "k", "r_squared", "ssr"}
