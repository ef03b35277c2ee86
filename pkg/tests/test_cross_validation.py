"""Cross-validation against statsmodels on unit weights.

A third, fully independent implementation route: at unit weights the
estimator conventions coincide, so coefficients, standard errors, and test
statistics must agree to numerical precision. Skipped when statsmodels is
not installed.
"""

from __future__ import annotations

import numpy as np
import pytest

sm = pytest.importorskip("statsmodels.api")

from eomwage.design import matrix_design
from eomwage.diagnostics import breusch_pagan
from eomwage.lewbel import InstrumentSet, fit_2sls
from eomwage.regress import fit_wls, sandwich_cov
from eomwage.selection import fit_probit


@pytest.fixture
def ols_problem(rng):
    n = 400
    x = rng.standard_normal(n)
    y = 1 + 0.5 * x + rng.standard_normal(n) * (1 + 0.3 * np.abs(x))
    cl = rng.choice(list("abcdefgh"), n)
    design = matrix_design(y, {"const": np.ones(n), "x": x}, cluster_ids=cl)
    return y, np.column_stack([np.ones(n), x]), cl, design


class TestLeastSquares:
    def test_coefficients_and_classical_se(self, ols_problem):
        y, X, _, design = ols_problem
        ref = sm.OLS(y, X).fit()
        fit = fit_wls(design)
        np.testing.assert_allclose(fit.coef_vector, ref.params, atol=1e-12)
        np.testing.assert_allclose(np.sqrt(np.diag(fit.covariance)), ref.bse, atol=1e-12)
        assert fit.r_squared == pytest.approx(ref.rsquared, abs=1e-12)

    def test_hc1(self, ols_problem):
        y, X, _, design = ols_problem
        ref = sm.OLS(y, X).fit(cov_type="HC1")
        fit = fit_wls(design)
        np.testing.assert_allclose(np.sqrt(np.diag(sandwich_cov(fit, design, "HC1"))),
                                   ref.bse, atol=1e-12)

    def test_cluster(self, ols_problem):
        y, X, cl, design = ols_problem
        ref = sm.OLS(y, X).fit(cov_type="cluster", cov_kwds={"groups": cl})
        fit = fit_wls(design)
        np.testing.assert_allclose(np.sqrt(np.diag(sandwich_cov(fit, design, "cluster"))),
                                   ref.bse, atol=1e-12)


class TestProbit:
    def test_coefficients_se_loglik(self, rng):
        n = 600
        x = rng.standard_normal(n)
        s = (0.3 + 0.8 * x + rng.standard_normal(n) > 0).astype(float)
        X = np.column_stack([np.ones(n), x])
        ref = sm.Probit(s, X).fit(disp=0)
        fit = fit_probit(matrix_design(s, {"const": np.ones(n), "x": x}))
        np.testing.assert_allclose(fit.coef_vector, ref.params, atol=1e-8)
        np.testing.assert_allclose(list(fit.standard_errors.values()), ref.bse, atol=1e-8)
        assert fit.log_likelihood == pytest.approx(ref.llf, abs=1e-8)


class TestBreuschPagan:
    def test_lm_statistic(self, ols_problem):
        import statsmodels.stats.diagnostic as smd

        y, X, _, design = ols_problem
        fit = fit_wls(design)
        res = breusch_pagan(fit, design)
        lm, lm_p, _, _ = smd.het_breuschpagan(
            fit.residuals, np.column_stack([np.ones(design.n), fit.fitted]))
        assert res.statistic == pytest.approx(lm, abs=1e-10)
        assert res.p_value == pytest.approx(lm_p, abs=1e-10)


class TestTwoSLS:
    def test_coefficients_and_se(self, rng):
        from statsmodels.sandbox.regression.gmm import IV2SLS

        n = 800
        x = rng.standard_normal(n)
        z = rng.standard_normal((n, 2))
        common = rng.standard_normal(n)
        en = 0.5 * x + z @ np.ones(2) + 0.6 * common + rng.standard_normal(n)
        y = 1 + 0.5 * en + x + common
        ref = IV2SLS(y, np.column_stack([np.ones(n), en, x]),
                     instrument=np.column_stack([np.ones(n), x, z])).fit()
        design = matrix_design(y, {"const": np.ones(n), "en": en, "x": x})
        instruments = InstrumentSet(external={"z0": z[:, 0], "z1": z[:, 1]},
                                    included_exogenous=("const", "x"))
        tsls = fit_2sls(design, ["en"], instruments, covariance="classical")
        np.testing.assert_allclose(tsls.second_stage.coef_vector, ref.params, atol=1e-10)
        np.testing.assert_allclose(np.sqrt(np.diag(tsls.second_stage.covariance)),
                                   ref.bse, atol=1e-10)
