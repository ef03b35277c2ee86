"""Diagnostic battery: endogeneity, heteroskedasticity, coefficient equality,
instrument strength, overidentification, and collinearity checks.

Every test returns a ``TestResult`` whose p-value is computed from the stated
reference distribution, so p is monotone decreasing in the statistic for
fixed degrees of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import stats

from .design import DesignMatrix, ModelSpec, encode_design
from .errors import GroupTooSmall, UnderIdentified, ZeroVariance
from .lewbel import InstrumentSet, TwoSLSFit
from .regress import FitResult, wls_solve
from .report import ReportTable
from .survey import MISSING_LEVEL, Dataset


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    df: tuple[int, ...]
    p_value: float
    decision_at_05: str
    details: dict = field(default_factory=dict)

    @property
    def reject_at_05(self) -> bool:
        return self.decision_at_05 == "reject"


@dataclass(frozen=True)
class JustIdentified:
    """Marker returned when an overidentification test is undefined (df = 0)."""

    name: str = "hansen_j"
    message: str = "model is just identified; J statistic undefined"


def _result(name, stat, df, p, details=None) -> TestResult:
    p = float(min(max(p, 0.0), 1.0))
    return TestResult(
        name=name,
        statistic=float(stat),
        df=tuple(int(d) for d in (df if isinstance(df, (tuple, list)) else (df,))),
        p_value=p,
        decision_at_05="reject" if p < 0.05 else "fail_to_reject",
        details=details or {},
    )


def durbin_wu_hausman(design: DesignMatrix, endogenous: list[str],
                      instruments: InstrumentSet) -> TestResult:
    """Control-function test of regressor exogeneity.

    Each endogenous column is regressed on the included exogenous columns and
    all excluded instruments; the residuals join the structural equation and
    their coefficients are F-tested jointly, F(m, n - k - m).
    """
    endogenous = list(endogenous)
    m = len(endogenous)
    n_excl = len(instruments.excluded_names)
    if n_excl < m:
        raise UnderIdentified(m, n_excl)
    y, w = design.response, design.weights
    exog_names = [nm for nm in design.column_names if nm not in endogenous]
    exog_idx = [design.column_names.index(nm) for nm in exog_names]
    Z = np.column_stack([design.columns[:, exog_idx], instruments.excluded_matrix(design.n)])

    resid_cols = []
    for nm in endogenous:
        _, r, _ = wls_solve(design.column(nm), Z, w)
        resid_cols.append(r)
    V = np.column_stack(resid_cols)

    _, e_r, _ = wls_solve(y, design.columns, w)
    ssr_r = float(np.sum(w * e_r**2))
    X_u = np.column_stack([design.columns, V])
    _, e_u, _ = wls_solve(y, X_u, w)
    ssr_u = float(np.sum(w * e_u**2))

    k = design.k
    df2 = design.n - k - m
    f_stat = max(0.0, (ssr_r - ssr_u) / m) / (ssr_u / df2)
    p = stats.f.sf(f_stat, m, df2)
    return _result("durbin_wu_hausman", f_stat, (m, df2), p)


def breusch_pagan(fit: FitResult, design: DesignMatrix) -> TestResult:
    """Heteroskedasticity test: squared scaled residuals on fitted values.

    LM = n * R^2 of the auxiliary regression, chi-squared with 1 df.
    """
    e2 = fit.residuals**2
    scale = float(np.mean(e2))
    u = e2 / scale if scale > 0 else e2
    w = design.weights
    aux_X = np.column_stack([np.ones(design.n), fit.fitted])
    _, aux_resid, _ = wls_solve(u, aux_X, w)
    ssr = float(np.sum(w * aux_resid**2))
    ubar = float(np.sum(w * u) / np.sum(w))
    tss = float(np.sum(w * (u - ubar) ** 2))
    # squared residuals constant to machine precision carry no signal
    degenerate = tss <= design.n * (1e-12 * max(abs(ubar), 1.0)) ** 2
    r2 = 0.0 if degenerate or tss <= 0 else 1.0 - ssr / tss
    lm = design.n * r2
    p = stats.chi2.sf(lm, 1)
    return _result("breusch_pagan", lm, (1,), p)


def chow_coefficient_equality(ds: Dataset, spec: ModelSpec, group_field: str,
                              target_coefficient: str) -> TestResult:
    """F-test that one coefficient is equal across subgroup regressions.

    All coefficients vary by group (the unrestricted stacked model reproduces
    the separate group-wise fits); the restriction forces the target
    coefficient to be common. Columns that are constant within a group are
    dropped from that group's block, matching separate-fit semantics.
    """
    full = encode_design(ds, spec)
    groups_raw = ds.frame[group_field].fillna(MISSING_LEVEL).astype(str).to_numpy()
    group_levels = sorted(np.unique(groups_raw))
    if len(group_levels) < 2:
        raise ValueError("coefficient-equality test needs at least 2 groups")

    try:
        t_idx = full.column_names.index(target_coefficient)
    except ValueError:
        raise ZeroVariance(target_coefficient) from None

    y, w = full.response, full.weights
    n = full.n
    blocks_u, blocks_r = [], []
    names_u, names_r = [], []
    target_common = full.columns[:, t_idx]
    group_coefs: dict[str, dict[str, float]] = {}
    col_plan: list[tuple[str, list[int]]] = []

    for g in group_levels:
        mask = groups_raw == g
        keep = []
        for j, nm in enumerate(full.column_names):
            if j == t_idx:
                continue
            col = full.columns[mask, j]
            if nm != "const" and np.ptp(col) == 0:
                continue  # structurally absent within this group
            keep.append(j)
        k_g = len(keep) + 1
        if mask.sum() <= k_g:
            raise GroupTooSmall(g, int(mask.sum()), k_g)
        col_plan.append((g, keep))

        block = np.zeros((n, k_g))
        block[mask, 0] = full.columns[mask, t_idx]
        for pos, j in enumerate(keep, start=1):
            block[mask, pos] = full.columns[mask, j]
        blocks_u.append(block)
        names_u.extend([f"{g}:{target_coefficient}"] + [f"{g}:{full.column_names[j]}" for j in keep])

        other = np.zeros((n, k_g - 1))
        for pos, j in enumerate(keep):
            other[mask, pos] = full.columns[mask, j]
        blocks_r.append(other)
        names_r.extend(f"{g}:{full.column_names[j]}" for j in keep)

    X_u = np.column_stack(blocks_u)
    beta_u, e_u, _ = wls_solve(y, X_u, w, names_u)
    ssr_u = float(np.sum(w * e_u**2))
    for nm, b in zip(names_u, beta_u):
        g, coef = nm.split(":", 1)
        group_coefs.setdefault(g, {})[coef] = float(b)

    X_r = np.column_stack([target_common[:, None]] + blocks_r)
    _, e_r, _ = wls_solve(y, X_r, w, [target_coefficient] + names_r)
    ssr_r = float(np.sum(w * e_r**2))

    G = len(group_levels)
    k_u = X_u.shape[1]
    df1, df2 = G - 1, n - k_u
    f_stat = max(0.0, (ssr_r - ssr_u) / df1) / (ssr_u / df2)
    p = stats.f.sf(f_stat, df1, df2)
    return _result("chow_equality", f_stat, (df1, df2), p,
                   details={"group_coefficients": group_coefs, "groups": group_levels})


def _partialled(two_sls: TwoSLSFit):
    """sqrt(weight)-scaled endogenous and excluded-instrument blocks, exogenous partialled out."""
    design = two_sls.design
    sw = np.sqrt(design.weights)
    exog_idx = [design.column_names.index(nm) for nm in two_sls.exogenous_names]
    W = design.columns[:, exog_idx] * sw[:, None]
    X = np.column_stack([design.column(nm) for nm in two_sls.endogenous_names]) * sw[:, None]
    Z = two_sls.instruments.excluded_matrix(design.n) * sw[:, None]
    X_t = X - W @ np.linalg.lstsq(W, X, rcond=None)[0]
    Z_t = Z - W @ np.linalg.lstsq(W, Z, rcond=None)[0]
    return X_t, Z_t, W.shape[1]


def weak_instrument_stats(two_sls: TwoSLSFit) -> list[TestResult]:
    """First-stage strength: partial F per endogenous regressor, Cragg-Donald
    minimum-eigenvalue F, and the Anderson canonical-correlation LM for
    underidentification (homoskedastic form)."""
    design = two_sls.design
    n = design.n
    w = design.weights
    exog_idx = [design.column_names.index(nm) for nm in two_sls.exogenous_names]
    W_cols = design.columns[:, exog_idx]
    k_w = W_cols.shape[1]
    k_z = len(two_sls.instruments.excluded_names)
    m = len(two_sls.endogenous_names)
    results: list[TestResult] = []

    for nm in two_sls.endogenous_names:
        fs = two_sls.first_stage[nm]
        ssr_u = fs.ssr
        _, e_r, _ = wls_solve(design.column(nm), W_cols, w)
        ssr_r = float(np.sum(w * e_r**2))
        df2 = n - (k_w + k_z)
        f_stat = max(0.0, (ssr_r - ssr_u) / k_z) / (ssr_u / df2)
        results.append(_result(f"first_stage_partial_F[{nm}]", f_stat, (k_z, df2),
                               stats.f.sf(f_stat, k_z, df2)))

    X_t, Z_t, _ = _partialled(two_sls)
    dof = n - k_w - k_z
    proj = Z_t @ np.linalg.lstsq(Z_t, X_t, rcond=None)[0]
    B = X_t.T @ proj / k_z
    A = X_t.T @ (X_t - proj) / dof
    eigs = scipy.linalg.eigh(B, A, eigvals_only=True)
    cd = float(np.min(eigs))
    results.append(_result("cragg_donald_F", cd, (k_z, dof), stats.f.sf(cd, k_z, dof)))

    Sxx = X_t.T @ X_t
    Szz = Z_t.T @ Z_t
    Sxz = X_t.T @ Z_t
    M = np.linalg.solve(Sxx, Sxz) @ np.linalg.solve(Szz, Sxz.T)
    r2_min = float(np.min(np.linalg.eigvals(M).real))
    lm = n * r2_min
    df_lm = k_z - m + 1
    results.append(_result("anderson_lm", lm, (df_lm,), stats.chi2.sf(lm, df_lm)))
    return results


def hansen_j(two_sls: TwoSLSFit) -> TestResult | JustIdentified:
    """Overidentification J = n * gbar' What^-1 gbar with robust weighting.

    Moments are instrument times second-stage residual (evaluated at the
    original endogenous values); chi-squared df equals the degree of
    overidentification. Just-identified models return a marker.
    """
    m = len(two_sls.endogenous_names)
    k_z = len(two_sls.instruments.excluded_names)
    over = k_z - m
    if over <= 0:
        return JustIdentified()
    design = two_sls.design
    n = design.n
    w = design.weights
    exog_idx = [design.column_names.index(nm) for nm in two_sls.exogenous_names]
    Z = np.column_stack([design.columns[:, exog_idx], two_sls.instruments.excluded_matrix(n)])
    e = two_sls.second_stage.residuals
    Gmat = Z * (w * e)[:, None]
    gbar = Gmat.mean(axis=0)
    What = Gmat.T @ Gmat / n
    j_stat = float(n * gbar @ np.linalg.solve(What, gbar))
    p = stats.chi2.sf(j_stat, over)
    return _result("hansen_j", j_stat, (over,), p)


def pairwise_corr_vif(columns: dict[str, np.ndarray],
                      weights: np.ndarray | None = None) -> ReportTable:
    """Weighted pairwise correlations and the implied variance inflation 1/(1-r^2)."""
    names = list(columns)
    if len(names) < 2:
        raise ValueError("need at least 2 columns")
    arrays = {nm: np.asarray(v, dtype=float) for nm, v in columns.items()}
    n = len(arrays[names[0]])
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    wsum = w.sum()
    centered = {}
    for nm in names:
        x = arrays[nm]
        xc = x - np.sum(w * x) / wsum
        var = float(np.sum(w * xc**2))
        if var <= 0:
            raise ZeroVariance(nm)
        centered[nm] = (xc, var)
    table = ReportTable(title="pairwise correlation and VIF")
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            xa, va = centered[a]
            xb, vb = centered[b]
            r = float(np.sum(w * xa * xb) / np.sqrt(va * vb))
            r = min(1.0, max(-1.0, r))
            row = f"{a} x {b}"
            table.set(row, "corr", value=r)
            if abs(r) >= 1.0:
                table.set(row, "vif", value="+inf")
            else:
                table.set(row, "vif", value=1.0 / (1.0 - r * r))
    return table
