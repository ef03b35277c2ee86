"""Probit selection models, inverse Mills ratios, and Heckman-corrected wage fits.

Up to three selection margins (employment, wage/salary vs self-employment,
migration) are estimated as independent probits by Newton-Raphson with
analytic gradient and Hessian. Each margin contributes an inverse-Mills-ratio
column to the wage equation; identification requires every margin to carry at
least one exclusion variable absent from the wage formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, ndtri

from .design import DesignMatrix, ModelSpec, encode_design
from .errors import (
    ExclusionVariableInWageEquation,
    NotConverged,
    PerfectSeparation,
)
from .regress import FitResult, fit_with_covariance, wls_solve
from .survey import Dataset, filter_analysis_sample

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
GRAD_TOL = 1e-8
MAX_ITER = 100
MAX_HALVINGS = 30


def norm_mills(z: np.ndarray) -> np.ndarray:
    """phi(z)/Phi(z), evaluated in log space; stable over the whole real line."""
    z = np.asarray(z, dtype=float)
    log_phi = -0.5 * z * z - _LOG_SQRT_2PI
    return np.exp(log_phi - log_ndtr(z))


@dataclass(frozen=True)
class ProbitFit:
    coefficients: dict[str, float]
    covariance: np.ndarray
    log_likelihood: float
    converged: bool
    iterations: int
    gradient_norm: float
    column_names: tuple[str, ...] = ()
    ll_path: tuple[float, ...] = ()

    @property
    def coef_vector(self) -> np.ndarray:
        return np.array([self.coefficients[name] for name in self.column_names])

    @property
    def standard_errors(self) -> dict[str, float]:
        d = np.sqrt(np.diag(self.covariance))
        return {name: float(s) for name, s in zip(self.column_names, d)}

    def index(self, design: DesignMatrix) -> np.ndarray:
        return design.columns @ self.coef_vector


def probit_loglik(b: np.ndarray, y: np.ndarray, X: np.ndarray, w: np.ndarray) -> float:
    z = X @ b
    return float(np.sum(w * (y * log_ndtr(z) + (1.0 - y) * log_ndtr(-z))))


def probit_score_info(b, y, X, w):
    """Gradient and (positive definite) negative Hessian of the weighted log-likelihood."""
    z = X @ b
    r_pos = norm_mills(z)
    r_neg = norm_mills(-z)
    score = y * r_pos - (1.0 - y) * r_neg
    g = X.T @ (w * score)
    h = y * r_pos * (z + r_pos) + (1.0 - y) * r_neg * (r_neg - z)
    neg_hess = (X * (w * h)[:, None]).T @ X
    return g, neg_hess


def _check_separation(y, X, names):
    for j, name in enumerate(names):
        col = X[:, j]
        if np.ptp(col) == 0:
            continue
        x1, x0 = col[y == 1], col[y == 0]
        if x0.size and x1.size and (x0.max() < x1.min() or x0.min() > x1.max()):
            raise PerfectSeparation(name)


def fit_probit(design: DesignMatrix, raise_on_failure: bool = True) -> ProbitFit:
    """Weighted probit by Newton-Raphson with step halving.

    Starting values come from the linear probability model. Convergence is
    declared when the max-norm of the gradient falls below 1e-8; if the step
    search stalls or the iteration limit is hit first, NotConverged is raised
    (or, with raise_on_failure=False, the best fit is returned with
    ``converged=False``).
    """
    y = np.asarray(design.response, dtype=float)
    X = design.columns
    w = design.weights
    uniq = np.unique(y)
    if not np.all(np.isin(uniq, (0.0, 1.0))):
        raise ValueError("probit response must be binary 0/1")
    if uniq.size < 2:
        raise PerfectSeparation("(response is constant)")
    _check_separation(y, X, design.column_names)

    b, _, _ = wls_solve(y, X, w, design.column_names)
    ll = probit_loglik(b, y, X, w)
    ll_path = [ll]
    grad_norm = np.inf
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        g, neg_hess = probit_score_info(b, y, X, w)
        grad_norm = float(np.max(np.abs(g)))
        if grad_norm < GRAD_TOL:
            converged = True
            break
        step = np.linalg.solve(neg_hess, g)
        scale = 1.0
        improved = False
        for _ in range(MAX_HALVINGS):
            candidate = b + scale * step
            ll_new = probit_loglik(candidate, y, X, w)
            if ll_new >= ll - 1e-12:
                b, ll = candidate, ll_new
                ll_path.append(ll)
                improved = True
                break
            scale *= 0.5
        if not improved:
            break  # step-halving floor reached

    g, neg_hess = probit_score_info(b, y, X, w)
    grad_norm = float(np.max(np.abs(g)))
    converged = grad_norm < GRAD_TOL
    if not converged and raise_on_failure:
        raise NotConverged(it, grad_norm)
    cov = np.linalg.inv(neg_hess)
    cov = 0.5 * (cov + cov.T)
    return ProbitFit(
        coefficients={nm: float(v) for nm, v in zip(design.column_names, b)},
        covariance=cov,
        log_likelihood=ll,
        converged=converged,
        iterations=it,
        gradient_norm=grad_norm,
        column_names=tuple(design.column_names),
        ll_path=tuple(ll_path),
    )


def inverse_mills(fit: ProbitFit, design: DesignMatrix, selected: str = "yes") -> np.ndarray:
    """Inverse Mills ratio per row of ``design`` under the fitted index.

    yes-branch: lambda = phi(z)/Phi(z); no-branch: lambda = -phi(z)/(1-Phi(z)).
    """
    if not fit.converged:
        raise NotConverged(fit.iterations, fit.gradient_norm)
    z = fit.index(design)
    if selected == "yes":
        return norm_mills(z)
    if selected == "no":
        return -norm_mills(-z)
    raise ValueError("selected must be 'yes' or 'no'")


# --- migrant network ---------------------------------------------------------


@dataclass(frozen=True)
class NetworkIndex:
    """Experience-weighted migrant stock per destination district."""

    by_district: dict[str, float]

    def network(self, district: str) -> float:
        return self.by_district.get(str(district), 0.0)

    def network_sq(self, district: str) -> float:
        v = self.network(district)
        return v * v


def migrant_network(ds: Dataset) -> NetworkIndex:
    """Sum of years-since-migration over migrants observed in each district.

    Migrants missing the experience field contribute zero; districts with no
    migrants are absent from the map and read back as zero.
    """
    frame = ds.frame
    if "migrant" not in frame.columns:
        return NetworkIndex(by_district={})
    mig = frame["migrant"].to_numpy(dtype=bool)
    district = frame["district_id"].astype(str).to_numpy()
    exp_years = frame["years_since_migration"].to_numpy(dtype=float)
    exp_years = np.where(np.isnan(exp_years), 0.0, exp_years)
    acc: dict[str, float] = {}
    for d, e, m in zip(district, exp_years, mig):
        if m:
            acc[d] = acc.get(d, 0.0) + float(e)
    return NetworkIndex(by_district=acc)


def attach_network(ds: Dataset, index: NetworkIndex, scale: float = 1.0) -> Dataset:
    """Add migrant_network and migrant_network_sq columns keyed by district."""
    district = ds.frame["district_id"].astype(str)
    net = district.map(lambda d: index.network(d) * scale).to_numpy(dtype=float)
    return ds.with_columns(migrant_network=net, migrant_network_sq=net * net)


# --- triple-selection wage equation ------------------------------------------


@dataclass(frozen=True)
class SelectionSpec:
    """One selection margin: outcome, probit regressors, exclusion variables.

    ``role`` is one of employment/wage/migration and decides which inverse
    Mills slot the margin fills. ``fit_criteria`` restricts the probit
    estimation sample (None fits on the full dataset supplied).
    """

    role: str
    outcome: str
    spec: ModelSpec
    exclusions: tuple[str, ...]
    fit_criteria: dict | None = None

    def __post_init__(self):
        if self.role not in ("employment", "wage", "migration"):
            raise ValueError("selection role must be employment, wage, or migration")
        if not self.exclusions:
            raise ValueError(f"selection {self.role!r} needs at least one exclusion variable")
        object.__setattr__(self, "exclusions", tuple(self.exclusions))


@dataclass(frozen=True)
class MillsRatios:
    lambda_emp: np.ndarray | None = None
    lambda_wage: np.ndarray | None = None
    lambda_mig: np.ndarray | None = None

    def slot(self, role: str):
        return {"employment": self.lambda_emp, "wage": self.lambda_wage,
                "migration": self.lambda_mig}[role]


_ROLE_SLOTS = {"employment": "lambda_emp", "wage": "lambda_wage", "migration": "lambda_mig"}


@dataclass(frozen=True)
class HeckmanResult:
    wage_fit: FitResult
    mills: MillsRatios
    probits: dict[str, "ProbitFit"]
    notes: tuple[str, ...] = ()
    lambda_columns: dict[str, str] = field(default_factory=dict)


def heckman_wage_fit(
    wage_ds: Dataset,
    wage_spec: ModelSpec,
    selections: list[SelectionSpec],
    full_ds: Dataset | None = None,
    covariance: str = "HC1",
    branch: str = "yes",
) -> HeckmanResult:
    """Fit the wage equation with inverse-Mills corrections for each margin.

    Each probit is estimated on its own subsample of ``full_ds`` (defaults to
    the wage sample); the correction terms are evaluated on the wage-equation
    rows and appended as columns named imr_<role>. A margin whose outcome is
    degenerate on its estimation sample, or never selected on the wage rows,
    is skipped with a note.
    """
    if full_ds is None:
        full_ds = wage_ds
    wage_terms = wage_spec.term_names() - {wage_spec.response}
    for sel in selections:
        for excl in sel.exclusions:
            if excl in wage_terms:
                raise ExclusionVariableInWageEquation(excl, sel.role)

    notes: list[str] = []
    probits: dict[str, ProbitFit] = {}
    mills_slots: dict[str, np.ndarray | None] = {v: None for v in _ROLE_SLOTS.values()}
    lambda_cols: dict[str, str] = {}
    extra_names: list[str] = []
    extra_cols: list[np.ndarray] = []

    for sel in selections:
        fit_ds = full_ds if sel.fit_criteria is None else filter_analysis_sample(full_ds, sel.fit_criteria)
        outcome_fit = fit_ds.frame[sel.outcome].to_numpy(dtype=float)
        if np.unique(outcome_fit[~np.isnan(outcome_fit)]).size < 2:
            notes.append(f"{sel.role}: outcome degenerate on estimation sample; margin skipped")
            continue
        probit_design = encode_design(fit_ds, sel.spec)
        probit = fit_probit(probit_design)
        probits[sel.role] = probit

        outcome_wage = wage_ds.frame[sel.outcome].to_numpy(dtype=float)
        if not np.any(outcome_wage == 1):
            notes.append(f"{sel.role}: no selected rows in wage sample; lambda omitted")
            continue
        wage_side = encode_design(wage_ds, sel.spec, levels=probit_design.levels)
        lam = inverse_mills(probit, wage_side, selected=branch)
        col_name = f"imr_{sel.role}"
        extra_names.append(col_name)
        extra_cols.append(lam)
        mills_slots[_ROLE_SLOTS[sel.role]] = lam
        lambda_cols[sel.role] = col_name

    design = encode_design(wage_ds, wage_spec)
    if extra_names:
        design = design.with_added(extra_names, np.column_stack(extra_cols))
    wage_fit = fit_with_covariance(design, covariance)

    return HeckmanResult(
        wage_fit=wage_fit,
        mills=MillsRatios(**mills_slots),
        probits=probits,
        notes=tuple(notes),
        lambda_columns=lambda_cols,
    )


def probit_intercept_only(p: float) -> float:
    """Closed form for the intercept-only probit: Phi^{-1}(weighted mean)."""
    return float(ndtri(p))
