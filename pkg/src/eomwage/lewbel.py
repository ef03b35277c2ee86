"""External and heteroskedasticity-generated instruments, and two-stage least squares.

Generated instruments follow the heteroskedasticity-based construction: with
first-stage residuals eps from regressing the endogenous column on all
included exogenous columns, each driver column Z contributes the instrument
(Z - Zbar) * eps, where Zbar is the weighted mean. These are valid when the
first-stage error variance moves with the drivers while the product of the
two structural errors does not.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .design import DesignMatrix
from .errors import UnderIdentified
from .regress import FitResult, fit_wls, sandwich_cov, wls_solve


@dataclass(frozen=True)
class InstrumentSet:
    """Named excluded instruments: external columns plus generated columns."""

    external: dict[str, np.ndarray] = field(default_factory=dict)
    generated: dict[str, np.ndarray] = field(default_factory=dict)
    included_exogenous: tuple[str, ...] = ()

    @property
    def excluded_names(self) -> list[str]:
        return list(self.external) + list(self.generated)

    def excluded_matrix(self, n: int) -> np.ndarray:
        cols = [np.asarray(v, dtype=float) for v in self.external.values()]
        cols += [np.asarray(v, dtype=float) for v in self.generated.values()]
        if not cols:
            return np.empty((n, 0))
        return np.column_stack(cols)


def generate_lewbel_instruments(
    exog: DesignMatrix,
    endog: np.ndarray,
    driver_names: list[str],
) -> dict[str, np.ndarray]:
    """Construct mean-centered driver-times-residual instruments.

    ``exog`` holds the included exogenous columns (with intercept); the
    endogenous column is regressed on all of them, and each driver (a subset
    of the exogenous columns) is centered at its weighted mean and multiplied
    elementwise by the residual. Constant drivers produce an identically zero
    column and are dropped with a warning.
    """
    if not driver_names:
        raise ValueError("need at least one heteroskedasticity driver column")
    w = exog.weights
    endog = np.asarray(endog, dtype=float)
    _, resid, _ = wls_solve(endog, exog.columns, w, exog.column_names)
    out: dict[str, np.ndarray] = {}
    for name in driver_names:
        z = exog.column(name)
        if np.ptp(z) == 0:
            warnings.warn(f"driver {name!r} is constant; generated instrument dropped")
            continue
        centered = z - np.sum(w * z) / np.sum(w)
        out[f"gen_{name}"] = centered * resid
    return out


@dataclass(frozen=True)
class TwoSLSFit:
    """Second-stage fit plus the first stages and everything diagnostics need.

    ``second_stage`` residuals are evaluated at the original endogenous
    values; the fitted endogenous columns only enter coefficient estimation.
    """

    second_stage: FitResult
    first_stage: dict[str, FitResult]
    instrument_names: tuple[str, ...]
    endogenous_names: tuple[str, ...]
    design: DesignMatrix
    instruments: InstrumentSet

    @property
    def exogenous_names(self) -> tuple[str, ...]:
        return tuple(nm for nm in self.design.column_names if nm not in self.endogenous_names)


def fit_2sls(
    design: DesignMatrix,
    endogenous: list[str],
    instruments: InstrumentSet,
    covariance: str = "HC1",
) -> TwoSLSFit:
    """Two-stage least squares for the named endogenous columns.

    First stage regresses each endogenous column on the included exogenous
    columns plus all excluded instruments; the second stage replaces the
    endogenous columns with their fitted values. Reported residuals, SSR and
    R-squared use the original endogenous values. Covariance is classical,
    HC1, or cluster per ``covariance``.
    """
    endogenous = list(endogenous)
    n = design.n
    w = design.weights
    exog_names = [nm for nm in design.column_names if nm not in endogenous]
    n_excluded = len(instruments.excluded_names)
    if n_excluded < len(endogenous):
        raise UnderIdentified(len(endogenous), n_excluded)

    exog_idx = [design.column_names.index(nm) for nm in exog_names]
    X_exog = design.columns[:, exog_idx]
    Z = np.column_stack([X_exog, instruments.excluded_matrix(n)])
    z_names = exog_names + instruments.excluded_names

    first_fits: dict[str, FitResult] = {}
    fitted_cols: dict[str, np.ndarray] = {}
    for nm in endogenous:
        x_en = design.column(nm)
        fs_design = DesignMatrix(
            response=x_en.copy(), columns=Z.copy(), weights=w.copy(),
            column_names=tuple(z_names), cluster_ids=None if design.cluster_ids is None
            else design.cluster_ids.copy(), response_name=nm,
        )
        fs = fit_wls(fs_design)
        first_fits[nm] = fs
        fitted_cols[nm] = fs.fitted

    X_hat = design.columns.copy()
    for nm in endogenous:
        X_hat[:, design.column_names.index(nm)] = fitted_cols[nm]

    y = design.response
    beta, _, xtwx_inv = wls_solve(y, X_hat, w, design.column_names)
    resid = y - design.columns @ beta
    ssr = float(np.sum(w * resid**2))
    ybar = float(np.sum(w * y) / np.sum(w))
    tss = float(np.sum(w * (y - ybar) ** 2))
    k = design.k
    base = FitResult(
        coefficients={nm: float(b) for nm, b in zip(design.column_names, beta)},
        covariance=(ssr / (n - k)) * xtwx_inv,
        residuals=resid,
        fitted=y - resid,
        r_squared=1.0 - ssr / tss if tss > 0 else 0.0,
        ssr=ssr,
        n=n,
        k=k,
        estimator_tag="classical",
        column_names=tuple(design.column_names),
    )
    if covariance != "classical":
        hat_design = DesignMatrix(
            response=y.copy(), columns=X_hat, weights=w.copy(),
            column_names=design.column_names,
            cluster_ids=None if design.cluster_ids is None else design.cluster_ids.copy(),
        )
        base = base.with_covariance(sandwich_cov(base, hat_design, covariance), covariance)

    return TwoSLSFit(
        second_stage=base,
        first_stage=first_fits,
        instrument_names=tuple(z_names),
        endogenous_names=tuple(endogenous),
        design=design,
        instruments=instruments,
    )
