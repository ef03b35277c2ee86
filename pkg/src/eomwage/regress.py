"""Weighted least squares with classical, HC1, and cluster-robust covariance.

The solver factors the square-root-weighted design with a column-pivoted QR;
rank deficiency is detected at a relative pivot tolerance and reported with
the implicated column names, never silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .design import DesignMatrix
from .errors import ColumnMismatch, InsufficientObservations, RankDeficient, TooFewClusters

PIVOT_RTOL = 1e-10


@dataclass(frozen=True)
class FitResult:
    """Coefficients, covariance, residuals, and fit statistics of one WLS fit."""

    coefficients: dict[str, float]
    covariance: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    r_squared: float
    ssr: float
    n: int
    k: int
    estimator_tag: str = "classical"
    column_names: tuple[str, ...] = ()

    @property
    def coef_vector(self) -> np.ndarray:
        return np.array([self.coefficients[name] for name in self.column_names])

    def se(self, name: str) -> float:
        idx = self.column_names.index(name)
        return float(np.sqrt(self.covariance[idx, idx]))

    @property
    def standard_errors(self) -> dict[str, float]:
        d = np.sqrt(np.diag(self.covariance))
        return {name: float(s) for name, s in zip(self.column_names, d)}

    def with_covariance(self, cov: np.ndarray, tag: str) -> "FitResult":
        return FitResult(
            coefficients=self.coefficients, covariance=cov, residuals=self.residuals,
            fitted=self.fitted, r_squared=self.r_squared, ssr=self.ssr, n=self.n,
            k=self.k, estimator_tag=tag, column_names=self.column_names,
        )

    def to_json_dict(self) -> dict:
        return {
            "coefficients": self.coefficients,
            "standard_errors": self.standard_errors,
            "estimator_tag": self.estimator_tag,
            "n": self.n,
            "k": self.k,
            "r_squared": self.r_squared,
            "ssr": self.ssr,
        }


def _implicated_columns(X: np.ndarray, names, deficient_idx: list[int]) -> list[str]:
    """Name each deficient column together with the columns it is collinear with."""
    implicated: set[str] = set()
    good = [j for j in range(X.shape[1]) if j not in deficient_idx]
    for j in deficient_idx:
        implicated.add(names[j])
        if good:
            coef, *_ = np.linalg.lstsq(X[:, good], X[:, j], rcond=None)
            scale = max(1.0, float(np.max(np.abs(coef))))
            for g, c in zip(good, coef):
                if abs(c) > 1e-6 * scale:
                    implicated.add(names[g])
    return sorted(implicated)


def wls_solve(y: np.ndarray, X: np.ndarray, w: np.ndarray, names=None):
    """Solve the weighted least-squares problem; returns (beta, residuals, XtWX_inv).

    Raises RankDeficient (naming the offending columns) and
    InsufficientObservations.
    """
    n, k = X.shape
    if names is None:
        names = [f"x{j}" for j in range(k)]
    if n <= k:
        raise InsufficientObservations(n, k)
    sw = np.sqrt(w)
    Xw = X * sw[:, None]
    yw = y * sw
    Q, R, piv = scipy.linalg.qr(Xw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    ref = diag[0] if diag.size and diag[0] > 0 else 0.0
    deficient = [int(piv[j]) for j in range(k) if ref == 0.0 or diag[j] < PIVOT_RTOL * ref]
    if deficient:
        raise RankDeficient(_implicated_columns(Xw, list(names), deficient))
    beta_piv = scipy.linalg.solve_triangular(R, Q.T @ yw)
    beta = np.empty(k)
    beta[piv] = beta_piv
    resid = y - X @ beta
    # (X'WX)^-1 = P R^-1 R^-T P' using the pivoted factorization
    Rinv = scipy.linalg.solve_triangular(R, np.eye(k))
    xtwx_inv_piv = Rinv @ Rinv.T
    xtwx_inv = np.empty((k, k))
    xtwx_inv[np.ix_(piv, piv)] = xtwx_inv_piv
    return beta, resid, xtwx_inv


def fit_wls(design: DesignMatrix) -> FitResult:
    """Weighted least squares with classical covariance sigma^2 (X'WX)^-1.

    R-squared uses weighted centered sums of squares and is defined as 0 for
    a constant response.
    """
    y, X, w = design.response, design.columns, design.weights
    beta, resid, xtwx_inv = wls_solve(y, X, w, design.column_names)
    n, k = X.shape
    ssr = float(np.sum(w * resid**2))
    ybar = float(np.sum(w * y) / np.sum(w))
    tss = float(np.sum(w * (y - ybar) ** 2))
    r2 = 1.0 - ssr / tss if tss > 0 else 0.0
    sigma2 = ssr / (n - k)
    cov = sigma2 * xtwx_inv
    cov = 0.5 * (cov + cov.T)
    return FitResult(
        coefficients={nm: float(b) for nm, b in zip(design.column_names, beta)},
        covariance=cov,
        residuals=resid,
        fitted=y - resid,
        r_squared=r2,
        ssr=ssr,
        n=n,
        k=k,
        estimator_tag="classical",
        column_names=tuple(design.column_names),
    )


def sandwich_cov(fit: FitResult, design: DesignMatrix, kind: str = "HC1") -> np.ndarray:
    """Heteroskedasticity-robust (HC1) or cluster-robust covariance.

    HC1:     n/(n-k) * A^-1 (sum_i w_i^2 e_i^2 x_i x_i') A^-1
    cluster: G/(G-1) * (n-1)/(n-k) * A^-1 (sum_g s_g s_g') A^-1,
             s_g = sum_{i in g} w_i e_i x_i,
    with A = X'WX. Each observation its own cluster collapses to HC1 exactly.
    """
    X, w, e = design.columns, design.weights, fit.residuals
    n, k = X.shape
    sw = np.sqrt(w)
    Xw = X * sw[:, None]
    A_inv = np.linalg.inv(Xw.T @ Xw)
    if kind == "HC1":
        u = X * (w * e)[:, None]
        meat = u.T @ u
        cov = (n / (n - k)) * A_inv @ meat @ A_inv
    elif kind == "cluster":
        if design.cluster_ids is None:
            raise TooFewClusters(0)
        ids = np.asarray(design.cluster_ids)
        groups, inverse = np.unique(ids, return_inverse=True)
        G = len(groups)
        if G < 2:
            raise TooFewClusters(G)
        u = X * (w * e)[:, None]
        S = np.zeros((G, k))
        np.add.at(S, inverse, u)
        meat = S.T @ S
        cov = (G / (G - 1)) * ((n - 1) / (n - k)) * A_inv @ meat @ A_inv
    else:
        raise ValueError(f"unknown covariance kind: {kind!r}")
    return 0.5 * (cov + cov.T)


def fit_with_covariance(design: DesignMatrix, kind: str = "classical") -> FitResult:
    """Fit WLS and attach the requested covariance estimator."""
    fit = fit_wls(design)
    if kind == "classical":
        return fit
    return fit.with_covariance(sandwich_cov(fit, design, kind), kind)


def predict(fit: FitResult, new_design: DesignMatrix | np.ndarray, names=None) -> np.ndarray:
    """Linear prediction on new data; column names and order must match the fit."""
    if isinstance(new_design, DesignMatrix):
        names = new_design.column_names
        X = new_design.columns
    else:
        X = np.asarray(new_design, dtype=float)
        if names is None:
            raise ColumnMismatch(list(fit.column_names), ["<unnamed>"])
    if tuple(names) != tuple(fit.column_names):
        raise ColumnMismatch(list(fit.column_names), list(names))
    return X @ fit.coef_vector
