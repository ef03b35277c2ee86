"""Canonical per-replication estimators for the Monte Carlo validation suites.

Each function consumes one simulated dataset plus its truth record and
returns the estimates, standard errors, truths, and test decisions the
harness aggregates into bias / coverage / rejection summaries. The CLI
``simulate`` subcommand and the acceptance suite share these.
"""

from __future__ import annotations

import numpy as np

from .design import matrix_design
from .lewbel import InstrumentSet, fit_2sls, generate_lewbel_instruments
from .regress import fit_with_covariance
from .selection import fit_probit, inverse_mills
from .simulate import ReplicationOutcome
from .survey import Dataset


def heckman_replication(ds: Dataset, truth: dict) -> ReplicationOutcome:
    """Two-step corrected wage fit vs naive OLS on one selection draw.

    Probit of the selection indicator on the regressor and exclusion
    variable over all rows; yes-branch inverse Mills ratio appended to the
    wage equation on the selected rows. Coverage uses HC1 standard errors
    (the second-step errors are heteroskedastic by construction).
    """
    frame = ds.frame
    edu = frame["years_edu"].to_numpy(dtype=float)
    dep = frame["dependents"].to_numpy(dtype=float)
    sel = frame["employed"].to_numpy(dtype=float)
    ones = np.ones(len(frame))

    probit_design = matrix_design(sel, {"const": ones, "years_edu": edu, "dependents": dep})
    probit = fit_probit(probit_design)

    chosen = sel == 1.0
    y = frame["lnwage"].to_numpy(dtype=float)[chosen]
    sub = {"const": ones[chosen], "years_edu": edu[chosen], "dependents": dep[chosen]}
    lam = inverse_mills(probit, matrix_design(sel[chosen], sub))

    corrected = fit_with_covariance(
        matrix_design(y, {"const": ones[chosen], "years_edu": edu[chosen], "imr": lam},
                      response_name="lnwage"),
        "HC1",
    )
    naive = fit_with_covariance(
        matrix_design(y, {"const": ones[chosen], "years_edu": edu[chosen]},
                      response_name="lnwage"),
        "HC1",
    )
    beta_true = truth["beta"]["years_edu"]
    t_imr = corrected.coefficients["imr"] / corrected.se("imr")
    return ReplicationOutcome(
        estimates={
            "years_edu": corrected.coefficients["years_edu"],
            "naive_years_edu": naive.coefficients["years_edu"],
            "imr": corrected.coefficients["imr"],
        },
        ses={
            "years_edu": corrected.se("years_edu"),
            "naive_years_edu": naive.se("years_edu"),
            "imr": corrected.se("imr"),
        },
        truths={"years_edu": beta_true, "naive_years_edu": beta_true},
        rejections={"imr_significant": abs(t_imr) > 1.96},
    )


def lewbel_replication(ds: Dataset, truth: dict,
                       use_external: bool = False) -> ReplicationOutcome:
    """Generated-instrument 2SLS vs OLS on one endogenous-education draw.

    The structural equation is lnwage ~ years_edu + x_hetero; the instruments
    are the mean-centered driver times first-stage residual (plus the
    external college/night-light/MPCE columns when ``use_external``).
    """
    frame = ds.frame
    y = frame["lnwage"].to_numpy(dtype=float)
    edu = frame["years_edu"].to_numpy(dtype=float)
    x = frame["x_hetero"].to_numpy(dtype=float)
    ones = np.ones(len(frame))

    struct = matrix_design(y, {"const": ones, "years_edu": edu, "x_hetero": x},
                           response_name="lnwage")
    exog = struct.without(["years_edu"])
    generated = generate_lewbel_instruments(exog, edu, ["x_hetero"])
    external = {}
    if use_external:
        external = {nm: frame[nm].to_numpy(dtype=float)
                    for nm in ("colleges", "nightlight", "mpce")}
    instruments = InstrumentSet(external=external, generated=generated,
                                included_exogenous=tuple(exog.column_names))
    tsls = fit_2sls(struct, ["years_edu"], instruments, covariance="HC1")
    ols = fit_with_covariance(struct, "HC1")

    from .diagnostics import weak_instrument_stats

    partial_f = weak_instrument_stats(tsls)[0].statistic
    beta_true = truth["beta"]["years_edu"]
    return ReplicationOutcome(
        estimates={
            "years_edu": tsls.second_stage.coefficients["years_edu"],
            "ols_years_edu": ols.coefficients["years_edu"],
            "first_stage_F": partial_f,
        },
        ses={
            "years_edu": tsls.second_stage.se("years_edu"),
            "ols_years_edu": ols.se("years_edu"),
        },
        truths={"years_edu": beta_true, "ols_years_edu": beta_true},
        rejections={"first_stage_F_gt10": partial_f > 10.0},
    )
