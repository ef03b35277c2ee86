"""Monte Carlo data-generating processes with known ground truth.

These are the correctness oracles for the estimators: a selection DGP whose
wage is observed only behind a probit screen, an endogenous-education DGP
with a heteroskedastic first stage identifying generated instruments, a
synthetic survey-schema fixture with planted mismatch incidence, and a
replication harness that aggregates bias, coverage, and rejection rates.

Everything is a pure function of (config, seed): the same inputs reproduce
identical data bit for bit, and replication r uses derived seed ``seed + r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.special import ndtr

from .survey import Dataset, Provenance


@dataclass(frozen=True)
class SelectionBlock:
    theta: dict[str, float] = field(default_factory=lambda: {"years_edu": 0.5, "dependents": 1.0})
    rho: float = 0.5
    selection_rate: float = 0.5


@dataclass(frozen=True)
class EndogeneityBlock:
    pi: dict[str, float] = field(default_factory=lambda: {"const": 10.0, "x_hetero": 1.0})
    rho: float = 0.5
    delta: float = 1.0


@dataclass(frozen=True)
class DGPConfig:
    n: int = 1000
    beta: dict[str, float] = field(default_factory=lambda: {"const": 1.0, "years_edu": 0.1})
    selection: SelectionBlock | None = None
    endogeneity: EndogeneityBlock | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 50:
            raise ValueError("n must be at least 50")
        for block in (self.selection, self.endogeneity):
            if block is not None and not (abs(block.rho) < 1):
                raise ValueError("|rho| must be < 1")

    def with_seed(self, seed: int) -> "DGPConfig":
        return replace(self, seed=seed)


def _dataset(frame: pd.DataFrame, label: str, seed: int) -> Dataset:
    return Dataset(frame, Provenance(source=f"simulated:{label}:seed={seed}"))


def simulate_selection_dgp(cfg: DGPConfig) -> tuple[Dataset, dict]:
    """Wage observed only when a latent selection index is positive.

    Latent selection S* = theta0 + theta_e * years_edu + theta_d * dependents + v,
    wage log y = beta0 + beta_e * years_edu + eps, with corr(v, eps) = rho
    (bivariate normal). theta0 is solved numerically so the realized selection
    probability matches the configured rate.
    """
    if cfg.selection is None:
        raise ValueError("config has no selection block")
    sel = cfg.selection
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    edu = rng.standard_normal(n)
    dep = rng.standard_normal(n)
    index_rest = sel.theta["years_edu"] * edu + sel.theta["dependents"] * dep

    def excess(c):
        return float(np.mean(ndtr(c + index_rest))) - sel.selection_rate

    theta0 = brentq(excess, -20.0, 20.0)

    rho = sel.rho
    v = rng.standard_normal(n)
    eps = rho * v + math.sqrt(1.0 - rho * rho) * rng.standard_normal(n)
    selected = (theta0 + index_rest + v > 0).astype(float)
    lnwage_full = cfg.beta["const"] + cfg.beta["years_edu"] * edu + eps
    lnwage = np.where(selected == 1.0, lnwage_full, np.nan)

    frame = pd.DataFrame(
        {
            "years_edu": edu,
            "dependents": dep,
            "employed": selected,
            "lnwage": lnwage,
            "weight": np.ones(n),
        }
    )
    truth = {
        "beta": dict(cfg.beta),
        "theta": {"const": theta0, **sel.theta},
        "rho": rho,
        "selection_rate": float(selected.mean()),
    }
    return _dataset(frame, "selection", cfg.seed), truth


def simulate_lewbel_dgp(cfg: DGPConfig) -> tuple[Dataset, dict]:
    """Endogenous education with a heteroskedastic first stage.

    First stage: years_edu = pi' z + u with u = c + exp(delta * x / 2) * e2;
    structural: lnwage = beta0 + beta_e * years_edu + beta_x * x + eps with
    eps = a * c + e1. The shared homoskedastic factor c produces the
    endogeneity while keeping E[(x - xbar) * u * eps] = 0, which the
    generated-instrument construction requires; ``a`` is calibrated so the
    unconditional corr(u, eps) equals the configured rho. External columns
    mimicking colleges / night-light / MPCE roles enter the first stage when
    given nonzero coefficients.
    """
    if cfg.endogeneity is None:
        raise ValueError("config has no endogeneity block")
    endo = cfg.endogeneity
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    x = rng.standard_normal(n)
    colleges = rng.standard_normal(n)
    nightlight = rng.standard_normal(n)
    mpce = rng.standard_normal(n)
    externals = {"colleges": colleges, "nightlight": nightlight, "mpce": mpce}

    h = np.exp(0.5 * endo.delta * x)
    c = rng.standard_normal(n)
    e1 = rng.standard_normal(n)
    e2 = rng.standard_normal(n)
    K = 1.0 + float(np.mean(h * h))
    rho = endo.rho
    if rho == 0.0:
        a = 0.0
    else:
        r2k = rho * rho * K
        if r2k >= 1.0:
            raise ValueError(f"rho={rho} unreachable given heteroskedasticity scale (needs rho^2 < 1/K={1/K:.3f})")
        a = math.copysign(math.sqrt(r2k / (1.0 - r2k)), rho)

    u = c + h * e2
    eps = a * c + e1
    edu = endo.pi.get("const", 0.0) + endo.pi.get("x_hetero", 0.0) * x
    for nm, col in externals.items():
        edu = edu + endo.pi.get(nm, 0.0) * col
    edu = edu + u

    beta_x = cfg.beta.get("x_hetero", 0.0)
    lnwage = cfg.beta["const"] + cfg.beta["years_edu"] * edu + beta_x * x + eps

    frame = pd.DataFrame(
        {
            "lnwage": lnwage,
            "years_edu": edu,
            "x_hetero": x,
            "colleges": colleges,
            "nightlight": nightlight,
            "mpce": mpce,
            "weight": np.ones(n),
        }
    )
    truth = {
        "beta": dict(cfg.beta),
        "pi": dict(endo.pi),
        "rho": rho,
        "delta": endo.delta,
        "common_factor_loading": a,
    }
    return _dataset(frame, "lewbel", cfg.seed), truth


# --- survey-schema fixture -----------------------------------------------------


@dataclass(frozen=True)
class OccupationPlan:
    """Three-point education design for one occupation.

    With shares (p_under, p_adequate, p_over) on years (low, mid, high) the
    implied weighted band must classify low as under, mid as adequate, and
    high as over; the generator validates this before sampling.
    """

    code: str
    low: float
    mid: float
    high: float

    def validate(self, shares: tuple[float, float, float], k: float = 1.1) -> None:
        pu, pa, po = shares
        vals = np.array([self.low, self.mid, self.high])
        probs = np.array([pu, pa, po])
        mean = float(probs @ vals)
        sd = math.sqrt(float(probs @ (vals - mean) ** 2))
        if not (self.low < mean - k * sd and self.high > mean + k * sd
                and mean - k * sd <= self.mid <= mean + k * sd):
            raise ValueError(
                f"occupation {self.code}: planted years {vals} cannot realize shares "
                f"{shares} at k={k}"
            )


DEFAULT_OCCUPATIONS = (
    OccupationPlan("131", 5.0, 10.0, 17.0),
    OccupationPlan("242", 8.0, 12.0, 17.0),
    OccupationPlan("723", 2.0, 8.0, 15.0),
    OccupationPlan("223", 10.0, 15.0, 17.0),
    OccupationPlan("921", 0.0, 5.0, 12.0),
)

_REASONS = ("job_search", "confirm_job", "other_work", "marriage", "education",
            "tied", "forced", "other")
_REASON_P = (0.30, 0.22, 0.08, 0.18, 0.05, 0.08, 0.03, 0.06)
_STREAMS = ("RR", "RU", "UR", "UU")
_DISTANCES = ("intra_district", "inter_district", "inter_state")


def synth_fixture(
    n: int = 12000,
    seed: int = 0,
    occupations: tuple[OccupationPlan, ...] = DEFAULT_OCCUPATIONS,
    incidence: tuple[float, float, float] = (0.15, 0.70, 0.15),
    migrant_share: float = 0.35,
) -> Dataset:
    """Survey-schema dataset with planted mismatch incidence.

    Education within each planned occupation sits on a three-point design
    whose band classifies exactly (p_under, p_adequate, p_over) of workers in
    expectation. Includes migration fields, household variables, sampling
    weights, district-level instrument columns, and a sprinkle of
    below-support occupations so some rows are unclassifiable.
    """
    if len(occupations) < 5:
        raise ValueError("fixture needs at least 5 planned occupations")
    if abs(sum(incidence) - 1.0) > 1e-9:
        raise ValueError("incidence shares must sum to 1")
    for plan in occupations:
        plan.validate(incidence)
        plan.validate(incidence, k=0.9)

    rng = np.random.default_rng(seed)
    states = [f"S{i}" for i in range(1, 5)]
    districts = [f"D{i:02d}" for i in range(1, 13)]
    district_state = {d: states[i % 4] for i, d in enumerate(districts)}
    dev = {d: float(0.5 + 2.0 * i / (len(districts) - 1)) for i, d in enumerate(districts)}
    colleges = {d: int(rng.poisson(8 * dev[d]) + 1) for d in districts}
    nightlight = {d: float(np.exp(rng.normal(math.log(dev[d] * 40), 0.3))) for d in districts}
    nightlight_sd = {d: float(nightlight[d] * rng.uniform(0.15, 0.45)) for d in districts}
    ln_wap = {d: float(rng.normal(math.log(5e4 * dev[d]), 0.2)) for d in districts}
    immigrant_share = {s: float(rng.uniform(0.2, 2.0)) for s in states}

    district = rng.choice(districts, size=n)
    age = rng.integers(12, 71, size=n).astype(float)
    gender = rng.choice(["male", "female"], size=n, p=[0.65, 0.35])
    marital = rng.choice(["unmarried", "married", "other"], size=n, p=[0.35, 0.58, 0.07])
    social = rng.choice(["st", "sc", "obc", "others"], size=n, p=[0.09, 0.19, 0.42, 0.30])
    religion = rng.choice(["hindu", "muslim", "christian", "others"], size=n,
                          p=[0.81, 0.13, 0.03, 0.03])
    urban_p = np.array([0.15 + 0.25 * dev[d] for d in district])
    sector = np.where(rng.random(n) < urban_p, "urban", "rural")
    dependents = rng.poisson(1.2, size=n).astype(float)
    household_type = rng.choice(["self_employed", "regular_wage", "casual", "others"],
                                size=n, p=[0.38, 0.3, 0.22, 0.1])
    household_size = rng.integers(2, 10, size=n).astype(float)
    land = rng.choice(["lt_0.005", "0.005_0.40", "0.41_2.00", "gt_2.00"], size=n,
                      p=[0.35, 0.35, 0.2, 0.1])
    mpce = np.exp(rng.normal(7.0 + 0.15 * np.array([dev[d] for d in district]), 0.5, size=n))

    # employment status, gently tied to household composition
    p_wage = 0.45 + 0.1 * (household_type == "regular_wage") + 0.02 * np.minimum(dependents, 4)
    p_self = 0.25 + 0.1 * (household_type == "self_employed")
    draw = rng.random(n)
    status = np.where(draw < p_wage, "wage_salary",
                      np.where(draw < p_wage + p_self, "self_employed", "other"))

    # migration, tilted toward developed destinations
    mig_p = np.clip(migrant_share * (0.6 + 0.4 * np.array([dev[d] for d in district]) / 2.5), 0, 0.9)
    migrant = rng.random(n) < mig_p
    reason = np.where(migrant, rng.choice(_REASONS, size=n, p=_REASON_P), "none")
    stream = np.where(migrant, rng.choice(_STREAMS, size=n, p=[0.3, 0.4, 0.07, 0.23]), "none")
    distance = np.where(migrant, rng.choice(_DISTANCES, size=n, p=[0.45, 0.33, 0.22]), "none")
    ysm = np.where(migrant, rng.integers(0, 26, size=n).astype(float), np.nan)
    prior = np.where(migrant, rng.choice(["wage_salary", "self_employed", "unemployed", "oolf"],
                                         size=n, p=[0.3, 0.2, 0.3, 0.2]), "none")

    # occupations: planned three-point designs, tilted by district development
    plan_idx = np.empty(n, dtype=int)
    for i, d in enumerate(district):
        tilt = (dev[d] - 0.5) / 2.0  # 0..1
        p = np.full(len(occupations), (1.0 - 0.4 * tilt) / len(occupations))
        p[-2:] += 0.2 * tilt / 2.0  # higher-education occupations more likely
        p /= p.sum()
        plan_idx[i] = rng.choice(len(occupations), p=p)
    point = rng.choice(3, size=n, p=list(incidence))
    edu = np.empty(n)
    occ = np.empty(n, dtype=object)
    for i in range(n):
        plan = occupations[plan_idx[i]]
        occ[i] = plan.code
        edu[i] = (plan.low, plan.mid, plan.high)[point[i]]
    # a sprinkle of below-support occupations (at most 2 rows per code, so the
    # weighted count stays under the minimum and the rows are unclassifiable)
    n_rare = max(8, n // 400)
    rare_rows = rng.choice(n, size=n_rare, replace=False)
    for j, i in enumerate(rare_rows):
        occ[i] = f"9{50 + j // 2}"
        edu[i] = float(rng.choice([5.0, 10.0, 15.0]))

    # wages for wage/salary workers, heteroskedastic in household expenditure
    z_mpce = (np.log(mpce) - 7.0) / 0.5
    dist_effect = np.array([0.1 * dev[d] for d in district])
    lnwage = (
        3.8
        + 0.05 * edu
        + 0.02 * age
        - 0.0002 * age**2
        + 0.15 * (sector == "urban")
        + 0.10 * (gender == "male")
        + 0.05 * migrant
        + dist_effect
        + rng.standard_normal(n) * 0.40 * np.exp(0.15 * z_mpce)
    )
    daily_wage = np.where(status == "wage_salary", np.exp(lnwage), np.nan)

    frame = pd.DataFrame(
        {
            "person_id": [f"P{i:06d}" for i in range(n)],
            "daily_wage": daily_wage,
            "years_edu": edu,
            "occ_code": occ.astype(str),
            "industry": rng.choice(["agriculture", "manufacturing", "services", "construction"],
                                   size=n, p=[0.3, 0.25, 0.3, 0.15]),
            "age": age,
            "gender": gender,
            "marital": marital,
            "social_group": social,
            "religion": religion,
            "sector": sector,
            "state_id": [district_state[d] for d in district],
            "district_id": district,
            "migrant": migrant,
            "migration_reason": reason,
            "stream": stream,
            "distance": distance,
            "years_since_migration": ysm,
            "prior_employment": prior,
            "dependents_count": dependents,
            "household_type": household_type,
            "household_size": household_size,
            "land_category": land,
            "mpce": mpce,
            "weight": rng.uniform(0.5, 1.5, size=n),
            "employment_status": status,
            "colleges": np.array([colleges[d] for d in district], dtype=float),
            "ln_nightlight": np.log([nightlight[d] for d in district]),
            "nightlight_sd": np.array([nightlight_sd[d] for d in district]),
            "ln_wap": np.array([ln_wap[d] for d in district]),
            "immigrant_share": np.array([immigrant_share[district_state[d]] for d in district]),
        }
    )
    return _dataset(frame, "fixture", seed)


# --- replication harness --------------------------------------------------------


@dataclass(frozen=True)
class ReplicationOutcome:
    """What one replication reports back to the harness."""

    estimates: dict[str, float] = field(default_factory=dict)
    ses: dict[str, float] = field(default_factory=dict)
    truths: dict[str, float] = field(default_factory=dict)
    rejections: dict[str, bool] = field(default_factory=dict)


@dataclass(frozen=True)
class MonteCarloSummary:
    replications: int
    mean_bias: dict[str, float]
    coverage_95: dict[str, float]
    rejection_rate: dict[str, float]
    sd_estimates: dict[str, float]
    failures: tuple[int, ...] = ()

    def mc_se(self, name: str) -> float:
        """Monte Carlo standard error of the mean bias."""
        return self.sd_estimates[name] / math.sqrt(self.replications)

    def to_json_dict(self) -> dict:
        return {
            "replications": self.replications,
            "mean_bias": self.mean_bias,
            "coverage_95": self.coverage_95,
            "rejection_rate": self.rejection_rate,
            "sd_estimates": self.sd_estimates,
            "failures": list(self.failures),
        }


def monte_carlo(dgp, estimator, cfg: DGPConfig, reps: int) -> MonteCarloSummary:
    """Run ``reps`` replications of dgp -> estimator and aggregate.

    Replication r uses derived seed cfg.seed + r, so summaries are
    deterministic given (cfg, reps) and independent of scheduling. Failing
    replications are recorded by index and excluded from the aggregates.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    est_acc: dict[str, list[float]] = {}
    bias_acc: dict[str, list[float]] = {}
    cover_acc: dict[str, list[bool]] = {}
    reject_acc: dict[str, list[bool]] = {}
    failures: list[int] = []

    for r in range(reps):
        try:
            ds, truth = dgp(cfg.with_seed(cfg.seed + r))
            out = estimator(ds, truth)
        except Exception:
            failures.append(r)
            continue
        for nm, est in out.estimates.items():
            est_acc.setdefault(nm, []).append(est)
            t = out.truths.get(nm)
            if t is not None:
                bias_acc.setdefault(nm, []).append(est - t)
                se = out.ses.get(nm)
                if se is not None:
                    cover_acc.setdefault(nm, []).append(abs(est - t) <= 1.96 * se)
        for nm, rej in out.rejections.items():
            reject_acc.setdefault(nm, []).append(bool(rej))

    done = reps - len(failures)
    return MonteCarloSummary(
        replications=done,
        mean_bias={nm: float(np.mean(v)) for nm, v in bias_acc.items()},
        coverage_95={nm: float(np.mean(v)) for nm, v in cover_acc.items()},
        rejection_rate={nm: float(np.mean(v)) for nm, v in reject_acc.items()},
        sd_estimates={nm: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
                      for nm, v in est_acc.items()},
        failures=tuple(failures),
    )
