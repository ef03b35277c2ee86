"""Education-occupation mismatch: required-education statistics and classification.

Required education for an occupation is measured from the realized education
distribution of its incumbents: the weighted mean (or median) plus/minus a
multiple of the weighted standard deviation defines the adequate band. A
worker above the band is overeducated, below it undereducated, inside it
adequately educated; attained years then decompose into required, surplus,
and deficit components that satisfy

    attained = required + surplus - deficit

exactly on every row.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidStatus
from .report import ReportTable
from .survey import MISSING_LEVEL, Dataset

# Occupations with fewer incumbents than this (weighted, raw) carry a
# degenerate dispersion estimate and are flagged unclassifiable.
MIN_WEIGHTED_SUPPORT = 5.0
MIN_RAW_SUPPORT = 2


class MatchStatus(enum.Enum):
    UNDEREDUCATED = "undereducated"
    ADEQUATE = "adequate"
    OVEREDUCATED = "overeducated"
    UNCLASSIFIABLE = "unclassifiable"


@dataclass(frozen=True)
class OccupationEduStats:
    """Weighted education statistics for one occupation code."""

    occ_code: str
    mean_edu: float
    sd_edu: float
    median_edu: float
    weighted_count: float
    raw_count: int

    @property
    def classifiable(self) -> bool:
        return self.weighted_count >= MIN_WEIGHTED_SUPPORT and self.raw_count >= MIN_RAW_SUPPORT


@dataclass(frozen=True)
class ThresholdPolicy:
    """Band half-width multiplier and center choice for the adequate range."""

    k: float = 1.0
    center: str = "mean"  # or "median"

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("threshold multiplier k must be positive")
        if self.center not in ("mean", "median"):
            raise ValueError("center must be 'mean' or 'median'")


@dataclass(frozen=True)
class EduDecomposition:
    attained: float
    required: float
    surplus: float
    deficit: float


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    cum = np.cumsum(w)
    idx = int(np.searchsorted(cum, 0.5 * cum[-1]))
    return float(v[min(idx, len(v) - 1)])


def compute_occupation_stats(ds: Dataset) -> dict[str, OccupationEduStats]:
    """Weighted mean/SD/median of education years per occupation code.

    SD uses the population formula sqrt(sum w (e - mean)^2 / sum w); the
    weights are survey expansion factors, not repetition counts, so no
    small-sample correction applies.
    """
    stats: dict[str, OccupationEduStats] = {}
    if ds.n == 0:
        return stats
    frame = ds.frame
    occ = frame["occ_code"].fillna(MISSING_LEVEL).astype(str).to_numpy()
    edu = frame["years_edu"].to_numpy(dtype=float)
    w = frame["weight"].to_numpy(dtype=float)
    for code in np.unique(occ):
        sel = occ == code
        e_g, w_g = edu[sel], w[sel]
        wsum = float(w_g.sum())
        mean = float(np.sum(w_g * e_g) / wsum)
        sd = float(np.sqrt(np.sum(w_g * (e_g - mean) ** 2) / wsum))
        stats[code] = OccupationEduStats(
            occ_code=code,
            mean_edu=mean,
            sd_edu=sd,
            median_edu=_weighted_median(e_g, w_g),
            weighted_count=wsum,
            raw_count=int(sel.sum()),
        )
    return stats


def classify(e_i: float, stats: OccupationEduStats,
             policy: ThresholdPolicy = ThresholdPolicy()) -> MatchStatus:
    """Classify one worker against the occupation band; bounds are inclusive."""
    if not stats.classifiable:
        return MatchStatus.UNCLASSIFIABLE
    center = stats.mean_edu if policy.center == "mean" else stats.median_edu
    half = policy.k * stats.sd_edu
    if e_i > center + half:
        return MatchStatus.OVEREDUCATED
    if e_i < center - half:
        return MatchStatus.UNDEREDUCATED
    return MatchStatus.ADEQUATE


def decompose(e_i: float, stats: OccupationEduStats, status: MatchStatus) -> EduDecomposition:
    """Split attained years into required, surplus, and deficit components.

    Required years for a mismatched worker is the occupation's weighted mean;
    the identity attained - required - surplus + deficit == 0 holds exactly
    in floating point.
    """
    if status == MatchStatus.UNCLASSIFIABLE:
        raise InvalidStatus(status)
    if status == MatchStatus.ADEQUATE:
        return EduDecomposition(attained=e_i, required=e_i, surplus=0.0, deficit=0.0)
    if status == MatchStatus.OVEREDUCATED:
        return EduDecomposition(attained=e_i, required=stats.mean_edu,
                                surplus=e_i - stats.mean_edu, deficit=0.0)
    return EduDecomposition(attained=e_i, required=stats.mean_edu,
                            surplus=0.0, deficit=stats.mean_edu - e_i)


def classify_dataset(ds: Dataset, policy: ThresholdPolicy = ThresholdPolicy(),
                     stats: dict[str, OccupationEduStats] | None = None) -> list[MatchStatus]:
    """Vector of match statuses, one per row, under the given policy.

    Rows whose occupation is absent from ``stats`` are unclassifiable.
    """
    if stats is None:
        stats = compute_occupation_stats(ds)
    occ = ds.frame["occ_code"].fillna(MISSING_LEVEL).astype(str).to_numpy()
    edu = ds.frame["years_edu"].to_numpy(dtype=float)
    out = []
    for e, c in zip(edu, occ):
        s = stats.get(c)
        out.append(MatchStatus.UNCLASSIFIABLE if s is None else classify(e, s, policy))
    return out


def attach_decomposition(ds: Dataset, policy: ThresholdPolicy = ThresholdPolicy(),
                         stats: dict[str, OccupationEduStats] | None = None) -> Dataset:
    """Dataset restricted to classifiable rows, with decomposition columns added.

    Adds edu_required, edu_surplus, edu_deficit, and match_status columns;
    unclassifiable rows are dropped (they carry no usable band).
    """
    if stats is None:
        stats = compute_occupation_stats(ds)
    statuses = classify_dataset(ds, policy, stats)
    occ = ds.frame["occ_code"].fillna(MISSING_LEVEL).astype(str).to_numpy()
    edu = ds.frame["years_edu"].to_numpy(dtype=float)
    keep = np.array([s != MatchStatus.UNCLASSIFIABLE for s in statuses])
    req, sur, def_, lab = [], [], [], []
    for i in np.flatnonzero(keep):
        d = decompose(edu[i], stats[occ[i]], statuses[i])
        req.append(d.required)
        sur.append(d.surplus)
        def_.append(d.deficit)
        lab.append(statuses[i].value)
    out = ds.subset(keep, f"drop {int((~keep).sum())} unclassifiable rows")
    return out.with_columns(edu_required=req, edu_surplus=sur, edu_deficit=def_,
                            match_status=lab)


def incidence_table(ds: Dataset, group_fields: list[str],
                    policy: ThresholdPolicy = ThresholdPolicy(),
                    stats: dict[str, OccupationEduStats] | None = None) -> ReportTable:
    """Weighted percent under/adequate/over per group; rows sum to 100.

    Shares are taken over classifiable workers only; the weighted share of
    unclassifiable workers, if any, is reported in a footnote.
    """
    statuses = classify_dataset(ds, policy, stats)
    w = ds.frame["weight"].to_numpy(dtype=float)
    if group_fields:
        keys = [ds.frame[f].fillna(MISSING_LEVEL).astype(str) for f in group_fields]
        labels = (keys[0] if len(keys) == 1 else keys[0].str.cat(keys[1:], sep=" | ")).to_numpy()
    else:
        labels = np.array(["all"] * ds.n)

    status_arr = np.array([s.value for s in statuses])
    classifiable = status_arr != MatchStatus.UNCLASSIFIABLE.value
    table = ReportTable(title=f"EOM incidence (k={policy.k}, center={policy.center})")
    order = [MatchStatus.UNDEREDUCATED.value, MatchStatus.ADEQUATE.value,
             MatchStatus.OVEREDUCATED.value]
    for label in sorted(np.unique(labels)):
        sel = (labels == label) & classifiable
        denom = w[sel].sum()
        if denom <= 0:
            continue
        for st in order:
            table.set(label, st, value=100.0 * w[sel & (status_arr == st)].sum() / denom)
    dropped = w[~classifiable].sum()
    if dropped > 0:
        table.add_footnote(
            f"{100.0 * dropped / w.sum():.2f}% of weight unclassifiable (below minimum support)."
        )
    table.add_footnote("Sampling weights used.")
    return table


def sensitivity_sweep(ds: Dataset, ks: list[float], centers: list[str] = ("mean",),
                      group_fields: list[str] | None = None) -> ReportTable:
    """Incidence shares across threshold multipliers and band centers.

    One block of rows per (k, center) pair; for a fixed center the adequate
    share is nondecreasing in k because the band bounds are inclusive and
    widen with k.
    """
    if not ks:
        raise ValueError("sweep needs at least one threshold multiplier")
    group_fields = group_fields or []
    stats = compute_occupation_stats(ds)
    out = ReportTable(title="EOM threshold sensitivity")
    for center in centers:
        for k in ks:
            sub = incidence_table(ds, group_fields, ThresholdPolicy(k=k, center=center), stats)
            for (row, col), cell in sub.cells.items():
                out.set(f"k={k}, center={center} | {row}", col, value=cell.value)
    out.add_footnote("Sampling weights used.")
    return out
