"""Survey micro-data ingestion, validation, filtering, and weighted tabulation.

The canonical row schema mirrors a labour-force survey extract: daily wage,
years of education, a 3-digit occupation code, demographics, migration
fields, household characteristics, and a sampling weight. A ``Dataset`` is an
immutable wrapper around the parsed rows plus a provenance log of every
filter applied to it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataError, EmptyFile, MissingColumn, NoWageColumn, ParseError, UnknownField
from .report import ReportTable

# Default education level -> years codebook (standard Indian schooling
# durations); overridable via a JSON file passed to load_csv.
DEFAULT_CODEBOOK: dict[str, float] = {
    "no_schooling": 0,
    "below_primary": 2,
    "primary": 5,
    "middle": 8,
    "secondary": 10,
    "higher_secondary": 12,
    "graduate": 15,
    "postgraduate_plus": 17,
}

MISSING_LEVEL = "missing"

# Canonical fields and their parse type.
_NUMERIC_FIELDS = {
    "daily_wage",
    "years_edu",
    "age",
    "years_since_migration",
    "dependents_count",
    "household_size",
    "mpce",
    "weight",
}
_CATEGORICAL_FIELDS = {
    "occ_code",
    "industry",
    "gender",
    "marital",
    "social_group",
    "religion",
    "sector",
    "state_id",
    "district_id",
    "migration_reason",
    "stream",
    "distance",
    "prior_employment",
    "household_type",
    "land_category",
    "employment_status",
}
_BOOL_FIELDS = {"migrant"}
_MIGRATION_FIELDS = ("migration_reason", "stream", "distance")

REQUIRED_FIELDS = ("weight", "occ_code", "years_edu")


@dataclass(frozen=True)
class Household:
    dependents_count: float | None
    household_type: str
    household_size: float | None
    land_category: str
    mpce: float | None


@dataclass(frozen=True)
class WorkerRecord:
    """One survey row. Missing numerics are None; missing categoricals are "missing"."""

    person_id: str
    daily_wage: float | None
    years_edu: float
    occ_code: str
    industry: str
    age: float | None
    gender: str
    marital: str
    social_group: str
    religion: str
    sector: str
    state_id: str
    district_id: str
    migrant: bool
    migration_reason: str
    stream: str
    distance: str
    years_since_migration: float | None
    prior_employment: str
    household: Household
    weight: float
    employment_status: str


@dataclass(frozen=True)
class Provenance:
    source: str
    filters: tuple[str, ...] = ()

    def appended(self, entry: str) -> "Provenance":
        return Provenance(self.source, self.filters + (entry,))

    def to_json(self) -> str:
        return json.dumps({"source": self.source, "filters": list(self.filters)}, indent=2)


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of survey rows with a provenance log.

    Rows are stored as a flat frame, ordered deterministically by input
    order. All transforming operations return new Dataset objects.
    """

    frame: pd.DataFrame
    provenance: Provenance

    def __post_init__(self):
        object.__setattr__(self, "frame", self.frame.reset_index(drop=True))

    @property
    def n(self) -> int:
        return len(self.frame)

    @property
    def columns(self) -> list[str]:
        return list(self.frame.columns)

    def column(self, name: str) -> np.ndarray:
        if name not in self.frame.columns:
            raise UnknownField(name)
        return self.frame[name].to_numpy()

    def with_columns(self, **cols) -> "Dataset":
        frame = self.frame.copy()
        for name, values in cols.items():
            frame[name] = values
        return Dataset(frame, self.provenance.appended(f"added columns {sorted(cols)}"))

    def subset(self, mask: np.ndarray, note: str) -> "Dataset":
        return Dataset(self.frame.loc[np.asarray(mask, dtype=bool)], self.provenance.appended(note))

    def records(self):
        """Yield rows as WorkerRecord values (survey-schema datasets only)."""
        for _, row in self.frame.iterrows():
            yield _record_from_row(row)


def _record_from_row(row) -> WorkerRecord:
    def num(name):
        v = row.get(name)
        return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)

    def cat(name):
        v = row.get(name)
        return MISSING_LEVEL if v is None or (isinstance(v, float) and math.isnan(v)) else str(v)

    return WorkerRecord(
        person_id=str(row.get("person_id", "")),
        daily_wage=num("daily_wage"),
        years_edu=float(row["years_edu"]),
        occ_code=cat("occ_code"),
        industry=cat("industry"),
        age=num("age"),
        gender=cat("gender"),
        marital=cat("marital"),
        social_group=cat("social_group"),
        religion=cat("religion"),
        sector=cat("sector"),
        state_id=cat("state_id"),
        district_id=cat("district_id"),
        migrant=bool(row.get("migrant", False)),
        migration_reason=cat("migration_reason"),
        stream=cat("stream"),
        distance=cat("distance"),
        years_since_migration=num("years_since_migration"),
        prior_employment=cat("prior_employment"),
        household=Household(
            dependents_count=num("dependents_count"),
            household_type=cat("household_type"),
            household_size=num("household_size"),
            land_category=cat("land_category"),
            mpce=num("mpce"),
        ),
        weight=float(row["weight"]),
        employment_status=cat("employment_status"),
    )


# --- ingestion ---------------------------------------------------------------


def _parse_float(raw: str) -> float | None:
    raw = raw.strip()
    if raw == "" or raw.lower() in ("na", "nan", "none"):
        return None
    try:
        v = float(raw)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _parse_bool(raw: str) -> bool | None:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "y"):
        return True
    if v in ("0", "false", "no", "n", ""):
        return False
    return None


def _field_type(fld: str, declared: str | None) -> str:
    if declared is not None:
        return declared
    if fld in _NUMERIC_FIELDS:
        return "float"
    if fld in _BOOL_FIELDS:
        return "bool"
    if fld in _CATEGORICAL_FIELDS or fld in ("person_id", "edu_level"):
        return "str"
    return "float"  # extra columns default to numeric


def load_csv(path, schema: dict, codebook: dict[str, float] | str | None = None) -> Dataset:
    """Parse a UTF-8, comma-separated survey file into a Dataset.

    ``schema`` maps field names to CSV column headers; a value may also be a
    mapping ``{"column": header, "type": "float"|"str"}`` for extra columns
    beyond the canonical survey fields (which carry their natural types).
    Any field not mapped is left missing. ``years_edu`` may instead be
    supplied via an ``edu_level`` mapping together with a level->years
    codebook (a dict or a path to a JSON file; defaults to the built-in
    codebook).

    Required fields (weight, occ_code, years_edu) must parse and satisfy
    their invariants on every row; unparseable cells in other columns become
    missing values.
    """
    import csv as _csv

    if isinstance(codebook, str):
        with open(codebook, encoding="utf-8") as fh:
            codebook = {str(k): float(v) for k, v in json.load(fh).items()}
    elif codebook is None:
        codebook = dict(DEFAULT_CODEBOOK)

    with open(path, encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(str(path)) from None
        rows = list(reader)
    if not rows:
        raise EmptyFile(str(path))

    col_index: dict[str, int] = {}
    field_types: dict[str, str] = {}
    uses_edu_level = "edu_level" in schema and "years_edu" not in schema
    for fld, mapping in schema.items():
        csv_col = mapping["column"] if isinstance(mapping, dict) else mapping
        declared = mapping.get("type") if isinstance(mapping, dict) else None
        if csv_col not in header:
            raise MissingColumn(csv_col)
        col_index[fld] = header.index(csv_col)
        field_types[fld] = _field_type(fld, declared)
    for fld in REQUIRED_FIELDS:
        if fld == "years_edu" and uses_edu_level:
            continue
        if fld not in col_index:
            raise MissingColumn(fld)

    data: dict[str, list] = {fld: [] for fld in col_index if fld != "edu_level"}
    if uses_edu_level:
        data["years_edu"] = []
    if "person_id" not in data:
        data["person_id"] = []
    degraded = 0

    for i, raw_row in enumerate(rows):
        rownum = i + 1

        def cell(fld):
            return raw_row[col_index[fld]] if fld in col_index else ""

        # required: weight
        w = _parse_float(cell("weight"))
        if w is None or w <= 0:
            raise ParseError(rownum, "weight", "weights must be positive")
        data["weight"].append(w)

        # required: occupation code
        occ = cell("occ_code").strip()
        if occ == "":
            raise ParseError(rownum, "occ_code", "occupation code missing")
        data["occ_code"].append(occ)

        # required: education years, directly or via codebook
        if uses_edu_level:
            level = cell("edu_level").strip()
            if level not in codebook:
                raise ParseError(rownum, "edu_level", f"level {level!r} not in codebook")
            edu = float(codebook[level])
        else:
            edu = _parse_float(cell("years_edu"))
        if edu is None or not (0 <= edu <= 25):
            raise ParseError(rownum, "years_edu", "years of education must lie in [0, 25]")
        data["years_edu"].append(edu)

        migrant = None
        if "migrant" in col_index:
            migrant = _parse_bool(cell("migrant"))
            if migrant is None:
                migrant = False
                degraded += 1
            data["migrant"].append(migrant)

        for fld in data:
            if fld in ("weight", "occ_code", "years_edu", "migrant", "person_id"):
                continue
            raw = cell(fld)
            if field_types.get(fld, "float") == "float":
                v = _parse_float(raw)
                if v is not None:
                    if fld == "daily_wage" and v <= 0:
                        v = None
                    elif fld == "age" and v < 0:
                        v = None
                if v is None and raw.strip().lower() not in ("", "na", "nan", "none"):
                    degraded += 1
                data[fld].append(np.nan if v is None else v)
            else:
                v = raw.strip()
                data[fld].append(v if v else MISSING_LEVEL)

        if migrant is False:
            for fld in _MIGRATION_FIELDS:
                if fld in data and data[fld][-1] not in ("none", MISSING_LEVEL):
                    raise ParseError(rownum, fld, "non-migrant row carries migration fields")
            if "years_since_migration" in data:
                ysm = data["years_since_migration"][-1]
                if not (isinstance(ysm, float) and math.isnan(ysm)) and ysm != 0:
                    raise ParseError(rownum, "years_since_migration",
                                     "non-migrant row carries migration fields")

        data["person_id"].append(cell("person_id").strip() or str(rownum))

    frame = pd.DataFrame(data)
    prov = Provenance(source=str(path))
    if degraded:
        prov = prov.appended(f"{degraded} unparseable non-required cells set to missing")
    return Dataset(frame, prov)


# --- filtering ----------------------------------------------------------------


def default_analysis_criteria() -> dict:
    """Working-age (15-59 inclusive) wage/salary earners."""
    return {"age": (15, 59), "employment_status": "wage_salary"}


def _criterion_mask(values: np.ndarray, spec) -> np.ndarray:
    if isinstance(spec, tuple) and len(spec) == 2:
        lo, hi = spec
        v = values.astype(float)
        return (v >= lo) & (v <= hi) & ~np.isnan(v)
    if isinstance(spec, (list, set, frozenset)):
        return np.isin(values, list(spec))
    return values == spec


def filter_analysis_sample(ds: Dataset, criteria: dict | None = None) -> Dataset:
    """Keep rows satisfying all criteria; records the filter in provenance.

    Each criterion is field -> scalar (equality), (lo, hi) inclusive range,
    or a list of admissible values. Rows with missing values in a criterion
    field are dropped.
    """
    if criteria is None:
        criteria = default_analysis_criteria()
    mask = np.ones(ds.n, dtype=bool)
    for fld, spec in criteria.items():
        if fld not in ds.frame.columns:
            raise UnknownField(fld)
        mask &= _criterion_mask(ds.frame[fld].to_numpy(), spec)
    note = "filter " + ", ".join(f"{k}={v!r}" for k, v in criteria.items())
    return ds.subset(mask, note)


def trim_wage_tails(ds: Dataset, fraction: float = 0.005) -> Dataset:
    """Drop floor(fraction*N) rows from each tail of the wage distribution.

    Operates on the unweighted wage order statistic; ties are broken by
    stable input order. fraction must lie in [0, 0.1].
    """
    if not (0 <= fraction <= 0.1):
        raise ValueError("trim fraction must lie in [0, 0.1]")
    if "daily_wage" not in ds.frame.columns:
        raise NoWageColumn()
    wages = ds.frame["daily_wage"].to_numpy(dtype=float)
    if np.isnan(wages).any():
        raise DataError(
            f"{int(np.isnan(wages).sum())} rows have missing wages; "
            "filter to wage earners before trimming"
        )
    m = math.floor(fraction * ds.n)
    note = f"trim {fraction} per wage tail ({m} rows each)"
    if m == 0:
        return ds.subset(np.ones(ds.n, dtype=bool), note)
    order = np.argsort(wages, kind="stable")
    keep = np.ones(ds.n, dtype=bool)
    keep[order[:m]] = False
    keep[order[ds.n - m:]] = False
    return ds.subset(keep, note)


# --- tabulation ---------------------------------------------------------------


def weighted_tabulate(ds: Dataset, group_fields: list[str], statistic="share") -> ReportTable:
    """Weighted shares or weighted means by group.

    ``statistic`` is either "share" (weighted percent of the full sample,
    summing to 100 across the partition) or ("mean", field) for the weighted
    mean of a numeric field within each cell. Empty cells are simply absent
    from the table.
    """
    for fld in group_fields:
        if fld not in ds.frame.columns:
            raise UnknownField(fld)
    frame = ds.frame
    w = frame["weight"].to_numpy(dtype=float)

    if statistic == "share":
        col_label = "share_pct"
    elif isinstance(statistic, tuple) and statistic[0] == "mean":
        if statistic[1] not in frame.columns:
            raise UnknownField(statistic[1])
        col_label = f"mean_{statistic[1]}"
    else:
        raise ValueError(f"unknown statistic: {statistic!r}")

    keys = [frame[f].fillna(MISSING_LEVEL).astype(str) for f in group_fields]
    labels = keys[0] if len(keys) == 1 else keys[0].str.cat(keys[1:], sep=" | ")
    table = ReportTable(title=f"tabulation by {', '.join(group_fields)}")
    total_w = w.sum()

    for label in sorted(labels.unique()):
        in_cell = (labels == label).to_numpy()
        if statistic == "share":
            table.set(label, col_label, value=100.0 * w[in_cell].sum() / total_w)
        else:
            x = frame[statistic[1]].to_numpy(dtype=float)
            ok = in_cell & ~np.isnan(x)
            if ok.any():
                table.set(label, col_label, value=float(np.sum(w[ok] * x[ok]) / np.sum(w[ok])))
            # cells with no usable rows stay missing
    table.add_footnote("Sampling weights used.")
    return table
