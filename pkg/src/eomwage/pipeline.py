"""Config-driven replication pipeline.

Chains ingestion -> mismatch classification -> selection probits -> corrected
wage equations -> subgroup splits -> instrumental-variable runs ->
diagnostics, and emits the full set of report tables. All outputs are a pure
function of (config, seed): running the same config twice produces
byte-identical files.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from . import diagnostics as dx
from .design import ModelSpec, encode_design
from .eom import ThresholdPolicy, attach_decomposition, compute_occupation_stats, sensitivity_sweep
from .errors import ConfigError, EomwageError, PerfectSeparation
from .lewbel import InstrumentSet, fit_2sls, generate_lewbel_instruments
from .regress import FitResult, fit_with_covariance
from .report import ReportTable, emit, stars_for_p
from .selection import SelectionSpec, attach_network, fit_probit, inverse_mills, migrant_network
from .simulate import synth_fixture
from .survey import Dataset, filter_analysis_sample, load_csv, trim_wage_tails

WORK_REASONS = ("job_search", "confirm_job", "other_work")
# right-open so the bands partition [0, inf) even for fractional years
YSM_BANDS = ((0, 3, "0-2"), (3, 6, "3-5"), (6, 11, "6-10"), (11, None, "11+"))


class StageFailure(EomwageError):
    def __init__(self, stage: str, original: Exception):
        self.stage = stage
        self.original = original
        super().__init__(f"stage {stage!r} failed: {original}")


@dataclass(frozen=True)
class IVTarget:
    name: str
    criteria: dict


@dataclass(frozen=True)
class IVBlock:
    endogenous: str = "years_edu"
    external: tuple[str, ...] = ()
    external_interactions: tuple[tuple[str, str], ...] = ()
    drivers: tuple[str, ...] = ()  # empty -> all external columns
    targets: tuple[IVTarget, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    """Everything a replication run needs; loadable from a JSON file."""

    data_path: str = "builtin:synthetic"
    schema: dict = field(default_factory=dict)
    codebook_path: str | None = None
    n_synthetic: int = 12000
    trim_fraction: float = 0.005
    threshold: ThresholdPolicy = field(default_factory=ThresholdPolicy)
    sensitivity_ks: tuple[float, ...] = (0.9, 1.0, 1.1)
    sensitivity_centers: tuple[str, ...] = ("mean", "median")
    wage_attained: ModelSpec | None = None
    wage_decomposed: ModelSpec | None = None
    migrant_controls: dict = field(default_factory=dict)
    selections: tuple[SelectionSpec, ...] = ()
    subgroup_axes: tuple[str, ...] = ("migration_reason", "stream", "distance", "ysm_band")
    iv: IVBlock = field(default_factory=IVBlock)
    covariance: str = "HC1"
    network_scale: float = 0.01
    mills_branch: str = "yes"
    output_dir: str = "out"
    seed: int = 0
    out_format: str = "csv"

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        threshold = ThresholdPolicy(**obj.get("threshold", {}))
        sens = obj.get("sensitivity", {})
        selections = tuple(
            SelectionSpec(
                role=s["role"],
                outcome=s["outcome"],
                spec=ModelSpec.from_dict(s["spec"]),
                exclusions=tuple(s["exclusions"]),
                fit_criteria=_parse_criteria(s.get("fit_criteria")),
            )
            for s in obj.get("selections", ())
        )
        ivobj = obj.get("iv", {})
        iv = IVBlock(
            endogenous=ivobj.get("endogenous", "years_edu"),
            external=tuple(ivobj.get("external", ())),
            external_interactions=tuple(tuple(p) for p in ivobj.get("external_interactions", ())),
            drivers=tuple(ivobj.get("drivers", ())),
            targets=tuple(
                IVTarget(name=t["name"], criteria=_parse_criteria(t["criteria"]))
                for t in ivobj.get("targets", ())
            ),
        )
        wage = obj.get("wage_formulas", {})
        return cls(
            data_path=obj.get("data", {}).get("path", "builtin:synthetic"),
            schema=obj.get("data", {}).get("schema", {}),
            codebook_path=obj.get("data", {}).get("codebook"),
            n_synthetic=int(obj.get("data", {}).get("n_synthetic", 12000)),
            trim_fraction=float(obj.get("trim_fraction", 0.005)),
            threshold=threshold,
            sensitivity_ks=tuple(sens.get("ks", (0.9, 1.0, 1.1))),
            sensitivity_centers=tuple(sens.get("centers", ("mean", "median"))),
            wage_attained=ModelSpec.from_dict(wage["attained"]) if "attained" in wage else None,
            wage_decomposed=ModelSpec.from_dict(wage["decomposed"]) if "decomposed" in wage else None,
            migrant_controls=wage.get("migrant_controls", {}),
            selections=selections,
            subgroup_axes=tuple(obj.get("subgroup_axes",
                                        ("migration_reason", "stream", "distance", "ysm_band"))),
            iv=iv,
            covariance=obj.get("covariance", {}).get("kind", "HC1"),
            network_scale=float(obj.get("network_scale", 0.01)),
            mills_branch=obj.get("mills_branch", "yes"),
            output_dir=obj.get("output_dir", "out"),
            seed=int(obj.get("seed", 0)),
            out_format=obj.get("format", "csv"),
        )

    @classmethod
    def from_json_file(cls, path: str) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(obj)


def _parse_criteria(obj):
    if obj is None:
        return None
    out = {}
    for k, v in obj.items():
        out[k] = tuple(v) if isinstance(v, list) and len(v) == 2 and all(
            isinstance(x, (int, float)) for x in v) else (list(v) if isinstance(v, list) else v)
    return out


@dataclass
class ReportBundle:
    tables: dict[str, ReportTable]
    manifest: dict
    fixture_csv: str | None = None

    def write(self, out_dir: str, fmt: str) -> list[str]:
        """Write every table plus the manifest; remove partial output on failure."""
        os.makedirs(out_dir, exist_ok=True)
        ext = {"csv": "csv", "json": "json", "markdown": "md"}[fmt]
        written: list[str] = []
        try:
            for key in sorted(self.tables):
                path = os.path.join(out_dir, f"{key}.{ext}")
                emit(self.tables[key], fmt, path)
                written.append(path)
            manifest_path = os.path.join(out_dir, "manifest.json")
            with open(manifest_path, "w", encoding="utf-8") as fh:
                json.dump(self.manifest, fh, indent=2, sort_keys=True)
                fh.write("\n")
            written.append(manifest_path)
            if self.fixture_csv is not None:
                fix_path = os.path.join(out_dir, "fixture.csv")
                with open(fix_path, "w", encoding="utf-8", newline="") as fh:
                    fh.write(self.fixture_csv)
                written.append(fix_path)
        except Exception:
            for path in written:
                try:
                    os.unlink(path)
                except OSError:
                    pass
            raise
        return written


# --- derived columns ---------------------------------------------------------


def _ysm_band(years: float) -> str:
    if not np.isfinite(years) or years < 0:
        return "none"
    for lo, hi, label in YSM_BANDS:
        if hi is None:
            if years >= lo:
                return label
        elif lo <= years < hi:
            return label
    return "none"


def derive_columns(ds: Dataset, network_scale: float = 0.01) -> Dataset:
    """Standard derived columns: age square, status indicators, migrant class,
    years-since-migration bands, and the experience-weighted network index."""
    frame = ds.frame
    age = frame["age"].to_numpy(dtype=float)
    status = frame["employment_status"].astype(str).to_numpy()
    migrant = frame["migrant"].to_numpy(dtype=bool)
    reason = frame["migration_reason"].astype(str).to_numpy()
    ysm = frame["years_since_migration"].to_numpy(dtype=float)
    mig_class = np.where(
        ~migrant, "non_migrant",
        np.where(np.isin(reason, WORK_REASONS), "work_migrant", "other_migrant"),
    )
    ds2 = ds.with_columns(
        age_sq=age * age,
        employed=np.isin(status, ("wage_salary", "self_employed")).astype(float),
        is_wage_salary=(status == "wage_salary").astype(float),
        is_migrant=migrant.astype(float),
        migrant_class=mig_class,
        ysm_band=[_ysm_band(v) for v in ysm],
    )
    return attach_network(ds2, migrant_network(ds2), scale=network_scale)


def _interaction_column(frame, a: str, b: str) -> np.ndarray:
    return frame[a].to_numpy(dtype=float) * frame[b].to_numpy(dtype=float)


# --- default configuration -----------------------------------------------------


def make_default_config(output_dir: str = "out", seed: int = 0, n: int = 12000,
                        out_format: str = "csv") -> RunConfig:
    """Replication config for the bundled synthetic fixture."""
    # Regional control is district-level (ln_wap): state-level shares would be
    # collinear with the state fixed effects, and ln_nightlight must stay out
    # of the structural equation because it serves as an excluded instrument.
    base_numeric = ("years_edu", "age", "age_sq", "ln_wap")
    base_cat = {
        "gender": "male",
        "marital": "unmarried",
        "social_group": "st",
        "religion": "hindu",
        "sector": "rural",
        "state_id": "S1",
    }
    attained = ModelSpec(
        response="daily_wage",
        numeric=base_numeric,
        categorical=dict(base_cat),
        interactions=(("gender", "marital"),),
    )
    decomposed = replace(
        attained,
        numeric=("edu_required", "edu_surplus", "edu_deficit") + base_numeric[1:],
    )
    probit_core = dict(
        numeric=("years_edu", "age", "age_sq"),
        categorical={"gender": "male", "marital": "unmarried", "social_group": "st",
                     "religion": "hindu", "sector": "rural"},
        log_response=False,
    )
    selections = (
        SelectionSpec(
            role="employment",
            outcome="employed",
            spec=ModelSpec(response="employed",
                           numeric=probit_core["numeric"] + ("dependents_count", "household_size"),
                           categorical={**probit_core["categorical"],
                                        "household_type": "self_employed"},
                           log_response=False),
            exclusions=("dependents_count", "household_type", "household_size"),
            fit_criteria={"age": (15, 59)},
        ),
        SelectionSpec(
            role="wage",
            outcome="is_wage_salary",
            spec=ModelSpec(response="is_wage_salary",
                           numeric=probit_core["numeric"],
                           categorical={**probit_core["categorical"], "land_category": "lt_0.005"},
                           log_response=False),
            exclusions=("land_category",),
            fit_criteria={"age": (15, 59), "employed": 1.0},
        ),
        SelectionSpec(
            role="migration",
            outcome="is_migrant",
            spec=ModelSpec(response="is_migrant",
                           numeric=probit_core["numeric"] + ("migrant_network",
                                                             "migrant_network_sq"),
                           categorical=dict(probit_core["categorical"]),
                           log_response=False),
            exclusions=("migrant_network", "migrant_network_sq"),
            fit_criteria={"age": (15, 59)},
        ),
    )
    iv = IVBlock(
        endogenous="years_edu",
        external=("colleges", "ln_nightlight", "nightlight_sd", "mpce", "mpce_x_colleges"),
        external_interactions=(("mpce", "colleges"),),
        drivers=(),
        targets=(
            IVTarget("non_migrants", {"migrant_class": "non_migrant"}),
            IVTarget("intra_district_migrants",
                     {"migrant_class": "work_migrant", "distance": "intra_district"}),
        ),
    )
    return RunConfig(
        data_path="builtin:synthetic",
        n_synthetic=n,
        wage_attained=attained,
        wage_decomposed=decomposed,
        migrant_controls={
            "categorical": {
                "migration_reason": "job_search",
                "stream": "RR",
                "distance": "intra_district",
                "ysm_band": "0-2",
                "prior_employment": "unemployed",
            }
        },
        selections=selections,
        iv=iv,
        output_dir=output_dir,
        seed=seed,
        out_format=out_format,
    )


def config_to_json_dict(cfg: RunConfig) -> dict:
    """Round-trippable JSON form of a RunConfig (for writing example configs)."""

    def spec_dict(spec: ModelSpec) -> dict:
        return {
            "response": spec.response,
            "numeric": list(spec.numeric),
            "categorical": dict(spec.categorical),
            "interactions": [list(p) for p in spec.interactions],
            "log_response": spec.log_response,
            "intercept": spec.intercept,
            "weight_column": spec.weight_column,
            "cluster_column": spec.cluster_column,
        }

    def crit(c):
        return None if c is None else {k: (list(v) if isinstance(v, tuple) else v)
                                       for k, v in c.items()}

    return {
        "data": {"path": cfg.data_path, "schema": cfg.schema,
                 "codebook": cfg.codebook_path, "n_synthetic": cfg.n_synthetic},
        "trim_fraction": cfg.trim_fraction,
        "threshold": {"k": cfg.threshold.k, "center": cfg.threshold.center},
        "sensitivity": {"ks": list(cfg.sensitivity_ks), "centers": list(cfg.sensitivity_centers)},
        "wage_formulas": {
            "attained": spec_dict(cfg.wage_attained),
            "decomposed": spec_dict(cfg.wage_decomposed),
            "migrant_controls": cfg.migrant_controls,
        },
        "selections": [
            {
                "role": s.role,
                "outcome": s.outcome,
                "spec": spec_dict(s.spec),
                "exclusions": list(s.exclusions),
                "fit_criteria": crit(s.fit_criteria),
            }
            for s in cfg.selections
        ],
        "subgroup_axes": list(cfg.subgroup_axes),
        "iv": {
            "endogenous": cfg.iv.endogenous,
            "external": list(cfg.iv.external),
            "external_interactions": [list(p) for p in cfg.iv.external_interactions],
            "drivers": list(cfg.iv.drivers),
            "targets": [{"name": t.name, "criteria": crit(t.criteria)} for t in cfg.iv.targets],
        },
        "covariance": {"kind": cfg.covariance},
        "network_scale": cfg.network_scale,
        "mills_branch": cfg.mills_branch,
        "output_dir": cfg.output_dir,
        "seed": cfg.seed,
        "format": cfg.out_format,
    }


# --- pipeline stages -------------------------------------------------------------


def _identity_schema(columns) -> dict:
    extra_float = ("colleges", "ln_nightlight", "nightlight_sd", "ln_wap", "immigrant_share")
    schema = {}
    for col in columns:
        if col in extra_float:
            schema[col] = {"column": col, "type": "float"}
        else:
            schema[col] = col
    return schema


def _load_stage(cfg: RunConfig) -> tuple[Dataset, str | None]:
    if cfg.data_path.startswith("builtin:synthetic"):
        fixture = synth_fixture(n=cfg.n_synthetic, seed=cfg.seed)
        csv_text = fixture.frame.to_csv(index=False)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "fixture.csv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(csv_text)
            ds = load_csv(path, _identity_schema(fixture.frame.columns),
                          codebook=cfg.codebook_path)
        # scrub the temp path so outputs are reproducible byte for byte
        from .survey import Provenance

        label = f"builtin:synthetic:n={cfg.n_synthetic}:seed={cfg.seed}"
        ds = Dataset(ds.frame, Provenance(source=label, filters=ds.provenance.filters))
        return ds, csv_text
    ds = load_csv(cfg.data_path, cfg.schema, codebook=cfg.codebook_path)
    return ds, None


def _validate_columns(cfg: RunConfig, ds: Dataset) -> None:
    available = set(ds.columns)
    needed: set[str] = set()
    for spec in (cfg.wage_attained, cfg.wage_decomposed):
        if spec is not None:
            needed |= spec.term_names() - {"edu_required", "edu_surplus", "edu_deficit"}
            needed.add(spec.weight_column)
    needed |= set(cfg.migrant_controls.get("categorical", {}))
    needed |= set(cfg.migrant_controls.get("numeric", ()))
    for s in cfg.selections:
        needed |= s.spec.term_names()
    needed |= set(cfg.iv.external) - {f"{a}_x_{b}" for a, b in cfg.iv.external_interactions}
    for a, b in cfg.iv.external_interactions:
        needed.update((a, b))
    needed |= set(cfg.subgroup_axes)
    missing = sorted(needed - available)
    if missing:
        raise ConfigError(f"config references missing column(s): {missing}")


def _coef_rows(fit: FitResult, names: list[str], table: ReportTable, col: str,
               extra_rows: bool = True) -> None:
    for nm in names:
        if nm not in fit.coefficients:
            continue
        b = fit.coefficients[nm]
        se = fit.se(nm)
        p = 2.0 * norm.sf(abs(b) / se) if se > 0 else 0.0
        table.set(nm, col, value=b, se=se, stars=stars_for_p(p))
    if extra_rows:
        table.set("observations", col, value=float(fit.n))
        table.set("r_squared", col, value=fit.r_squared)


def _prune_constant_columns(design, keep_always=("const",)):
    """Drop columns with no within-sample variation (absent dummy levels).

    Returns (design, dropped names); the intercept is always kept.
    """
    dropped = [nm for j, nm in enumerate(design.column_names)
               if nm not in keep_always and np.ptp(design.columns[:, j]) == 0]
    return (design.without(dropped) if dropped else design), dropped


def _augmented_spec(spec: ModelSpec, cfg: RunConfig, imr_names: tuple[str, ...],
                    migrant_sample: bool) -> ModelSpec:
    numeric = spec.numeric + tuple(imr_names)
    categorical = dict(spec.categorical)
    if migrant_sample:
        for fld, base in cfg.migrant_controls.get("categorical", {}).items():
            categorical[fld] = base
        numeric = numeric + tuple(cfg.migrant_controls.get("numeric", ()))
    return replace(spec, numeric=numeric, categorical=categorical)


class _SelectionStage:
    """Fits the three probits once and evaluates Mills columns on wage samples."""

    def __init__(self, cfg: RunConfig, full_ds: Dataset):
        self.cfg = cfg
        self.probits = {}
        self.designs = {}
        self.notes: list[str] = []
        for sel in cfg.selections:
            fit_ds = full_ds if sel.fit_criteria is None else filter_analysis_sample(
                full_ds, sel.fit_criteria)
            outcome = fit_ds.frame[sel.outcome].to_numpy(dtype=float)
            if np.unique(outcome[~np.isnan(outcome)]).size < 2:
                self.notes.append(f"{sel.role}: outcome degenerate; margin skipped")
                continue
            design = encode_design(fit_ds, sel.spec)
            try:
                self.probits[sel.role] = fit_probit(design)
                self.designs[sel.role] = design
            except PerfectSeparation as exc:
                self.notes.append(f"{sel.role}: {exc}; margin skipped")

    def attach_mills(self, wage_ds: Dataset) -> tuple[Dataset, tuple[str, ...], list[str]]:
        added: list[str] = []
        notes: list[str] = []
        cols = {}
        for sel in self.cfg.selections:
            if sel.role not in self.probits:
                continue
            outcome = wage_ds.frame[sel.outcome].to_numpy(dtype=float)
            if not np.any(outcome == 1):
                notes.append(f"{sel.role}: no selected rows in sample; lambda omitted")
                continue
            side = encode_design(wage_ds, sel.spec, levels=self.designs[sel.role].levels)
            lam = inverse_mills(self.probits[sel.role], side, selected=self.cfg.mills_branch)
            name = f"imr_{sel.role}"
            cols[name] = lam
            added.append(name)
        out = wage_ds.with_columns(**cols) if cols else wage_ds
        return out, tuple(added), notes

    def table(self) -> ReportTable:
        table = ReportTable(title="Selection probits")
        for role, probit in self.probits.items():
            for nm in probit.column_names:
                b = probit.coefficients[nm]
                se = probit.standard_errors[nm]
                p = 2.0 * norm.sf(abs(b) / se) if se > 0 else 0.0
                table.set(nm, role, value=b, se=se, stars=stars_for_p(p))
            table.set("log_likelihood", role, value=probit.log_likelihood)
            table.set("iterations", role, value=float(probit.iterations))
        for note in self.notes:
            table.add_footnote(note)
        table.add_footnote("Standard errors in parentheses; from the inverse observed information.")
        return table


def run_replication(cfg: RunConfig) -> ReportBundle:
    """Run the full replication pipeline and return the table bundle.

    Any stage error aborts the run with the stage named; nothing is written
    to disk until the whole bundle is assembled.
    """
    if cfg.wage_attained is None or cfg.wage_decomposed is None:
        raise ConfigError("config must declare attained and decomposed wage formulas")
    tables: dict[str, ReportTable] = {}
    notes: dict[str, list[str]] = {}
    stage = "ingest"
    try:
        raw, fixture_csv = _load_stage(cfg)
        data = derive_columns(raw, network_scale=cfg.network_scale)
        for a, b in cfg.iv.external_interactions:
            data = data.with_columns(**{f"{a}_x_{b}": _interaction_column(data.frame, a, b)})
        _validate_columns(cfg, data)

        stage = "eom"
        working_age = filter_analysis_sample(data, {"age": (15, 59)})
        wage_pool = filter_analysis_sample(working_age, {"employment_status": "wage_salary"})
        occ_stats = compute_occupation_stats(wage_pool)
        tables["threshold_sensitivity"] = sensitivity_sweep(
            wage_pool, ks=list(cfg.sensitivity_ks), centers=list(cfg.sensitivity_centers),
            group_fields=["migrant_class"],
        )

        stage = "selection"
        selection = _SelectionStage(cfg, data)
        tables["selection_probits"] = selection.table()

        stage = "wage_equations"
        trimmed = trim_wage_tails(wage_pool, cfg.trim_fraction)
        samples = {
            "work_migrants": filter_analysis_sample(trimmed, {"migrant_class": "work_migrant"}),
            "non_migrants": filter_analysis_sample(trimmed, {"migrant_class": "non_migrant"}),
        }
        t1 = ReportTable(title="Returns to education: attained and decomposed")
        fits: dict[tuple[str, str], FitResult] = {}
        aug_specs: dict[tuple[str, str], ModelSpec] = {}
        mills_samples: dict[str, Dataset] = {}
        for label, sample in samples.items():
            is_migrant_sample = label == "work_migrants"
            with_mills, imr_names, mnotes = selection.attach_mills(sample)
            notes.setdefault("wage_equations", []).extend(f"{label}: {m}" for m in mnotes)
            mills_samples[label] = with_mills
            spec_a = _augmented_spec(cfg.wage_attained, cfg, imr_names, is_migrant_sample)
            fit_a = fit_with_covariance(encode_design(with_mills, spec_a), cfg.covariance)
            fits[(label, "attained")] = fit_a
            aug_specs[(label, "attained")] = spec_a
            _coef_rows(fit_a, ["years_edu"], t1, f"{label}:attained")

            decomposed_ds = attach_decomposition(with_mills, cfg.threshold, occ_stats)
            spec_d = _augmented_spec(cfg.wage_decomposed, cfg, imr_names, is_migrant_sample)
            fit_d = fit_with_covariance(encode_design(decomposed_ds, spec_d), cfg.covariance)
            fits[(label, "decomposed")] = fit_d
            aug_specs[(label, "decomposed")] = spec_d
            _coef_rows(fit_d, ["edu_required", "edu_surplus", "edu_deficit"],
                       t1, f"{label}:decomposed")
        t1.add_footnote("Robust standard errors in parentheses; *** 1%, ** 5%, * 10%.")
        for note in notes.get("wage_equations", []):
            t1.add_footnote(note)
        tables["returns_main"] = t1

        stage = "subgroups"
        axis_table_names = {
            "migration_reason": "returns_by_reason",
            "stream": "returns_by_stream",
            "distance": "returns_by_distance",
            "ysm_band": "returns_by_tenure",
        }
        mig_ds = mills_samples["work_migrants"]
        spec_a = aug_specs[("work_migrants", "attained")]
        spec_d = aug_specs[("work_migrants", "decomposed")]
        mig_decomposed = attach_decomposition(mig_ds, cfg.threshold, occ_stats)
        for axis in cfg.subgroup_axes:
            key = axis_table_names.get(axis, f"returns_by_{axis}")
            table = ReportTable(title=f"Returns to education by {axis} (work-related migrants)")
            _coef_rows(fits[("work_migrants", "attained")], ["years_edu"], table, "overall")
            _coef_rows(fits[("work_migrants", "decomposed")],
                       ["edu_required", "edu_surplus", "edu_deficit"], table, "overall")
            levels = sorted(set(mig_ds.frame[axis].astype(str)))
            for level in levels:
                group_a = filter_analysis_sample(mig_ds, {axis: level})
                group_d = filter_analysis_sample(mig_decomposed, {axis: level})
                # the grouping variable cannot also be a regressor inside one group
                spec_a_g = replace(spec_a, categorical={k: v for k, v in spec_a.categorical.items()
                                                        if k != axis})
                spec_d_g = replace(spec_d, categorical={k: v for k, v in spec_d.categorical.items()
                                                        if k != axis})
                try:
                    design_ga, drop_a = _prune_constant_columns(encode_design(group_a, spec_a_g))
                    design_gd, drop_d = _prune_constant_columns(encode_design(group_d, spec_d_g))
                    fit_ga = fit_with_covariance(design_ga, cfg.covariance)
                    fit_gd = fit_with_covariance(design_gd, cfg.covariance)
                except EomwageError as exc:
                    table.add_footnote(f"group {level!r} skipped: {exc}")
                    continue
                for dropped in sorted(set(drop_a) | set(drop_d)):
                    table.add_footnote(f"group {level!r}: no variation in {dropped}; column dropped")
                _coef_rows(fit_ga, ["years_edu"], table, level)
                _coef_rows(fit_gd, ["edu_required", "edu_surplus", "edu_deficit"], table, level)
            for coef, source_ds, source_spec in (
                ("years_edu", mig_ds, spec_a),
                ("edu_required", mig_decomposed, spec_d),
                ("edu_surplus", mig_decomposed, spec_d),
                ("edu_deficit", mig_decomposed, spec_d),
            ):
                chow_spec = replace(source_spec,
                                    categorical={k: v for k, v in source_spec.categorical.items()
                                                 if k != axis})
                try:
                    res = dx.chow_coefficient_equality(source_ds, chow_spec, axis, coef)
                    table.set(coef, "chow_F", value=res.statistic,
                              stars=stars_for_p(res.p_value))
                except (EomwageError, ValueError) as exc:
                    table.add_footnote(f"chow test for {coef} skipped: {exc}")
            table.add_footnote("Chow column: F statistic for equality of the coefficient across groups.")
            tables[key] = table

        stage = "iv"
        t6 = ReportTable(title="Returns to attained education: OLS vs heteroskedasticity-IV")
        t12 = ReportTable(title="IV diagnostics")
        for target in cfg.iv.targets:
            sample = filter_analysis_sample(trimmed, target.criteria)
            with_mills, imr_names, mnotes = selection.attach_mills(sample)
            notes.setdefault("iv", []).extend(f"{target.name}: {m}" for m in mnotes)
            is_mig = bool(np.all(with_mills.frame["migrant"].to_numpy(dtype=bool)))
            spec_struct = _augmented_spec(cfg.wage_attained, cfg, imr_names, False)
            struct = encode_design(with_mills, spec_struct)
            ols = fit_with_covariance(struct, cfg.covariance)
            _coef_rows(ols, [cfg.iv.endogenous], t6, f"{target.name}:OLS")

            exog = struct.without([cfg.iv.endogenous])
            ext_cols = {nm: with_mills.frame[nm].to_numpy(dtype=float) for nm in cfg.iv.external}
            exog_with_ext = exog.with_added(list(ext_cols), np.column_stack(list(ext_cols.values())))
            drivers = list(cfg.iv.drivers) if cfg.iv.drivers else list(cfg.iv.external)
            generated = generate_lewbel_instruments(
                exog_with_ext, struct.column(cfg.iv.endogenous), drivers)
            instruments = InstrumentSet(external=ext_cols, generated=generated,
                                        included_exogenous=tuple(exog.column_names))
            tsls = fit_2sls(struct, [cfg.iv.endogenous], instruments, covariance=cfg.covariance)
            _coef_rows(tsls.second_stage, [cfg.iv.endogenous], t6, f"{target.name}:LewbelIV")

            bp = dx.breusch_pagan(ols, struct)
            dwh = dx.durbin_wu_hausman(struct, [cfg.iv.endogenous], instruments)
            weak = dx.weak_instrument_stats(tsls)
            hj = dx.hansen_j(tsls)
            for res in [bp, dwh, *weak]:
                t12.set(res.name, target.name, value=res.statistic, se=res.p_value)
            if isinstance(hj, dx.JustIdentified):
                t12.set("hansen_j", target.name, value="just identified")
            else:
                t12.set(hj.name, target.name, value=hj.statistic, se=hj.p_value)
            if is_mig:
                t6.add_footnote(f"{target.name}: migrant subsample (instruments valid "
                                "only where schooling district equals work district).")
        t6.add_footnote("Robust standard errors in parentheses; *** 1%, ** 5%, * 10%.")
        t12.add_footnote("Cells: statistic with p-value beneath in parentheses.")
        tables["returns_ols_vs_iv"] = t6
        tables["iv_diagnostics"] = t12
    except StageFailure:
        raise
    except Exception as exc:
        raise StageFailure(stage, exc) from exc

    manifest = {
        "config": config_to_json_dict(cfg),
        "tables": sorted(tables),
        "notes": {k: sorted(v) for k, v in notes.items()},
        "provenance": {"source": data.provenance.source, "filters": list(data.provenance.filters)},
    }
    return ReportBundle(tables=tables, manifest=manifest, fixture_csv=fixture_csv)
