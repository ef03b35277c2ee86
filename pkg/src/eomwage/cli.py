"""Command-line interface.

Subcommands: ingest (validate and summarize a survey file), eom (incidence
and threshold sensitivity), fit (a single wage equation), replicate (the full
table bundle), simulate (Monte Carlo suites), diagnose (the diagnostic
battery on a configured equation).

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import diagnostics as dx
from .design import encode_design
from .eom import ThresholdPolicy, incidence_table, sensitivity_sweep
from .errors import ConfigError, DataError, EomwageError, EstimationError
from .lewbel import InstrumentSet, fit_2sls, generate_lewbel_instruments
from .pipeline import (
    RunConfig,
    StageFailure,
    config_to_json_dict,
    derive_columns,
    make_default_config,
    run_replication,
)
from .regress import fit_with_covariance
from .report import ReportTable, emit
from .simulate import DGPConfig, EndogeneityBlock, SelectionBlock, monte_carlo, simulate_lewbel_dgp, simulate_selection_dgp
from .survey import filter_analysis_sample, trim_wage_tails

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _exit_code_for(exc: Exception) -> int:
    if isinstance(exc, StageFailure):
        return _exit_code_for(exc.original)
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, (EstimationError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    if isinstance(exc, EomwageError):
        return EXIT_CONFIG
    return EXIT_NUMERIC


def _load_config(args) -> RunConfig:
    if args.config == "builtin":
        cfg = make_default_config()
    else:
        cfg = RunConfig.from_json_file(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "out", None) is not None:
        cfg = replace(cfg, output_dir=args.out)
    if getattr(args, "format", None) is not None:
        cfg = replace(cfg, out_format=args.format)
    return cfg


def _load_data(cfg: RunConfig):
    from .pipeline import _load_stage

    ds, _ = _load_stage(cfg)
    return derive_columns(ds, network_scale=cfg.network_scale)


def _write_or_print(table: ReportTable, args, filename: str) -> None:
    fmt = args.format or "csv"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        ext = {"csv": "csv", "json": "json", "markdown": "md"}[fmt]
        emit(table, fmt, os.path.join(args.out, f"{filename}.{ext}"))
    else:
        sys.stdout.write(table.render(fmt))


def cmd_ingest(args) -> int:
    cfg = _load_config(args)
    data = _load_data(cfg)
    summary = {
        "rows": data.n,
        "columns": data.columns,
        "provenance": {"source": data.provenance.source,
                       "filters": list(data.provenance.filters)},
    }
    text = json.dumps(summary, indent=2) + "\n"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "ingest_summary.json"), "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_eom(args) -> int:
    cfg = _load_config(args)
    data = _load_data(cfg)
    sample = filter_analysis_sample(data)
    policy = ThresholdPolicy(k=args.k, center=args.center)
    _write_or_print(incidence_table(sample, ["migrant_class"], policy), args, "incidence")
    _write_or_print(
        sensitivity_sweep(sample, ks=list(cfg.sensitivity_ks),
                          centers=list(cfg.sensitivity_centers),
                          group_fields=["migrant_class"]),
        args, "sensitivity")
    return EXIT_OK


def _single_fit(cfg: RunConfig, args):
    data = _load_data(cfg)
    sample = trim_wage_tails(filter_analysis_sample(data), cfg.trim_fraction)
    spec = cfg.wage_attained if args.formula == "attained" else cfg.wage_decomposed
    if spec is None:
        raise ConfigError(f"config has no {args.formula} wage formula")
    if args.formula == "decomposed":
        from .eom import attach_decomposition

        sample = attach_decomposition(sample)
    return sample, spec, fit_with_covariance(encode_design(sample, spec), cfg.covariance)


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    _, _, fit = _single_fit(cfg, args)
    table = ReportTable(title=f"{args.formula} wage equation")
    from .pipeline import _coef_rows

    _coef_rows(fit, list(fit.column_names), table, "estimate")
    _write_or_print(table, args, f"fit_{args.formula}")
    if args.out:
        with open(os.path.join(args.out, f"fit_{args.formula}.fit.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(fit.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_replicate(args) -> int:
    cfg = _load_config(args)
    bundle = run_replication(cfg)
    written = bundle.write(cfg.output_dir, cfg.out_format)
    sys.stdout.write(f"wrote {len(written)} files to {cfg.output_dir}\n")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    cfg = _load_config(args)
    sample, spec, fit = _single_fit(cfg, args)
    design = encode_design(sample, spec)
    table = ReportTable(title="diagnostics")
    bp = dx.breusch_pagan(fit, design)
    table.set(bp.name, "value", value=bp.statistic, se=bp.p_value)
    if cfg.iv.external and cfg.iv.endogenous in design.column_names:
        exog = design.without([cfg.iv.endogenous])
        ext = {nm: sample.frame[nm].to_numpy(dtype=float) for nm in cfg.iv.external
               if nm in sample.frame.columns}
        exog_ext = exog.with_added(list(ext), np.column_stack(list(ext.values())))
        drivers = list(cfg.iv.drivers) if cfg.iv.drivers else list(ext)
        gen = generate_lewbel_instruments(exog_ext, design.column(cfg.iv.endogenous), drivers)
        instruments = InstrumentSet(external=ext, generated=gen,
                                    included_exogenous=tuple(exog.column_names))
        dwh = dx.durbin_wu_hausman(design, [cfg.iv.endogenous], instruments)
        table.set(dwh.name, "value", value=dwh.statistic, se=dwh.p_value)
        tsls = fit_2sls(design, [cfg.iv.endogenous], instruments, covariance=cfg.covariance)
        for res in dx.weak_instrument_stats(tsls):
            table.set(res.name, "value", value=res.statistic, se=res.p_value)
        hj = dx.hansen_j(tsls)
        if isinstance(hj, dx.JustIdentified):
            table.set("hansen_j", "value", value="just identified")
        else:
            table.set(hj.name, "value", value=hj.statistic, se=hj.p_value)
    table.add_footnote("Cells: statistic with p-value beneath in parentheses.")
    _write_or_print(table, args, "diagnostics")
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = args.seed if args.seed is not None else 0
    reps = args.reps
    if args.suite == "selection":
        cfg = DGPConfig(n=args.n or 5000, beta={"const": 1.0, "years_edu": 0.1},
                        selection=SelectionBlock(rho=0.5), seed=seed)
        from .validate import heckman_replication

        summary = monte_carlo(simulate_selection_dgp, heckman_replication, cfg, reps)
    elif args.suite == "lewbel":
        cfg = DGPConfig(n=args.n or 5000, beta={"const": 1.0, "years_edu": 0.1, "x_hetero": 0.5},
                        endogeneity=EndogeneityBlock(rho=0.5, delta=1.0), seed=seed)
        from .validate import lewbel_replication

        summary = monte_carlo(simulate_lewbel_dgp, lewbel_replication, cfg, reps)
    else:
        raise ConfigError(f"unknown simulation suite {args.suite!r}")
    text = json.dumps(summary.to_json_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"simulate_{args.suite}.json"), "w",
                  encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_write_config(args) -> int:
    cfg = make_default_config(output_dir=args.out or "out",
                              seed=args.seed if args.seed is not None else 0)
    path = args.path
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_json_dict(cfg), fh, indent=2)
        fh.write("\n")
    sys.stdout.write(f"wrote {path}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eomwage",
                                     description="Education-occupation mismatch and wage-returns pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formula=False):
        p.add_argument("--config", required=True,
                       help="path to a JSON run config, or 'builtin' for the synthetic fixture")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory (default: stdout)")
        p.add_argument("--format", choices=["csv", "json", "markdown"], default=None)
        if formula:
            p.add_argument("--formula", choices=["attained", "decomposed"], default="attained")

    common(sub.add_parser("ingest", help="validate and summarize the input data"))
    p_eom = sub.add_parser("eom", help="mismatch incidence and sensitivity tables")
    common(p_eom)
    p_eom.add_argument("--k", type=float, default=1.0)
    p_eom.add_argument("--center", choices=["mean", "median"], default="mean")
    common(sub.add_parser("fit", help="fit one wage equation"), formula=True)
    common(sub.add_parser("replicate", help="run the full replication bundle"))
    common(sub.add_parser("diagnose", help="diagnostic battery on a configured equation"),
           formula=True)
    p_sim = sub.add_parser("simulate", help="Monte Carlo validation suites")
    p_sim.add_argument("--suite", choices=["selection", "lewbel"], required=True)
    p_sim.add_argument("--reps", type=int, default=100)
    p_sim.add_argument("--n", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", default=None)
    p_cfg = sub.add_parser("write-config", help="write the builtin config to a JSON file")
    p_cfg.add_argument("path")
    p_cfg.add_argument("--seed", type=int, default=None)
    p_cfg.add_argument("--out", default=None)
    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "eom": cmd_eom,
    "fit": cmd_fit,
    "replicate": cmd_replicate,
    "diagnose": cmd_diagnose,
    "simulate": cmd_simulate,
    "write-config": cmd_write_config,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # mapped to documented exit codes
        sys.stderr.write(f"error: {exc}\n")
        return _exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
