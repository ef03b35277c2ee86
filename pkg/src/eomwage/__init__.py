"""Education-occupation mismatch and returns to education under selection and endogeneity.

A numpy/scipy library for survey micro-data: realized-matches mismatch
classification, weighted least squares with robust covariance, probit
selection models with inverse-Mills corrections, heteroskedasticity-based
instrumental variables, a diagnostic test battery, Monte Carlo oracles with
known ground truth, and a config-driven replication pipeline.
"""

from .design import DesignMatrix, ModelSpec, encode_design, matrix_design
from .eom import (
    EduDecomposition,
    MatchStatus,
    OccupationEduStats,
    ThresholdPolicy,
    attach_decomposition,
    classify,
    classify_dataset,
    compute_occupation_stats,
    decompose,
    incidence_table,
    sensitivity_sweep,
)
from .diagnostics import (
    JustIdentified,
    TestResult,
    breusch_pagan,
    chow_coefficient_equality,
    durbin_wu_hausman,
    hansen_j,
    pairwise_corr_vif,
    weak_instrument_stats,
)
from .lewbel import InstrumentSet, TwoSLSFit, fit_2sls, generate_lewbel_instruments
from .pipeline import ReportBundle, RunConfig, make_default_config, run_replication
from .regress import FitResult, fit_wls, fit_with_covariance, predict, sandwich_cov
from .report import ReportTable, emit
from .selection import (
    HeckmanResult,
    MillsRatios,
    NetworkIndex,
    ProbitFit,
    SelectionSpec,
    fit_probit,
    heckman_wage_fit,
    inverse_mills,
    migrant_network,
    norm_mills,
)
from .simulate import (
    DGPConfig,
    EndogeneityBlock,
    MonteCarloSummary,
    OccupationPlan,
    ReplicationOutcome,
    SelectionBlock,
    monte_carlo,
    simulate_lewbel_dgp,
    simulate_selection_dgp,
    synth_fixture,
)
from .survey import (
    Dataset,
    WorkerRecord,
    default_analysis_criteria,
    filter_analysis_sample,
    load_csv,
    trim_wage_tails,
    weighted_tabulate,
)

__version__ = "0.1.0"
