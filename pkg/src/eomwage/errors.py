"""Exception hierarchy shared across the library.

Three broad families map onto the CLI exit codes: configuration problems
(exit 2), data problems (exit 3), and numerical/estimation failures (exit 4).
"""

from __future__ import annotations


class EomwageError(Exception):
    """Base class for all library errors."""


class ConfigError(EomwageError):
    """Invalid or inconsistent run configuration."""


class DataError(EomwageError):
    """Problem with input data (ingestion, schema, encoding)."""


class EstimationError(EomwageError):
    """Numerical or statistical failure during estimation."""


# --- data errors -----------------------------------------------------------


class MissingColumn(DataError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"required column not found: {name!r}")


class ParseError(DataError):
    def __init__(self, row: int, column: str, message: str = ""):
        self.row = row
        self.column = column
        detail = f": {message}" if message else ""
        super().__init__(f"cannot parse row {row}, column {column!r}{detail}")


class EmptyFile(DataError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"no data rows in {path}")


class UnknownField(DataError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown field: {name!r}")


class NoWageColumn(DataError):
    def __init__(self):
        super().__init__("dataset has no wage column")


class BaseLevelAbsent(DataError):
    def __init__(self, field: str, base: str):
        self.field = field
        self.base = base
        super().__init__(f"base level {base!r} absent from field {field!r}")


class NonPositiveWage(DataError):
    def __init__(self, count: int):
        self.count = count
        super().__init__(
            f"{count} row(s) with missing or non-positive wage reached encoding; "
            "log-wage is undefined"
        )


# --- estimation errors -----------------------------------------------------


class RankDeficient(EstimationError):
    def __init__(self, columns: list[str]):
        self.columns = list(columns)
        super().__init__(f"design is rank deficient; implicated columns: {self.columns}")


class InsufficientObservations(EstimationError):
    def __init__(self, n: int, k: int):
        self.n = n
        self.k = k
        super().__init__(f"need more observations than columns (n={n}, k={k})")


class TooFewClusters(EstimationError):
    def __init__(self, n_clusters: int):
        self.n_clusters = n_clusters
        super().__init__(f"cluster-robust covariance needs >= 2 clusters, got {n_clusters}")


class ColumnMismatch(EstimationError):
    def __init__(self, expected: list[str], got: list[str]):
        self.expected = list(expected)
        self.got = list(got)
        super().__init__(f"column names do not match fit: expected {self.expected}, got {self.got}")


class PerfectSeparation(EstimationError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"column {column!r} perfectly separates the response; likelihood unbounded")


class NotConverged(EstimationError):
    def __init__(self, iterations: int, gradient_norm: float):
        self.iterations = iterations
        self.gradient_norm = gradient_norm
        super().__init__(
            f"optimizer did not converge after {iterations} iterations "
            f"(|gradient| = {gradient_norm:.3e})"
        )


class ExclusionVariableInWageEquation(ConfigError):
    def __init__(self, name: str, role: str):
        self.name = name
        self.role = role
        super().__init__(
            f"exclusion variable {name!r} of the {role} selection also appears in the "
            "wage equation; identification requires it be excluded"
        )


class UnderIdentified(EstimationError):
    def __init__(self, n_endogenous: int, n_instruments: int):
        self.n_endogenous = n_endogenous
        self.n_instruments = n_instruments
        super().__init__(
            f"{n_endogenous} endogenous regressor(s) but only {n_instruments} excluded "
            "instrument(s); order condition fails"
        )


class GroupTooSmall(EstimationError):
    def __init__(self, group: str, n: int, k: int):
        self.group = group
        self.n = n
        self.k = k
        super().__init__(f"group {group!r} has n={n} <= k={k}; not estimable")


class ZeroVariance(EstimationError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"column {column!r} has zero variance")


class InvalidStatus(EstimationError):
    def __init__(self, status):
        self.status = status
        super().__init__(f"cannot decompose education for status {status}")
