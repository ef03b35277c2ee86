"""Model specifications and design-matrix encoding.

``ModelSpec`` declares a response, numeric terms, categorical terms with
their base levels, and interaction terms; ``encode_design`` turns a Dataset
into the numeric ``DesignMatrix`` consumed by the estimators. Column order is
deterministic: intercept, numeric terms in declaration order, categorical
dummies in declaration order with levels sorted lexicographically, then
interaction products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import BaseLevelAbsent, DataError, NonPositiveWage, UnknownField
from .survey import MISSING_LEVEL, Dataset


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of one regression equation.

    ``categorical`` maps field -> base level (the omitted category).
    ``interactions`` are pairs of term names; categorical operands expand to
    products over all their dummy columns. When ``log_response`` is set the
    response is log-transformed (the wage-equation convention); rows with
    missing or non-positive response then raise NonPositiveWage.
    """

    response: str
    numeric: tuple[str, ...] = ()
    categorical: dict[str, str] = field(default_factory=dict)
    interactions: tuple[tuple[str, str], ...] = ()
    log_response: bool = True
    intercept: bool = True
    weight_column: str = "weight"
    cluster_column: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "numeric", tuple(self.numeric))
        object.__setattr__(self, "interactions", tuple(tuple(p) for p in self.interactions))

    def term_names(self) -> set[str]:
        names = {self.response, *self.numeric, *self.categorical}
        for a, b in self.interactions:
            names.update((a, b))
        return names

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelSpec":
        return cls(
            response=obj["response"],
            numeric=tuple(obj.get("numeric", ())),
            categorical=dict(obj.get("categorical", {})),
            interactions=tuple(tuple(p) for p in obj.get("interactions", ())),
            log_response=bool(obj.get("log_response", True)),
            intercept=bool(obj.get("intercept", True)),
            weight_column=obj.get("weight_column", "weight"),
            cluster_column=obj.get("cluster_column"),
        )


@dataclass(frozen=True)
class DesignMatrix:
    """Encoded regression inputs: response vector, named columns, weights.

    Immutable; the arrays are marked read-only. ``levels`` records the level
    set observed per categorical term so a spec can be re-encoded consistently
    on a subsample.
    """

    response: np.ndarray
    columns: np.ndarray
    weights: np.ndarray
    column_names: tuple[str, ...]
    cluster_ids: np.ndarray | None = None
    levels: dict[str, tuple[str, ...]] = field(default_factory=dict)
    response_name: str = "y"

    def __post_init__(self):
        for arr in (self.response, self.columns, self.weights):
            arr.setflags(write=False)
        if self.cluster_ids is not None:
            self.cluster_ids.setflags(write=False)
        n = len(self.response)
        if self.columns.shape[0] != n or len(self.weights) != n:
            raise ValueError("response, columns, and weights must have equal length")
        if self.columns.shape[1] != len(self.column_names):
            raise ValueError("column count must match column_names")

    @property
    def n(self) -> int:
        return len(self.response)

    @property
    def k(self) -> int:
        return self.columns.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.column_names.index(name)
        except ValueError:
            raise UnknownField(name) from None
        return self.columns[:, idx]

    def with_added(self, names: list[str], cols: np.ndarray) -> "DesignMatrix":
        return DesignMatrix(
            response=self.response,
            columns=np.column_stack([self.columns, cols]),
            weights=self.weights,
            column_names=self.column_names + tuple(names),
            cluster_ids=self.cluster_ids,
            levels=self.levels,
            response_name=self.response_name,
        )

    def without(self, names: list[str]) -> "DesignMatrix":
        drop = set(names)
        keep = [i for i, nm in enumerate(self.column_names) if nm not in drop]
        return DesignMatrix(
            response=self.response,
            columns=self.columns[:, keep],
            weights=self.weights,
            column_names=tuple(self.column_names[i] for i in keep),
            cluster_ids=self.cluster_ids,
            levels=self.levels,
            response_name=self.response_name,
        )


def _categorical_values(frame: pd.DataFrame, fld: str) -> pd.Series:
    return frame[fld].fillna(MISSING_LEVEL).astype(str)


def _dummy_block(frame, fld, base, fixed_levels):
    values = _categorical_values(frame, fld)
    if fixed_levels is not None:
        observed = set(values.unique())
        unknown = observed.difference(fixed_levels)
        if unknown:
            raise DataError(f"field {fld!r} has levels {sorted(unknown)} unseen at fit time")
        levels = list(fixed_levels)
    else:
        levels = sorted(values.unique())
        if base not in levels:
            raise BaseLevelAbsent(fld, base)
    names, cols = [], []
    for level in levels:
        if level == base:
            continue
        names.append(f"{fld}[{level}]")
        cols.append((values == level).to_numpy(dtype=float))
    return names, cols, tuple(levels)


def encode_design(ds: Dataset, spec: ModelSpec, levels: dict[str, tuple[str, ...]] | None = None) -> DesignMatrix:
    """Encode a Dataset into a DesignMatrix according to a ModelSpec.

    Pass ``levels`` (from a previously encoded design) to reproduce the same
    dummy columns on a subsample; otherwise levels are discovered from the
    data and sorted lexicographically so the encoding is invariant to row
    order.
    """
    frame = ds.frame
    for term in spec.term_names() | {spec.weight_column}:
        if term not in frame.columns:
            raise UnknownField(term)
    if spec.cluster_column is not None and spec.cluster_column not in frame.columns:
        raise UnknownField(spec.cluster_column)

    y_raw = frame[spec.response].to_numpy(dtype=float)
    if spec.log_response:
        bad = ~(y_raw > 0)
        if bad.any():
            raise NonPositiveWage(int(bad.sum()))
        y = np.log(y_raw)
    else:
        if np.isnan(y_raw).any():
            raise DataError(f"response {spec.response!r} has missing values")
        y = y_raw.copy()

    names: list[str] = []
    cols: list[np.ndarray] = []
    level_map: dict[str, tuple[str, ...]] = {}
    if spec.intercept:
        names.append("const")
        cols.append(np.ones(len(frame)))

    for term in spec.numeric:
        x = frame[term].to_numpy(dtype=float)
        if np.isnan(x).any():
            raise DataError(f"numeric term {term!r} has missing values")
        names.append(term)
        cols.append(x)

    encoded: dict[str, tuple[list[str], list[np.ndarray]]] = {}
    for fld, base in spec.categorical.items():
        fixed = levels.get(fld) if levels else None
        dnames, dcols, lvl = _dummy_block(frame, fld, base, fixed)
        names.extend(dnames)
        cols.extend(dcols)
        level_map[fld] = lvl
        encoded[fld] = (dnames, dcols)

    def operand(term):
        if term in encoded:
            return encoded[term]
        if term in spec.numeric:
            return [term], [frame[term].to_numpy(dtype=float)]
        raise UnknownField(term)

    for a, b in spec.interactions:
        a_names, a_cols = operand(a)
        b_names, b_cols = operand(b)
        for an, ac in zip(a_names, a_cols):
            for bn, bc in zip(b_names, b_cols):
                names.append(f"{an}:{bn}")
                cols.append(ac * bc)

    w = frame[spec.weight_column].to_numpy(dtype=float)
    if np.isnan(w).any() or (w <= 0).any():
        raise DataError("weights must be positive and present on every row")

    cluster = None
    if spec.cluster_column is not None:
        cluster = _categorical_values(frame, spec.cluster_column).to_numpy()

    return DesignMatrix(
        response=y,
        columns=np.column_stack(cols) if cols else np.empty((len(frame), 0)),
        weights=w.copy(),
        column_names=tuple(names),
        cluster_ids=cluster,
        levels=level_map,
        response_name=("log_" + spec.response) if spec.log_response else spec.response,
    )


def matrix_design(y: np.ndarray, columns: dict[str, np.ndarray], weights: np.ndarray | None = None,
                  cluster_ids: np.ndarray | None = None, response_name: str = "y") -> DesignMatrix:
    """Assemble a DesignMatrix directly from arrays (no Dataset needed)."""
    names = tuple(columns)
    X = np.column_stack([np.asarray(columns[nm], dtype=float) for nm in names])
    y = np.asarray(y, dtype=float).copy()
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float).copy()
    cl = None if cluster_ids is None else np.asarray(cluster_ids).copy()
    return DesignMatrix(response=y, columns=X, weights=w, column_names=names,
                        cluster_ids=cl, response_name=response_name)
