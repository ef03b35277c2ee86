"""Design-matrix encoding: dummies, interactions, determinism."""

from __future__ import annotations

import numpy as np
import pytest

from eomwage.design import ModelSpec, encode_design, matrix_design
from eomwage.errors import BaseLevelAbsent, NonPositiveWage, UnknownField

from conftest import make_dataset


def wage_data(n=9):
    rng = np.random.default_rng(0)
    return make_dataset({
        "daily_wage": rng.lognormal(4, 0.5, size=n),
        "years_edu": rng.integers(0, 15, size=n).astype(float),
        "gender": list(np.resize(["male", "female", "female"], n)),
        "marital": list(np.resize(["unmarried", "married", "other"], n)),
        "weight": rng.uniform(0.5, 1.5, size=n),
    })


class TestEncoding:
    def test_three_level_categorical_two_dummies(self):
        spec = ModelSpec(response="daily_wage", categorical={"marital": "unmarried"})
        design = encode_design(wage_data(), spec)
        dummies = [nm for nm in design.column_names if nm.startswith("marital[")]
        assert sorted(dummies) == ["marital[married]", "marital[other]"]

    def test_interaction_is_product_of_dummies(self):
        spec = ModelSpec(
            response="daily_wage",
            categorical={"gender": "male", "marital": "unmarried"},
            interactions=(("gender", "marital"),),
        )
        design = encode_design(wage_data(), spec)
        prod = design.column("gender[female]") * design.column("marital[married]")
        np.testing.assert_array_equal(design.column("gender[female]:marital[married]"), prod)

    def test_zero_wage_raises(self):
        ds = make_dataset({"daily_wage": [10.0, 0.0], "weight": [1.0, 1.0]})
        with pytest.raises(NonPositiveWage):
            encode_design(ds, ModelSpec(response="daily_wage"))

    def test_log_response(self):
        ds = wage_data()
        design = encode_design(ds, ModelSpec(response="daily_wage"))
        np.testing.assert_allclose(design.response, np.log(ds.frame.daily_wage))

    def test_single_intercept_column(self):
        design = encode_design(wage_data(), ModelSpec(response="daily_wage",
                                                      numeric=("years_edu",)))
        assert design.column_names.count("const") == 1
        np.testing.assert_array_equal(design.column("const"), 1.0)

    def test_intercept_suppressed(self):
        design = encode_design(wage_data(), ModelSpec(response="daily_wage",
                                                      numeric=("years_edu",), intercept=False))
        assert "const" not in design.column_names

    def test_base_level_absent(self):
        with pytest.raises(BaseLevelAbsent):
            encode_design(wage_data(), ModelSpec(response="daily_wage",
                                                 categorical={"gender": "nonbinary_base"}))

    def test_unknown_field(self):
        with pytest.raises(UnknownField):
            encode_design(wage_data(), ModelSpec(response="daily_wage", numeric=("nope",)))

    def test_row_permutation_gives_permuted_rows_same_columns(self):
        ds = wage_data(30)
        spec = ModelSpec(response="daily_wage", numeric=("years_edu",),
                         categorical={"gender": "male", "marital": "unmarried"})
        design = encode_design(ds, spec)
        perm = np.random.default_rng(7).permutation(30)
        shuffled = make_dataset({col: ds.frame[col].to_numpy()[perm] for col in ds.columns})
        design_p = encode_design(shuffled, spec)
        assert design_p.column_names == design.column_names
        np.testing.assert_allclose(design_p.columns, design.columns[perm])
        np.testing.assert_allclose(design_p.response, design.response[perm])

    def test_fixed_levels_reencode_on_subsample(self):
        ds = wage_data(30)
        spec = ModelSpec(response="daily_wage", categorical={"marital": "unmarried"})
        full = encode_design(ds, spec)
        sub = make_dataset({col: ds.frame[col].to_numpy()[:4] for col in ds.columns})
        again = encode_design(sub, spec, levels=full.levels)
        assert again.column_names == full.column_names

    def test_missing_categorical_becomes_level(self):
        ds = make_dataset({
            "daily_wage": [10.0, 12.0, 9.0, 11.0],
            "grp": ["a", None, "b", "a"],
            "weight": [1.0] * 4,
        })
        design = encode_design(ds, ModelSpec(response="daily_wage", categorical={"grp": "a"}))
        assert "grp[missing]" in design.column_names

    def test_arrays_read_only(self):
        design = encode_design(wage_data(), ModelSpec(response="daily_wage"))
        with pytest.raises(ValueError):
            design.columns[0, 0] = 5.0


class TestMatrixDesign:
    def test_round_trip(self):
        y = np.array([1.0, 2.0, 3.0])
        d = matrix_design(y, {"const": np.ones(3), "x": np.array([0.0, 1.0, 2.0])})
        assert d.column_names == ("const", "x")
        np.testing.assert_array_equal(d.response, y)
        assert d.n == 3 and d.k == 2
