"""Ingestion, filtering, trimming, and weighted tabulation."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eomwage.errors import DataError, MissingColumn, NoWageColumn, ParseError, UnknownField
from eomwage.survey import (
    DEFAULT_CODEBOOK,
    filter_analysis_sample,
    load_csv,
    trim_wage_tails,
    weighted_tabulate,
)

from conftest import make_dataset

BASIC_SCHEMA = {
    "person_id": "id",
    "daily_wage": "wage",
    "years_edu": "edu",
    "occ_code": "occ",
    "age": "age",
    "weight": "wt",
    "employment_status": "status",
}


def write_csv(tmp_path, rows, header="id,wage,edu,occ,age,wt,status"):
    path = tmp_path / "survey.csv"
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return str(path)


class TestLoadCsv:
    def test_well_formed_three_rows(self, tmp_path):
        path = write_csv(tmp_path, [
            "p1,120.5,10,243,30,1.2,wage_salary",
            "p2,80,5,921,45,0.8,wage_salary",
            "p3,,12,131,28,1.0,self_employed",
        ])
        ds = load_csv(path, BASIC_SCHEMA)
        assert ds.n == 3
        records = list(ds.records())
        assert records[0].daily_wage == pytest.approx(120.5)
        assert records[2].daily_wage is None  # self-employed, wage missing
        assert records[1].occ_code == "921"

    def test_missing_weight_column(self, tmp_path):
        schema = dict(BASIC_SCHEMA)
        del schema["weight"]
        path = write_csv(tmp_path, ["p1,120,10,243,30,1.0,wage_salary"])
        with pytest.raises(MissingColumn):
            load_csv(path, schema)

    def test_negative_weight_is_parse_error(self, tmp_path):
        path = write_csv(tmp_path, ["p1,120,10,243,30,-1,wage_salary"])
        with pytest.raises(ParseError) as err:
            load_csv(path, BASIC_SCHEMA)
        assert err.value.column == "weight"

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("id,wage,edu,occ,age,wt,status\n", encoding="utf-8")
        from eomwage.errors import EmptyFile

        with pytest.raises(EmptyFile):
            load_csv(str(path), BASIC_SCHEMA)

    def test_education_out_of_range_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["p1,120,26,243,30,1.0,wage_salary"])
        with pytest.raises(ParseError):
            load_csv(path, BASIC_SCHEMA)

    def test_codebook_level_mapping(self, tmp_path):
        schema = dict(BASIC_SCHEMA)
        del schema["years_edu"]
        schema["edu_level"] = "edu"
        path = write_csv(tmp_path, ["p1,120,graduate,243,30,1.0,wage_salary"])
        ds = load_csv(path, schema)
        assert ds.frame.years_edu.iloc[0] == DEFAULT_CODEBOOK["graduate"]

    def test_unparseable_nonrequired_becomes_missing(self, tmp_path):
        path = write_csv(tmp_path, ["p1,oops,10,243,thirty,1.0,wage_salary"])
        ds = load_csv(path, BASIC_SCHEMA)
        assert math.isnan(ds.frame.daily_wage.iloc[0])
        assert math.isnan(ds.frame.age.iloc[0])
        assert any("unparseable" in f for f in ds.provenance.filters)

    def test_nonmigrant_with_migration_fields_rejected(self, tmp_path):
        schema = dict(BASIC_SCHEMA)
        schema["migrant"] = "mig"
        schema["migration_reason"] = "reason"
        header = "id,wage,edu,occ,age,wt,status,mig,reason"
        path = write_csv(tmp_path, ["p1,120,10,243,30,1.0,wage_salary,0,job_search"],
                         header=header)
        with pytest.raises(ParseError):
            load_csv(path, schema)


class TestFilter:
    def make(self):
        return make_dataset({
            "age": [14.0, 15.0, 59.0, 60.0, 30.0],
            "employment_status": ["wage_salary"] * 4 + ["self_employed"],
            "years_edu": [8.0] * 5,
        })

    def test_working_age_bounds_inclusive(self):
        out = filter_analysis_sample(self.make())
        assert list(out.frame.age) == [15.0, 59.0]

    def test_age_14_excluded(self):
        out = filter_analysis_sample(self.make())
        assert 14.0 not in set(out.frame.age)

    def test_self_employed_excluded_by_default(self):
        out = filter_analysis_sample(self.make())
        assert set(out.frame.employment_status) == {"wage_salary"}

    def test_idempotent(self):
        once = filter_analysis_sample(self.make())
        twice = filter_analysis_sample(once)
        assert once.frame.drop(columns=[]).equals(twice.frame)

    def test_unknown_field(self):
        with pytest.raises(UnknownField):
            filter_analysis_sample(self.make(), {"nope": 1})

    def test_provenance_appended(self):
        out = filter_analysis_sample(self.make())
        assert any(f.startswith("filter") for f in out.provenance.filters)


class TestTrim:
    def test_thousand_rows_default_fraction(self, rng):
        ds = make_dataset({"daily_wage": rng.lognormal(4, 1, size=1000)})
        out = trim_wage_tails(ds, 0.005)
        assert out.n == 990

    def test_zero_fraction_identity(self, rng):
        ds = make_dataset({"daily_wage": rng.lognormal(4, 1, size=100)})
        out = trim_wage_tails(ds, 0.0)
        assert out.n == 100
        assert list(out.frame.daily_wage) == list(ds.frame.daily_wage)

    def test_floor_semantics_small_n(self, rng):
        ds = make_dataset({"daily_wage": rng.lognormal(4, 1, size=10)})
        assert trim_wage_tails(ds, 0.005).n == 10  # floor(0.05) = 0 per tail

    def test_no_wage_column(self):
        with pytest.raises(NoWageColumn):
            trim_wage_tails(make_dataset({"years_edu": [1.0, 2.0]}), 0.005)

    def test_missing_wages_rejected(self):
        with pytest.raises(DataError):
            trim_wage_tails(make_dataset({"daily_wage": [1.0, float("nan")]}), 0.0)

    def test_drops_extremes(self):
        wages = [100.0] * 96 + [1.0, 2.0, 900.0, 1000.0]
        out = trim_wage_tails(make_dataset({"daily_wage": wages}), 0.02)
        assert out.n == 96
        assert out.frame.daily_wage.min() == 100.0
        assert out.frame.daily_wage.max() == 100.0

    def test_ties_broken_by_input_order(self):
        ds = make_dataset({"daily_wage": [5.0] * 10, "tag": list(range(10))})
        out = trim_wage_tails(ds, 0.1)
        assert list(out.frame.tag) == [1, 2, 3, 4, 5, 6, 7, 8]

    @given(n=st.integers(20, 400), frac=st.floats(0, 0.1))
    @settings(max_examples=40, deadline=None)
    def test_removes_exactly_two_floor(self, n, frac):
        wages = np.linspace(1, 50, n)
        out = trim_wage_tails(make_dataset({"daily_wage": wages}), frac)
        assert out.n == n - 2 * math.floor(frac * n)


class TestTabulate:
    def test_singleton_cells_mean(self):
        ds = make_dataset({"g": ["a", "b"], "x": [10.0, 20.0], "weight": [1.0, 1.0]})
        table = weighted_tabulate(ds, ["g"], ("mean", "x"))
        assert table.get("a", "mean_x").value == pytest.approx(10.0)
        assert table.get("b", "mean_x").value == pytest.approx(20.0)

    def test_weighted_mean_arithmetic(self):
        ds = make_dataset({"g": ["a", "a"], "x": [10.0, 20.0], "weight": [1.0, 3.0]})
        table = weighted_tabulate(ds, ["g"], ("mean", "x"))
        assert table.get("a", "mean_x").value == pytest.approx(17.5)

    def test_equal_weight_shares(self):
        ds = make_dataset({"g": ["A", "B"], "weight": [2.0, 2.0]})
        table = weighted_tabulate(ds, ["g"], "share")
        assert table.get("A", "share_pct").value == pytest.approx(50.0)
        assert table.get("B", "share_pct").value == pytest.approx(50.0)

    def test_shares_sum_to_100(self, rng):
        ds = make_dataset({
            "g": rng.choice(list("abcd"), size=200),
            "weight": rng.uniform(0.5, 2.0, size=200),
        })
        table = weighted_tabulate(ds, ["g"], "share")
        total = sum(table.get(r, "share_pct").value for r in table.row_labels)
        assert total == pytest.approx(100.0, abs=1e-9)

    def test_empty_cell_is_missing_not_error(self):
        ds = make_dataset({"g": ["a", "b"], "x": [10.0, float("nan")], "weight": [1.0, 1.0]})
        table = weighted_tabulate(ds, ["g"], ("mean", "x"))
        assert table.get("b", "mean_x").is_empty()
