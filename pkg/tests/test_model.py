"""Domain types: attribute coding, record validation, parameter sets."""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdchoice.model import (
    AGE_BANDS,
    ALTERNATIVES,
    INCOME_BAND_MIDPOINTS,
    MEASUREMENT_STATEMENTS,
    PARAM_NAMES,
    POSITIVE_PARAM_NAMES,
    STATEMENTS,
    AttributeSpec,
    ChoiceTask,
    CodingError,
    Dataset,
    ParameterSet,
    RespondentRecord,
    SupplyAnswers,
    ValidationError,
    age_band_index,
    code_income_band,
    code_time_level,
    default_attribute_specs,
    scale_covariates,
    structural_covariates,
    published_parameters,
)


class TestCoding:
    def test_time_level_midpoints(self):
        assert code_time_level("CS", 1) == 1.5
        assert code_time_level("CS", 2) == 4.5
        assert code_time_level("CS", 3) == 7.5
        # Open-ended top level: previous midpoint plus one interval width.
        assert code_time_level("CS", 4) == 10.5
        assert code_time_level("CC", 1) == 3.0
        assert code_time_level("CC", 2) == 9.0
        assert code_time_level("CC", 3) == 18.0
        assert code_time_level("CC", 4) == 30.0

    def test_time_level_errors(self):
        with pytest.raises(CodingError):
            code_time_level("STORE", 1)
        with pytest.raises(CodingError):
            code_time_level("CS", 0)
        with pytest.raises(CodingError):
            code_time_level("CS", 5)

    def test_income_band_midpoints(self):
        assert code_income_band(1) == 2500
        assert code_income_band(3) == 15000
        assert code_income_band(7) == 55000
        with pytest.raises(CodingError):
            code_income_band(0)
        with pytest.raises(CodingError):
            code_income_band(8)

    def test_age_bands(self):
        assert age_band_index(18) == 0
        assert age_band_index(24) == 0
        assert age_band_index(25) == 1
        assert age_band_index(34) == 1
        assert age_band_index(35) == 2
        assert age_band_index(45) == 3
        assert age_band_index(90) == 3  # top band is open-ended
        with pytest.raises(CodingError):
            age_band_index(17)

    @given(st.integers(min_value=18, max_value=120))
    @settings(max_examples=50, derandomize=True)
    def test_age_band_covers_all_adults(self, age):
        idx = age_band_index(age)
        assert 0 <= idx < len(AGE_BANDS)
        lo, hi = AGE_BANDS[idx]
        assert age >= lo
        if idx < len(AGE_BANDS) - 1:
            assert age <= hi


class TestAttributeSpecs:
    def test_default_grid(self, specs):
        assert [s.name for s in specs] == [
            "cs_cost", "cs_time", "cs_co2", "cs_flex", "cc_cost", "cc_time"]
        assert [s.n_levels for s in specs] == [3, 4, 2, 2, 3, 4]
        total = math.prod(s.n_levels for s in specs)
        assert total == 576

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            AttributeSpec("x", "NEITHER", (1.0, 2.0))
        with pytest.raises(ValidationError):
            AttributeSpec("x", "CS", (1.0,))
        with pytest.raises(ValidationError):
            AttributeSpec("x", "CS", (2.0, 1.0))
        with pytest.raises(ValidationError):
            AttributeSpec("x", "CS", (1.0, 2.0), labels=("only one",))


class TestChoiceTask:
    def test_accepts_valid_levels(self):
        task = ChoiceTask(block_id=1, task_id=1, cs_cost=60, cs_time=1.5,
                          cs_co2=1, cs_flex=0, cc_cost=75, cc_time=9.0)
        assert task.cs_cost == 60

    @pytest.mark.parametrize("field,value", [
        ("cs_cost", 61), ("cc_cost", 60), ("cs_time", 2.0),
        ("cc_time", 1.5), ("cs_co2", 2), ("cs_flex", -1),
    ])
    def test_rejects_off_grid_levels(self, field, value):
        kwargs = dict(block_id=1, task_id=1, cs_cost=60, cs_time=1.5,
                      cs_co2=1, cs_flex=0, cc_cost=75, cc_time=9.0)
        kwargs[field] = value
        with pytest.raises(ValidationError):
            ChoiceTask(**kwargs)


class TestRecords:
    def test_valid_record(self, make_record):
        rec = make_record()
        assert rec.id == "p01"
        assert set(rec.likert) == set(STATEMENTS)

    @pytest.mark.parametrize("overrides", [
        {"age_years": 17},
        {"gender": "other"},
        {"household_size": 0},
        {"n_children": -1},
        {"car_in_household": 2},
        {"income_uah_month": 0},
        {"employment": "retired"},
        {"education_high": 3},
        {"choices": ("CS",) * 8},
        {"choices": ("CS",) * 8 + ("WALK",)},
    ])
    def test_record_validation(self, make_record, overrides):
        with pytest.raises(ValidationError):
            make_record(**overrides)

    def test_likert_must_cover_all_statements(self, make_record):
        with pytest.raises(ValidationError):
            make_record(likert={s: 3 for s in STATEMENTS[:-1]})
        with pytest.raises(ValidationError):
            make_record(likert=dict({s: 3 for s in STATEMENTS}, F99=3))
        with pytest.raises(ValidationError):
            make_record(likert=dict({s: 3 for s in STATEMENTS}, F3=0))

    @pytest.mark.parametrize("kwargs", [
        {"remuneration_uah": 49, "cs_mode": "car", "detour_min": 30},
        {"remuneration_uah": 121, "cs_mode": "car", "detour_min": 30},
        {"remuneration_uah": 80, "cs_mode": "scooter", "detour_min": 30},
        {"remuneration_uah": 80, "cs_mode": "car", "detour_min": 14},
        {"remuneration_uah": 80, "cs_mode": "car", "detour_min": 61},
        {"remuneration_uah": 80, "cs_mode": "car", "detour_min": 30,
         "remuneration_demand_uah": 130},
        {"remuneration_uah": 80, "cs_mode": "car", "detour_min": 30,
         "importance": {"cost": 5}},
        {"remuneration_uah": 80, "cs_mode": "car", "detour_min": 30,
         "importance": {"speed": 2}},
    ])
    def test_supply_validation(self, kwargs):
        with pytest.raises(ValidationError):
            SupplyAnswers(**kwargs)

    def test_dataset_rejects_unknown_block(self, design_tasks, make_record, specs):
        with pytest.raises(ValidationError):
            Dataset(attributes=tuple(specs), design=design_tasks,
                    respondents=(make_record(block_id=99),))

    def test_dataset_rejects_duplicate_ids(self, design_tasks, make_record, specs):
        with pytest.raises(ValidationError):
            Dataset(attributes=tuple(specs), design=design_tasks,
                    respondents=(make_record("dup"), make_record("dup", 2)))


class TestParameterSet:
    def test_param_names_cover_all_blocks(self):
        assert len(PARAM_NAMES) == 40
        assert len(set(PARAM_NAMES)) == 40
        for w in MEASUREMENT_STATEMENTS:
            assert f"beta0_{w}" in PARAM_NAMES
            assert f"beta_{w}" in PARAM_NAMES
            assert f"sigma_{w}" in PARAM_NAMES

    def test_requires_exact_name_set(self):
        with pytest.raises(ValidationError):
            ParameterSet({n: 0.0 for n in PARAM_NAMES[:-1]})
        with pytest.raises(ValidationError):
            ParameterSet(dict({n: 0.0 for n in PARAM_NAMES}, junk=1.0))

    def test_replace_and_roundtrip(self):
        params = published_parameters()
        bumped = params.replace(ASC_CS=0.5)
        assert bumped["ASC_CS"] == 0.5
        assert params["ASC_CS"] == -0.112
        assert ParameterSet.from_dict(params.as_dict()).values == params.values
        with pytest.raises(ValidationError):
            params.replace(nope=1.0)

    def test_validate_strict(self):
        published_parameters().validate_strict()
        with pytest.raises(ValidationError):
            ParameterSet.zeros().validate_strict()
        null = ParameterSet.null_point()
        with pytest.raises(ValidationError):
            null.validate_strict()  # sigma_alpha is zero at the null
        assert null["sigma_F6"] == 1.0
        assert null["delta_1"] == 1.0

    def test_positive_param_list(self):
        assert "sigma_alpha" in POSITIVE_PARAM_NAMES
        assert "delta_1" in POSITIVE_PARAM_NAMES
        assert "sigma_structural" in POSITIVE_PARAM_NAMES
        assert len(POSITIVE_PARAM_NAMES) == 10


class TestScaling:
    def test_scale_covariates(self, make_record):
        rec = make_record(income_uah_month=25000, n_children=2)
        task = ChoiceTask(block_id=1, task_id=1, cs_cost=90, cs_time=4.5,
                          cs_co2=1, cs_flex=1, cc_cost=100, cc_time=30.0)
        feats = scale_covariates(rec, task)
        assert feats.cost_cs == pytest.approx(0.9)
        assert feats.time_cs == pytest.approx(0.45)
        assert feats.cost_cc == pytest.approx(1.0)
        assert feats.time_cc == pytest.approx(3.0)
        assert feats.co2_income == pytest.approx(2.5)
        assert feats.flex_income == pytest.approx(2.5)
        assert feats.n_children == 2.0
        assert feats.income == pytest.approx(2.5)

    def test_binary_attributes_zero_out_income_interactions(self, make_record):
        rec = make_record(income_uah_month=25000)
        task = ChoiceTask(block_id=1, task_id=1, cs_cost=90, cs_time=4.5,
                          cs_co2=0, cs_flex=0, cc_cost=100, cc_time=30.0)
        feats = scale_covariates(rec, task)
        assert feats.co2_income == 0.0
        assert feats.flex_income == 0.0

    def test_structural_covariates(self, make_record):
        rec = make_record(age_years=31, gender="male", household_size=3,
                          car_in_household=0, employment="part",
                          education_high=1, income_uah_month=15000)
        cov = structural_covariates(rec)
        assert cov == {
            "beta_income": 1.5, "beta_age30": 1.0, "beta_parttime": 1.0,
            "beta_highedu": 1.0, "beta_members": 1.0, "beta_male": 1.0,
            "beta_nocar": 1.0,
        }
        rec30 = make_record(age_years=30)
        assert structural_covariates(rec30)["beta_age30"] == 0.0

    def test_alternative_labels(self):
        assert ALTERNATIVES == ("CS", "CC", "STORE")
        assert INCOME_BAND_MIDPOINTS[-1] == 55000
