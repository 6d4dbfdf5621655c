"""Shared fixtures: a small blocked design, reference parameters, and datasets."""
import pytest

from crowdchoice.design import enumerate_full_factorial, partition_blocks, select_d_optimal
from crowdchoice.model import (
    STATEMENTS,
    Dataset,
    RespondentRecord,
    SupplyAnswers,
    default_attribute_specs,
    published_parameters,
)
from crowdchoice.simulate import PopulationSpec, simulate_dataset, synthesize_population


@pytest.fixture(scope="session")
def specs():
    return default_attribute_specs()


@pytest.fixture(scope="session")
def full_factorial(specs):
    return enumerate_full_factorial(specs)


@pytest.fixture(scope="session")
def fraction54(full_factorial):
    # Few restarts: tests need a valid design, not the best one.
    return select_d_optimal(full_factorial, 54, seed=0, n_restarts=2)


@pytest.fixture(scope="session")
def blocks6(fraction54):
    return partition_blocks(fraction54, 6, seed=0, n_restarts=2)


@pytest.fixture(scope="session")
def design_tasks(blocks6):
    return tuple(blocks6.to_choice_tasks())


@pytest.fixture(scope="session")
def truth():
    return published_parameters()


@pytest.fixture(scope="session")
def small_dataset(design_tasks, truth):
    """60 simulated respondents; enough structure for integration tests."""
    population = synthesize_population(PopulationSpec(n=60, seed=11))
    return simulate_dataset(population, design_tasks, truth, seed=11)


@pytest.fixture
def make_record(design_tasks):
    """Factory for one hand-built valid respondent record."""

    def _make(rid="p01", block_id=1, **overrides):
        base = dict(
            id=rid,
            age_years=30,
            gender="female",
            household_size=3,
            n_children=1,
            car_in_household=1,
            income_uah_month=20000.0,
            employment="full",
            education_high=1,
            likert={s: 3 for s in STATEMENTS},
            block_id=block_id,
            choices=("CS",) * 9,
            supply=SupplyAnswers(
                remuneration_uah=85.0,
                cs_mode="subway",
                detour_min=30.0,
                remuneration_demand_uah=80.0,
                importance={"cost": 4, "time": 3, "eco": 1, "flex": 2},
            ),
        )
        base.update(overrides)
        return RespondentRecord(**base)

    return _make


@pytest.fixture
def tiny_dataset(design_tasks, make_record, specs):
    """Four hand-built respondents across two blocks."""
    records = (
        make_record("p01", 1),
        make_record("p02", 2, age_years=25, gender="male", car_in_household=0,
                    choices=("CC",) * 9,
                    supply=SupplyAnswers(90.0, "walk", 45.0,
                                         remuneration_demand_uah=85.0,
                                         importance={"cost": 3, "time": 4})),
        make_record("p03", 3, age_years=45, household_size=4, n_children=2,
                    choices=("STORE",) * 9,
                    supply=SupplyAnswers(75.0, "car", 20.0)),
        make_record("p04", 4, age_years=60, employment="part", education_high=0),
    )
    return Dataset(attributes=tuple(specs), design=design_tasks, respondents=records)
