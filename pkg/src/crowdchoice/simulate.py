"""Generative oracle: synthetic populations and simulated survey datasets.

``synthesize_population`` draws covariate profiles from marginal
distributions (defaults follow the study sample's breakdown).
``simulate_dataset`` then runs the hybrid model generatively: one latent
variable and one agent-effect draw per respondent, choices sampled from
the logit kernel, measurement statements from the ordered-probit bins,
and supply-side answers from documented default conditionals.

Every respondent consumes an independent, counter-based random stream, so
output is reproducible and independent of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    AGE_BANDS,
    CS_MODES,
    Dataset,
    EMPLOYMENT_STATUSES,
    GENDERS,
    IMPORTANCE_ATTRIBUTES,
    INCOME_BAND_MIDPOINTS,
    MEASUREMENT_STATEMENTS,
    ParameterSet,
    RespondentRecord,
    STATEMENTS,
    SupplyAnswers,
    ValidationError,
    age_band_index,
    default_attribute_specs,
)
from .likelihood import (
    ThresholdVector,
    ordered_indicator_prob,
    structural_value,
    task_utilities,
)

#: Scores 1..5 for statements outside the measurement set.
NEUTRAL_LIKERT = (0.10, 0.20, 0.40, 0.20, 0.10)

#: Courier-mode shares conditional on household car availability.
MODE_SHARES_CAR = {"car": 0.61, "subway": 0.12, "walk": 0.10, "bus": 0.07,
                   "bicycle": 0.05, "tram_trolley": 0.05}
MODE_SHARES_NO_CAR = {"subway": 0.43, "walk": 0.28, "bus": 0.12,
                      "bicycle": 0.08, "tram_trolley": 0.07, "car": 0.02}

#: Mean acceptable detour (minutes) per courier mode; sd 8, clipped 15..60.
DETOUR_MEAN_MIN = {"tram_trolley": 38.4, "bus": 19.3, "car": 30.6,
                   "subway": 33.9, "walk": 35.0, "bicycle": 30.0}
DETOUR_SD_MIN = 8.0

#: Mean supply-side remuneration (UAH) per age band; sd 8, clipped 50..120.
SUPPLY_REMUNERATION_MEAN = (84.0, 85.43, 81.45, 78.96)
#: Demand-side mean minus supply-side mean per age band: younger
#: respondents expect more as couriers than they would pay, older ones
#: the reverse, most strongly at 35-44.
DEMAND_SUPPLY_GAP = (-5.2, -4.1, 6.45, 5.1)
REMUNERATION_SD = 8.0

#: Score distributions (1..4) for the four attribute-importance items.
IMPORTANCE_DIST = {
    "cost": (0.04, 0.08, 0.22, 0.66),
    "time": (0.05, 0.10, 0.30, 0.55),
    "flex": (0.10, 0.20, 0.40, 0.30),
    "eco": (0.25, 0.30, 0.30, 0.15),
}

_SAMPLE_AGE = (81, 58, 62, 48)
_SAMPLE_GENDER = (121, 128)            # female, male
_SAMPLE_HOUSEHOLD = (55, 50, 78, 66)   # 1, 2, 3, 4+
_SAMPLE_CAR = (83, 166)                # no, yes
_SAMPLE_INCOME = (28, 83, 80, 30, 6, 9, 13)
_SAMPLE_EMPLOYMENT = (155, 52, 3, 15, 24)
_SAMPLE_N = 249


def _shares(counts: Sequence[int]) -> tuple[float, ...]:
    total = sum(counts)
    return tuple(c / total for c in counts)


@dataclass(frozen=True)
class PersonProfile:
    """Covariates of one synthetic respondent (no survey answers yet)."""

    id: str
    age_years: int
    gender: str
    household_size: int
    n_children: int
    car_in_household: int
    income_uah_month: float
    employment: str
    education_high: int


@dataclass(frozen=True)
class PopulationSpec:
    """Marginal distributions for population synthesis.

    Orders: age bands as AGE_BANDS; genders (female, male); household
    sizes (1, 2, 3, 4+); car (none, available); income bands low to high;
    employment as EMPLOYMENT_STATUSES.
    """

    n: int
    age_band_shares: tuple[float, ...] = _shares(_SAMPLE_AGE)
    gender_shares: tuple[float, ...] = _shares(_SAMPLE_GENDER)
    household_shares: tuple[float, ...] = _shares(_SAMPLE_HOUSEHOLD)
    car_shares: tuple[float, ...] = _shares(_SAMPLE_CAR)
    income_band_shares: tuple[float, ...] = _shares(_SAMPLE_INCOME)
    employment_shares: tuple[float, ...] = _shares(_SAMPLE_EMPLOYMENT)
    education_high_share: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValidationError(f"population size must be >= 0, got {self.n}")
        marginals = {
            "age_band_shares": (self.age_band_shares, len(AGE_BANDS)),
            "gender_shares": (self.gender_shares, len(GENDERS)),
            "household_shares": (self.household_shares, 4),
            "car_shares": (self.car_shares, 2),
            "income_band_shares": (self.income_band_shares,
                                   len(INCOME_BAND_MIDPOINTS)),
            "employment_shares": (self.employment_shares,
                                  len(EMPLOYMENT_STATUSES)),
        }
        for name, (shares, expected) in marginals.items():
            if len(shares) != expected:
                raise ValidationError(
                    f"{name} needs {expected} entries, got {len(shares)}")
            if any(s < 0 for s in shares):
                raise ValidationError(f"{name} has negative entries")
            if abs(sum(shares) - 1.0) > 1e-9:
                raise ValidationError(
                    f"{name} sums to {sum(shares)!r}, expected 1")
        if not 0.0 <= self.education_high_share <= 1.0:
            raise ValidationError("education_high_share must lie in [0, 1]")


def _pick(rng: np.random.Generator, shares: Sequence[float]) -> int:
    """Index sampled by inverse CDF from one uniform draw."""
    u = rng.random()
    acc = 0.0
    for i, s in enumerate(shares):
        acc += s
        if u < acc:
            return i
    return len(shares) - 1


def synthesize_population(spec: PopulationSpec) -> list[PersonProfile]:
    """Independent covariate draws per marginal; deterministic under seed."""
    width = max(4, len(str(spec.n)))
    people = []
    for q in range(spec.n):
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(0, q)))
        lo, hi = AGE_BANDS[_pick(rng, spec.age_band_shares)]
        age = int(rng.integers(lo, hi + 1))
        gender = GENDERS[_pick(rng, spec.gender_shares)]
        hh_band = _pick(rng, spec.household_shares)
        household = hh_band + 1 if hh_band < 3 else int(rng.integers(4, 7))
        n_children = int(rng.integers(0, max(0, household - 2) + 1))
        car = _pick(rng, spec.car_shares)
        income = float(INCOME_BAND_MIDPOINTS[_pick(rng, spec.income_band_shares)])
        employment = EMPLOYMENT_STATUSES[_pick(rng, spec.employment_shares)]
        education = int(rng.random() < spec.education_high_share)
        people.append(PersonProfile(
            id=f"sim{q + 1:0{width}d}", age_years=age, gender=gender,
            household_size=household, n_children=n_children,
            car_in_household=car, income_uah_month=income,
            employment=employment, education_high=education))
    return people


def _simulate_supply(rng: np.random.Generator, profile: PersonProfile) -> SupplyAnswers:
    band = age_band_index(profile.age_years)
    shares = MODE_SHARES_CAR if profile.car_in_household else MODE_SHARES_NO_CAR
    mode = CS_MODES[_pick(rng, [shares[m] for m in CS_MODES])]
    detour = float(np.clip(rng.normal(DETOUR_MEAN_MIN[mode], DETOUR_SD_MIN), 15, 60))
    supply_mean = SUPPLY_REMUNERATION_MEAN[band]
    supply = float(np.clip(rng.normal(supply_mean, REMUNERATION_SD), 50, 120))
    demand = float(np.clip(rng.normal(supply_mean + DEMAND_SUPPLY_GAP[band],
                                      REMUNERATION_SD), 50, 120))
    importance = {attr: _pick(rng, IMPORTANCE_DIST[attr]) + 1
                  for attr in IMPORTANCE_ATTRIBUTES}
    return SupplyAnswers(remuneration_uah=supply, cs_mode=mode,
                         detour_min=detour, remuneration_demand_uah=demand,
                         importance=importance)


def simulate_dataset(population: Sequence[PersonProfile], blocks,
                     true_params: ParameterSet, seed: int,
                     attributes=None) -> Dataset:
    """Simulate one full survey dataset from known parameters.

    ``blocks`` is either a BlockSet or a sequence of ChoiceTask rows
    covering blocks 1..B.  Respondent q (1-based) answers block
    ((q-1) mod B) + 1.
    """
    true_params.validate_strict()
    if hasattr(blocks, "to_choice_tasks"):
        tasks = blocks.to_choice_tasks()
    else:
        tasks = list(blocks)
    if not tasks:
        raise ValidationError("cannot simulate on an empty design")
    by_block: dict[int, list] = {}
    for task in tasks:
        by_block.setdefault(task.block_id, []).append(task)
    n_blocks = len(by_block)
    if sorted(by_block) != list(range(1, n_blocks + 1)):
        raise ValidationError(f"block ids must be 1..B, got {sorted(by_block)}")
    for b in by_block:
        by_block[b].sort(key=lambda t: t.task_id)

    thresholds = ThresholdVector.from_deltas(true_params["delta_1"],
                                             true_params["delta_2"])
    measurement = set(MEASUREMENT_STATEMENTS)

    records = []
    for q, profile in enumerate(population):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, q)))
        block_id = (q % n_blocks) + 1

        eps = rng.standard_normal()
        alpha = rng.standard_normal()
        lv = structural_value(profile, true_params, eps)

        choices = []
        for task in by_block[block_id]:
            utils = np.array(task_utilities(task, profile, lv, alpha, true_params))
            expu = np.exp(utils - utils.max())
            probs = expu / expu.sum()
            choices.append(("CS", "CC", "STORE")[_pick(rng, probs)])

        likert = {}
        for w in STATEMENTS:
            if w in measurement:
                probs = ordered_indicator_prob(
                    lv, true_params[f"beta0_{w}"], true_params[f"beta_{w}"],
                    true_params[f"sigma_{w}"], thresholds)
            else:
                probs = NEUTRAL_LIKERT
            likert[w] = _pick(rng, probs) + 1

        supply = _simulate_supply(rng, profile)
        records.append(RespondentRecord(
            id=profile.id, age_years=profile.age_years, gender=profile.gender,
            household_size=profile.household_size, n_children=profile.n_children,
            car_in_household=profile.car_in_household,
            income_uah_month=profile.income_uah_month,
            employment=profile.employment, education_high=profile.education_high,
            likert=likert, block_id=block_id, choices=tuple(choices),
            supply=supply))

    if attributes is None:
        attributes = default_attribute_specs()
    return Dataset(attributes=tuple(attributes), design=tuple(tasks),
                   respondents=tuple(records))
