"""Domain types and attribute coding for the crowd-shipping choice toolkit.

Defines the shared value records used across the pipeline: attribute
specifications, choice tasks, respondent records, model parameter sets,
and dataset containers.  All types are immutable after construction and
safe to share across parallel workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

ALTERNATIVES = ("CS", "CC", "STORE")

GENDERS = ("female", "male")
EMPLOYMENT_STATUSES = ("full", "part", "unemployed", "housekeeper", "student")
CS_MODES = ("car", "subway", "bus", "tram_trolley", "bicycle", "walk")

STATEMENTS = tuple(f"F{i}" for i in range(1, 16))
#: Statements entering the measurement equations (the pro-crowd factor's
#: indicators minus the normalized reference statement F2).
MEASUREMENT_STATEMENTS = ("F6", "F7", "F9", "F11", "F12", "F14")

#: Attribute levels of the choice experiment, per delivery channel.
CS_COST_LEVELS = (60, 90, 120)
CC_COST_LEVELS = (50, 75, 100)
CS_TIME_LEVELS = (1.5, 4.5, 7.5, 10.5)
CC_TIME_LEVELS = (3.0, 9.0, 18.0, 30.0)

IMPORTANCE_ATTRIBUTES = ("cost", "time", "eco", "flex")

#: Income bands (UAH/month) coded at midpoints; the open-ended top band
#: is coded 55,000.
INCOME_BAND_MIDPOINTS = (2500, 7500, 15000, 25000, 35000, 45000, 55000)

TASKS_PER_BLOCK = 9
N_BLOCKS = 6

#: Respondent age strata (inclusive bounds); the open-ended top band is
#: capped at 70 for synthesis purposes.
AGE_BANDS = ((18, 24), (25, 34), (35, 44), (45, 70))
AGE_BAND_LABELS = ("18-24", "25-34", "35-44", "45+")


class CodingError(ValueError):
    """Raised for unknown channels or level indices in attribute coding."""


class ValidationError(ValueError):
    """Raised when a record violates a domain invariant."""


def code_time_level(channel: str, level_index: int) -> float:
    """Numeric code (hours) for a delivery-time level of a channel.

    Interval levels are coded at their midpoint; the open-ended top level
    is coded as the previous midpoint plus one interval width.
    """
    if channel == "CS":
        levels = CS_TIME_LEVELS
    elif channel == "CC":
        levels = CC_TIME_LEVELS
    else:
        raise CodingError(f"unknown delivery channel {channel!r}")
    if not 1 <= level_index <= len(levels):
        raise CodingError(
            f"time level index {level_index} out of range 1..{len(levels)} for {channel}"
        )
    return levels[level_index - 1]


def code_income_band(band_index: int) -> int:
    """Midpoint UAH/month for a 1-based income band index."""
    if not 1 <= band_index <= len(INCOME_BAND_MIDPOINTS):
        raise CodingError(f"income band index {band_index} out of range")
    return INCOME_BAND_MIDPOINTS[band_index - 1]


def age_band_index(age_years: int) -> int:
    """0-based age stratum for an adult age (ages above the top band cap
    still belong to the top band)."""
    if age_years < AGE_BANDS[0][0]:
        raise CodingError(f"age {age_years} is below the survey minimum "
                          f"{AGE_BANDS[0][0]}")
    for i, (lo, hi) in enumerate(AGE_BANDS[:-1]):
        if lo <= age_years <= hi:
            return i
    return len(AGE_BANDS) - 1


@dataclass(frozen=True)
class AttributeSpec:
    """One experiment attribute: its channel, level codes, and labels.

    ``alternative`` is "CS", "CC" or "BOTH".  Level codes must be strictly
    increasing; binary attributes must have exactly the levels {0, 1}.
    """

    name: str
    alternative: str
    levels: tuple[float, ...]
    labels: tuple[str, ...] = ()
    unit: str = ""

    def __post_init__(self):
        if self.alternative not in ("CS", "CC", "BOTH"):
            raise ValidationError(f"{self.name}: unknown alternative {self.alternative!r}")
        if len(self.levels) < 2:
            raise ValidationError(f"{self.name}: needs at least 2 levels")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValidationError(f"{self.name}: level codes must be strictly increasing")
        if self.labels and len(self.labels) != len(self.levels):
            raise ValidationError(f"{self.name}: one label per level required")
        if len(self.levels) == 2 and self.unit == "binary" and self.levels != (0.0, 1.0):
            raise ValidationError(f"{self.name}: binary attribute must have levels {{0,1}}")

    @property
    def n_levels(self) -> int:
        return len(self.levels)


def default_attribute_specs() -> list[AttributeSpec]:
    """The six experiment attributes with their production level codes."""
    labels_uah = lambda levels: tuple(f"{int(v)} UAH" for v in levels)
    return [
        AttributeSpec("cs_cost", "CS", tuple(float(v) for v in CS_COST_LEVELS),
                      labels_uah(CS_COST_LEVELS), "UAH"),
        AttributeSpec("cs_time", "CS", CS_TIME_LEVELS,
                      ("less than 3 hours", "3-6 hours", "6-9 hours", "more than 9 hours"),
                      "hours"),
        AttributeSpec("cs_co2", "CS", (0.0, 1.0), ("No reduction of CO2", "Reduction of CO2"),
                      "binary"),
        AttributeSpec("cs_flex", "CS", (0.0, 1.0), ("NO", "YES"), "binary"),
        AttributeSpec("cc_cost", "CC", tuple(float(v) for v in CC_COST_LEVELS),
                      labels_uah(CC_COST_LEVELS), "UAH"),
        AttributeSpec("cc_time", "CC", CC_TIME_LEVELS,
                      ("less than 6 hours", "6-12 hours", "12-24 hours", "more than 24 hours"),
                      "hours"),
    ]


@dataclass(frozen=True)
class ChoiceTask:
    """One rendered choice situation: a CS and a CC delivery offer.

    The physical-store alternative carries no task attributes.
    """

    block_id: int
    task_id: int
    cs_cost: float
    cs_time: float
    cs_co2: int
    cs_flex: int
    cc_cost: float
    cc_time: float

    def __post_init__(self):
        if self.cs_cost not in CS_COST_LEVELS:
            raise ValidationError(f"cs_cost {self.cs_cost} not in {CS_COST_LEVELS}")
        if self.cc_cost not in CC_COST_LEVELS:
            raise ValidationError(f"cc_cost {self.cc_cost} not in {CC_COST_LEVELS}")
        if self.cs_time not in CS_TIME_LEVELS:
            raise ValidationError(f"cs_time {self.cs_time} not in {CS_TIME_LEVELS}")
        if self.cc_time not in CC_TIME_LEVELS:
            raise ValidationError(f"cc_time {self.cc_time} not in {CC_TIME_LEVELS}")
        if self.cs_co2 not in (0, 1) or self.cs_flex not in (0, 1):
            raise ValidationError("binary attributes must be 0 or 1")


@dataclass(frozen=True)
class SupplyAnswers:
    """Section-4 answers: remuneration views, courier mode, detour, importance.

    ``remuneration_uah`` is the supply-side (courier) figure; the demand-side
    (what the respondent would pay) is carried separately so the
    demand-supply gap can be reported per age band.  ``importance`` maps
    attribute keys (cost/time/eco/flex) to 1..4 scores and may be missing
    entries.
    """

    remuneration_uah: float
    cs_mode: str
    detour_min: float
    remuneration_demand_uah: Optional[float] = None
    importance: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not 50 <= self.remuneration_uah <= 120:
            raise ValidationError(
                f"remuneration_uah {self.remuneration_uah} out of range 50..120")
        if self.remuneration_demand_uah is not None and not (
                50 <= self.remuneration_demand_uah <= 120):
            raise ValidationError(
                f"remuneration_demand_uah {self.remuneration_demand_uah} out of range 50..120")
        if self.cs_mode not in CS_MODES:
            raise ValidationError(f"cs_mode {self.cs_mode!r} not one of {CS_MODES}")
        if not 15 <= self.detour_min <= 60:
            raise ValidationError(f"detour_min {self.detour_min} out of range 15..60")
        for key, score in self.importance.items():
            if key not in IMPORTANCE_ATTRIBUTES:
                raise ValidationError(f"unknown importance attribute {key!r}")
            if score not in (1, 2, 3, 4):
                raise ValidationError(f"importance.{key}: score {score} out of range 1..4")


@dataclass(frozen=True)
class RespondentRecord:
    """One cleaned survey response: covariates, attitudes, choices, supply."""

    id: str
    age_years: int
    gender: str
    household_size: int
    n_children: int
    car_in_household: int
    income_uah_month: float
    employment: str
    education_high: int
    likert: Mapping[str, int]
    block_id: int
    choices: tuple[str, ...]
    supply: SupplyAnswers

    def __post_init__(self):
        if self.age_years < 18:
            raise ValidationError(f"{self.id}: age_years {self.age_years} below 18")
        if self.gender not in GENDERS:
            raise ValidationError(f"{self.id}: gender {self.gender!r} not one of {GENDERS}")
        if self.household_size < 1:
            raise ValidationError(f"{self.id}: household_size must be >= 1")
        if self.n_children < 0:
            raise ValidationError(f"{self.id}: n_children must be >= 0")
        if self.car_in_household not in (0, 1):
            raise ValidationError(f"{self.id}: car_in_household must be 0 or 1")
        if self.income_uah_month <= 0:
            raise ValidationError(f"{self.id}: income must be > 0")
        if self.employment not in EMPLOYMENT_STATUSES:
            raise ValidationError(
                f"{self.id}: employment {self.employment!r} not one of {EMPLOYMENT_STATUSES}")
        if self.education_high not in (0, 1):
            raise ValidationError(f"{self.id}: education_high must be 0 or 1")
        if set(self.likert) != set(STATEMENTS):
            missing = sorted(set(STATEMENTS) - set(self.likert))
            extra = sorted(set(self.likert) - set(STATEMENTS))
            raise ValidationError(
                f"{self.id}: likert statements mismatch (missing {missing}, extra {extra})")
        for stmt, score in self.likert.items():
            if score not in (1, 2, 3, 4, 5):
                raise ValidationError(f"{self.id}: likert.{stmt}: score {score} out of range 1..5")
        if len(self.choices) != TASKS_PER_BLOCK:
            raise ValidationError(
                f"{self.id}: expected {TASKS_PER_BLOCK} choices, got {len(self.choices)}")
        for choice in self.choices:
            if choice not in ALTERNATIVES:
                raise ValidationError(f"{self.id}: choice {choice!r} not one of {ALTERNATIVES}")


#: Canonical parameter names, grouped by model block.  ``params.json`` and
#: ``estimates.json`` use exactly these keys.
CHOICE_PARAM_NAMES = (
    "ASC_CS", "ASC_STORE", "beta_children", "beta_co2", "beta_cost_cc",
    "beta_cost_cs", "beta_flex", "beta_time_cc", "beta_time_cs", "beta_lv",
    "sigma_alpha",
)
MEASUREMENT_PARAM_NAMES = tuple(
    [f"beta0_{w}" for w in MEASUREMENT_STATEMENTS]
    + [f"beta_{w}" for w in MEASUREMENT_STATEMENTS]
    + [f"sigma_{w}" for w in MEASUREMENT_STATEMENTS]
)
THRESHOLD_PARAM_NAMES = ("delta_1", "delta_2")
STRUCTURAL_PARAM_NAMES = (
    "beta0_structural", "beta_income", "beta_age30", "beta_parttime",
    "beta_highedu", "beta_members", "beta_male", "beta_nocar",
    "sigma_structural",
)
PARAM_NAMES = (CHOICE_PARAM_NAMES + MEASUREMENT_PARAM_NAMES
               + THRESHOLD_PARAM_NAMES + STRUCTURAL_PARAM_NAMES)

#: Parameters constrained positive during estimation (via log transform).
POSITIVE_PARAM_NAMES = tuple(
    ["sigma_alpha"] + [f"sigma_{w}" for w in MEASUREMENT_STATEMENTS]
    + ["delta_1", "delta_2", "sigma_structural"]
)


@dataclass(frozen=True)
class ParameterSet:
    """Every estimable parameter of the hybrid choice model.

    Stored as a name -> value mapping over :data:`PARAM_NAMES`.  Strict
    positivity of the sigmas and deltas is enforced during optimization
    (log transform), not at construction, so boundary points like the
    all-zero null are representable.
    """

    values: Mapping[str, float]

    def __post_init__(self):
        missing = [n for n in PARAM_NAMES if n not in self.values]
        extra = [n for n in self.values if n not in PARAM_NAMES]
        if missing or extra:
            raise ValidationError(
                f"parameter set mismatch (missing {missing}, unknown {extra})")
        object.__setattr__(self, "values", dict(self.values))

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def validate_strict(self) -> None:
        """Require strictly positive scale and threshold parameters."""
        for name in POSITIVE_PARAM_NAMES:
            if not self.values[name] > 0:
                raise ValidationError(f"{name} must be strictly positive, got {self.values[name]}")

    def replace(self, **updates: float) -> "ParameterSet":
        merged = dict(self.values)
        for name, value in updates.items():
            if name not in PARAM_NAMES:
                raise ValidationError(f"unknown parameter {name!r}")
            merged[name] = value
        return ParameterSet(merged)

    def as_dict(self) -> dict[str, float]:
        return dict(self.values)

    @classmethod
    def from_dict(cls, values: Mapping[str, float]) -> "ParameterSet":
        return cls({k: float(v) for k, v in values.items()})

    @classmethod
    def zeros(cls) -> "ParameterSet":
        return cls({name: 0.0 for name in PARAM_NAMES})

    @classmethod
    def null_point(cls) -> "ParameterSet":
        """Reference point for the joint null log-likelihood.

        All location and slope parameters zero, unit measurement scales,
        unit threshold spacings, and no unobserved heterogeneity.
        """
        values = {name: 0.0 for name in PARAM_NAMES}
        for w in MEASUREMENT_STATEMENTS:
            values[f"sigma_{w}"] = 1.0
        values["delta_1"] = 1.0
        values["delta_2"] = 1.0
        return cls(values)


def published_parameters() -> ParameterSet:
    """Published point estimates used as the simulation truth."""
    return ParameterSet({
        "ASC_CS": -0.112, "ASC_STORE": -1.91, "beta_children": -0.288,
        "beta_co2": -0.00477, "beta_cost_cc": -3.05, "beta_cost_cs": -1.95,
        "beta_flex": 0.125, "beta_time_cc": -0.621, "beta_time_cs": -1.44,
        "beta_lv": 0.138, "sigma_alpha": 0.528,
        "beta0_F6": -0.495, "beta0_F7": -0.0526, "beta0_F9": -1.4,
        "beta0_F11": -0.915, "beta0_F12": -1.12, "beta0_F14": -0.936,
        "beta_F6": 1.07, "beta_F7": 0.804, "beta_F9": 0.952,
        "beta_F11": 1.19, "beta_F12": 1.33, "beta_F14": 1.05,
        "sigma_F6": 0.961, "sigma_F7": 0.697, "sigma_F9": 1.29,
        "sigma_F11": 0.626, "sigma_F12": 0.773, "sigma_F14": 0.922,
        "delta_1": 0.653, "delta_2": 0.752,
        "beta0_structural": 2.15, "beta_income": -0.182, "beta_age30": 0.424,
        "beta_parttime": 0.17, "beta_highedu": -0.55, "beta_members": 0.222,
        "beta_male": -0.147, "beta_nocar": 0.0808, "sigma_structural": 0.815,
    })


@dataclass(frozen=True)
class DrawConfig:
    """Simulation draw settings: count, scheme, and seed."""

    n_draws: int
    scheme: str = "halton"
    seed: int = 0

    def __post_init__(self):
        if self.n_draws < 1:
            raise ValidationError("n_draws must be >= 1")
        if self.scheme not in ("halton", "pseudo"):
            raise ValidationError(f"unknown draw scheme {self.scheme!r}")


@dataclass(frozen=True)
class Dataset:
    """A complete estimation dataset: specs, block design, and respondents."""

    attributes: tuple[AttributeSpec, ...]
    design: tuple[ChoiceTask, ...]
    respondents: tuple[RespondentRecord, ...]

    def __post_init__(self):
        block_ids = {t.block_id for t in self.design}
        seen = set()
        for task in self.design:
            key = (task.block_id, task.task_id)
            if key in seen:
                raise ValidationError(f"duplicate task {key} in design")
            seen.add(key)
        ids = set()
        for rec in self.respondents:
            if rec.id in ids:
                raise ValidationError(f"duplicate respondent id {rec.id!r}")
            ids.add(rec.id)
            if rec.block_id not in block_ids:
                raise ValidationError(
                    f"{rec.id}: block_id {rec.block_id} not present in design")

    @property
    def n_blocks(self) -> int:
        return len({t.block_id for t in self.design})

    def block_tasks(self, block_id: int) -> list[ChoiceTask]:
        tasks = [t for t in self.design if t.block_id == block_id]
        tasks.sort(key=lambda t: t.task_id)
        return tasks


# --- covariate scaling ------------------------------------------------------

TIME_SCALE = 10.0
COST_SCALE = 100.0
INCOME_SCALE = 10000.0


@dataclass(frozen=True)
class ScaledFeatures:
    """Model-ready covariates for one respondent-task pair.

    Times are divided by 10, costs by 100, income by 10,000; the CO2 and
    flexibility dummies are interacted with scaled income.
    """

    cost_cs: float
    time_cs: float
    co2_income: float
    flex_income: float
    cost_cc: float
    time_cc: float
    n_children: float
    income: float


def scale_covariates(record, task) -> ScaledFeatures:
    """Scaled feature bundle for a respondent facing a task.

    Accepts any objects exposing the respondent/task attribute fields.
    """
    income_s = record.income_uah_month / INCOME_SCALE
    return ScaledFeatures(
        cost_cs=task.cs_cost / COST_SCALE,
        time_cs=task.cs_time / TIME_SCALE,
        co2_income=task.cs_co2 * income_s,
        flex_income=task.cs_flex * income_s,
        cost_cc=task.cc_cost / COST_SCALE,
        time_cc=task.cc_time / TIME_SCALE,
        n_children=float(record.n_children),
        income=income_s,
    )


def structural_covariates(record) -> dict[str, float]:
    """Covariate values entering the latent-variable structural equation."""
    return {
        "beta_income": record.income_uah_month / INCOME_SCALE,
        "beta_age30": 1.0 if record.age_years > 30 else 0.0,
        "beta_parttime": 1.0 if record.employment == "part" else 0.0,
        "beta_highedu": float(record.education_high),
        "beta_members": 1.0 if record.household_size >= 3 else 0.0,
        "beta_male": 1.0 if record.gender == "male" else 0.0,
        "beta_nocar": 0.0 if record.car_in_household else 1.0,
    }
