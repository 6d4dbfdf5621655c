"""CSV/JSON file formats for designs, datasets, and parameter maps.

All files are UTF-8 with header rows and dot decimals.  Writing is
canonical (stable field order, shortest round-trip float formatting), so
re-exporting a dataset that was just read reproduces the bytes exactly.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .model import (
    ALTERNATIVES,
    AttributeSpec,
    ChoiceTask,
    Dataset,
    IMPORTANCE_ATTRIBUTES,
    ParameterSet,
    RespondentRecord,
    STATEMENTS,
    SupplyAnswers,
    TASKS_PER_BLOCK,
    ValidationError,
)

DESIGN_FILE = "design.csv"
RESPONDENTS_FILE = "respondents.csv"
LIKERT_FILE = "likert.csv"
CHOICES_FILE = "choices.csv"

DESIGN_COLUMNS = ["block_id", "task_id", "cs_cost", "cs_time", "cs_co2",
                  "cs_flex", "cc_cost", "cc_time"]
RESPONDENT_COLUMNS = [
    "id", "age_years", "gender", "household_size", "n_children",
    "car_in_household", "income_uah_month", "employment", "education_high",
    "block_id", "remuneration_uah", "remuneration_demand_uah", "cs_mode",
    "detour_min", "importance_cost", "importance_time", "importance_eco",
    "importance_flex",
]
LIKERT_COLUMNS = ["respondent_id", "statement", "score"]
CHOICES_COLUMNS = ["respondent_id", "task_id", "choice"]


class ParseError(ValueError):
    """Schema violation in an input file, located by file, row, and column."""

    def __init__(self, path, row: int, column: str, message: str):
        super().__init__(f"{path}: row {row}: column {column!r}: {message}")
        self.path = str(path)
        self.row = row
        self.column = column


def _fmt(value) -> str:
    """Canonical cell text: integral floats print as integers."""
    if value is None:
        return ""
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def _cell(row: Mapping[str, str], path, rownum: int, column: str) -> str:
    value = row.get(column)
    if value is None or value == "":
        raise ParseError(path, rownum, column, "missing value")
    return value


def _parse_number(row, path, rownum, column, kind=float):
    text = _cell(row, path, rownum, column)
    try:
        return kind(text)
    except ValueError:
        raise ParseError(path, rownum, column, f"not a valid {kind.__name__}: {text!r}")


def _check_header(reader: csv.DictReader, expected: list[str], path) -> None:
    if reader.fieldnames != expected:
        raise ParseError(path, 1, "header",
                         f"expected columns {expected}, got {reader.fieldnames}")


# --- design -----------------------------------------------------------------

def write_design(tasks: Iterable[ChoiceTask], path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DESIGN_COLUMNS)
        for t in tasks:
            writer.writerow([t.block_id, t.task_id, _fmt(t.cs_cost), _fmt(t.cs_time),
                             t.cs_co2, t.cs_flex, _fmt(t.cc_cost), _fmt(t.cc_time)])


def read_design(path) -> list[ChoiceTask]:
    path = Path(path)
    tasks = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, DESIGN_COLUMNS, path)
        for rownum, row in enumerate(reader, start=2):
            try:
                task = ChoiceTask(
                    block_id=_parse_number(row, path, rownum, "block_id", int),
                    task_id=_parse_number(row, path, rownum, "task_id", int),
                    cs_cost=_parse_number(row, path, rownum, "cs_cost"),
                    cs_time=_parse_number(row, path, rownum, "cs_time"),
                    cs_co2=_parse_number(row, path, rownum, "cs_co2", int),
                    cs_flex=_parse_number(row, path, rownum, "cs_flex", int),
                    cc_cost=_parse_number(row, path, rownum, "cc_cost"),
                    cc_time=_parse_number(row, path, rownum, "cc_time"),
                )
            except ValidationError as exc:
                raise ParseError(path, rownum, "task", str(exc))
            tasks.append(task)
    return tasks


# --- respondents ------------------------------------------------------------

def _respondent_row(rec: RespondentRecord) -> list[str]:
    sup = rec.supply
    return [
        rec.id, str(rec.age_years), rec.gender, str(rec.household_size),
        str(rec.n_children), str(rec.car_in_household),
        _fmt(rec.income_uah_month), rec.employment, str(rec.education_high),
        str(rec.block_id), _fmt(sup.remuneration_uah),
        _fmt(sup.remuneration_demand_uah), sup.cs_mode, _fmt(sup.detour_min),
    ] + [_fmt(sup.importance.get(attr)) for attr in IMPORTANCE_ATTRIBUTES]


def write_respondents(records: Iterable[RespondentRecord], path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESPONDENT_COLUMNS)
        for rec in records:
            writer.writerow(_respondent_row(rec))


def write_likert(records: Iterable[RespondentRecord], path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LIKERT_COLUMNS)
        for rec in records:
            for stmt in STATEMENTS:
                writer.writerow([rec.id, stmt, rec.likert[stmt]])


def write_choices(records: Iterable[RespondentRecord], path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CHOICES_COLUMNS)
        for rec in records:
            for task_id, choice in enumerate(rec.choices, start=1):
                writer.writerow([rec.id, task_id, choice])


def read_likert_scores(path) -> dict[str, dict[str, int]]:
    """Long-form likert.csv -> {respondent_id: {statement: score}}."""
    path = Path(path)
    scores: dict[str, dict[str, int]] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, LIKERT_COLUMNS, path)
        for rownum, row in enumerate(reader, start=2):
            rid = _cell(row, path, rownum, "respondent_id")
            stmt = _cell(row, path, rownum, "statement")
            if stmt not in STATEMENTS:
                raise ParseError(path, rownum, "statement", f"unknown statement {stmt!r}")
            score = _parse_number(row, path, rownum, "score", int)
            if score not in (1, 2, 3, 4, 5):
                raise ParseError(path, rownum, "score", f"score {score} out of range 1..5")
            scores.setdefault(rid, {})[stmt] = score
    return scores


def read_choice_sequences(path) -> dict[str, list[str]]:
    """choices.csv -> {respondent_id: [choice by task order]}."""
    path = Path(path)
    by_respondent: dict[str, dict[int, str]] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, CHOICES_COLUMNS, path)
        for rownum, row in enumerate(reader, start=2):
            rid = _cell(row, path, rownum, "respondent_id")
            task_id = _parse_number(row, path, rownum, "task_id", int)
            choice = _cell(row, path, rownum, "choice")
            if choice not in ALTERNATIVES:
                raise ParseError(path, rownum, "choice", f"unknown alternative {choice!r}")
            tasks = by_respondent.setdefault(rid, {})
            if task_id in tasks:
                raise ParseError(path, rownum, "task_id", f"duplicate task {task_id} for {rid}")
            tasks[task_id] = choice
    sequences = {}
    for rid, tasks in by_respondent.items():
        if sorted(tasks) != list(range(1, TASKS_PER_BLOCK + 1)):
            raise ParseError(path, 0, "task_id",
                             f"{rid}: task ids {sorted(tasks)} != 1..{TASKS_PER_BLOCK}")
        sequences[rid] = [tasks[i] for i in range(1, TASKS_PER_BLOCK + 1)]
    return sequences


def read_respondents(path, likert: Mapping[str, Mapping[str, int]],
                     choices: Mapping[str, list[str]]) -> list[RespondentRecord]:
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, RESPONDENT_COLUMNS, path)
        for rownum, row in enumerate(reader, start=2):
            rid = _cell(row, path, rownum, "id")
            if rid not in likert:
                raise ParseError(path, rownum, "id", f"{rid}: no likert rows")
            if rid not in choices:
                raise ParseError(path, rownum, "id", f"{rid}: no choice rows")
            importance = {}
            for attr in IMPORTANCE_ATTRIBUTES:
                text = row.get(f"importance_{attr}", "")
                if text:
                    importance[attr] = _parse_number(row, path, rownum,
                                                     f"importance_{attr}", int)
            demand_text = row.get("remuneration_demand_uah", "")
            try:
                supply = SupplyAnswers(
                    remuneration_uah=_parse_number(row, path, rownum, "remuneration_uah"),
                    cs_mode=_cell(row, path, rownum, "cs_mode"),
                    detour_min=_parse_number(row, path, rownum, "detour_min"),
                    remuneration_demand_uah=float(demand_text) if demand_text else None,
                    importance=importance,
                )
                record = RespondentRecord(
                    id=rid,
                    age_years=_parse_number(row, path, rownum, "age_years", int),
                    gender=_cell(row, path, rownum, "gender"),
                    household_size=_parse_number(row, path, rownum, "household_size", int),
                    n_children=_parse_number(row, path, rownum, "n_children", int),
                    car_in_household=_parse_number(row, path, rownum, "car_in_household", int),
                    income_uah_month=_parse_number(row, path, rownum, "income_uah_month"),
                    employment=_cell(row, path, rownum, "employment"),
                    education_high=_parse_number(row, path, rownum, "education_high", int),
                    likert=dict(likert[rid]),
                    block_id=_parse_number(row, path, rownum, "block_id", int),
                    choices=tuple(choices[rid]),
                    supply=supply,
                )
            except ValidationError as exc:
                raise ParseError(path, rownum, "record", str(exc))
            records.append(record)
    return records


# --- dataset bundle ---------------------------------------------------------

def write_dataset(dataset: Dataset, directory) -> dict[str, Path]:
    """Write the four-file CSV bundle into a directory; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "design": directory / DESIGN_FILE,
        "respondents": directory / RESPONDENTS_FILE,
        "likert": directory / LIKERT_FILE,
        "choices": directory / CHOICES_FILE,
    }
    write_design(dataset.design, paths["design"])
    write_respondents(dataset.respondents, paths["respondents"])
    write_likert(dataset.respondents, paths["likert"])
    write_choices(dataset.respondents, paths["choices"])
    return paths


def read_dataset(directory, attributes: Optional[list[AttributeSpec]] = None) -> Dataset:
    """Read the CSV bundle written by :func:`write_dataset`."""
    from .model import default_attribute_specs

    directory = Path(directory)
    design = read_design(directory / DESIGN_FILE)
    likert = read_likert_scores(directory / LIKERT_FILE)
    choices = read_choice_sequences(directory / CHOICES_FILE)
    respondents = read_respondents(directory / RESPONDENTS_FILE, likert, choices)
    return Dataset(
        attributes=tuple(attributes or default_attribute_specs()),
        design=tuple(design),
        respondents=tuple(respondents),
    )


# --- attribute specs and parameter maps --------------------------------------

def write_attribute_specs(specs: Iterable[AttributeSpec], path) -> None:
    payload = [
        {"name": s.name, "alternative": s.alternative, "levels": list(s.levels),
         "labels": list(s.labels), "unit": s.unit}
        for s in specs
    ]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def read_attribute_specs(path) -> list[AttributeSpec]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    specs = []
    for i, entry in enumerate(payload):
        try:
            specs.append(AttributeSpec(
                name=entry["name"],
                alternative=entry["alternative"],
                levels=tuple(float(v) for v in entry["levels"]),
                labels=tuple(entry.get("labels", ())),
                unit=entry.get("unit", ""),
            ))
        except (KeyError, ValidationError) as exc:
            raise ParseError(path, i, "attribute", str(exc))
    return specs


def write_params(params: ParameterSet, path) -> None:
    Path(path).write_text(
        json.dumps(params.as_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")


def read_params(path) -> ParameterSet:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return ParameterSet.from_dict(payload)
    except ValidationError as exc:
        raise ParseError(path, 0, "params", str(exc))


def write_json(payload, path) -> None:
    """Canonical JSON output used by the CLI for derived artifacts."""
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
