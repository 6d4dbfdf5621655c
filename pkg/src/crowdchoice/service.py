"""HTTP survey service: session issuing, questionnaire delivery, response intake.

The service is deliberately thin.  All mutable state lives in two places:

* an append-only newline-delimited JSON log on disk (one record per stored
  response, fsync'd before the receipt is returned), and
* an in-process session table plus a monotonically increasing session counter
  that rotates respondents through the design blocks.

Everything else -- the questionnaire payload and the CSV export bundle -- is a
pure function of the design, the content files, and the log, so a killed and
restarted process serves exactly the records it had receipted.
"""
from __future__ import annotations

import hashlib
import io
import json
import os
import secrets
import tempfile
import threading
import zipfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse, Response

from .dataio import write_attribute_specs, write_dataset
from .model import (
    ALTERNATIVES,
    CS_MODES,
    EMPLOYMENT_STATUSES,
    GENDERS,
    IMPORTANCE_ATTRIBUTES,
    STATEMENTS,
    TASKS_PER_BLOCK,
    ChoiceTask,
    Dataset,
    RespondentRecord,
    SupplyAnswers,
    ValidationError,
    default_attribute_specs,
)

LOG_FILE = "responses.ndjson"

ALTERNATIVE_LABELS = {
    "CS": {"en": "Crowd-shipping delivery", "uk": "Доставка приватною особою"},
    "CC": {"en": "Commercial carrier delivery", "uk": "Доставка кур'єрською службою"},
    "STORE": {"en": "Buy in the store myself", "uk": "Куплю в магазині самостійно"},
}

MODE_LABELS = {
    "car": {"en": "Car", "uk": "Автомобіль"},
    "subway": {"en": "Subway", "uk": "Метро"},
    "bus": {"en": "Bus", "uk": "Автобус"},
    "tram_trolley": {"en": "Tram or trolleybus", "uk": "Трамвай або тролейбус"},
    "bicycle": {"en": "Bicycle", "uk": "Велосипед"},
    "walk": {"en": "On foot", "uk": "Пішки"},
}

IMPORTANCE_LABELS = {
    "cost": {"en": "Delivery cost", "uk": "Вартість доставки"},
    "time": {"en": "Delivery time", "uk": "Час доставки"},
    "eco": {"en": "Environmental benefit", "uk": "Екологічна користь"},
    "flex": {"en": "Flexible delivery conditions", "uk": "Гнучкі умови доставки"},
}


def load_statement_content() -> dict:
    """Load the packaged bilingual statement texts and answer scale."""
    text = resources.files("crowdchoice.content").joinpath("statements.json").read_text("utf-8")
    content = json.loads(text)
    codes = tuple(s["code"] for s in content["statements"])
    if codes != STATEMENTS:
        raise ValidationError(f"statement content lists {codes}, expected {STATEMENTS}")
    return content


# --- envelope validation ------------------------------------------------------

_DEMOGRAPHIC_FIELDS = (
    "age_years", "gender", "household_size", "n_children", "car_in_household",
    "income_uah_month", "employment", "education_high",
)


def _as_int(value) -> Optional[int]:
    if isinstance(value, bool) or not isinstance(value, int):
        return None
    return value


def _as_number(value) -> Optional[float]:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return None
    return float(value)


def _check_demographics(section, errors: list[str]) -> dict:
    out = {}
    if not isinstance(section, dict):
        errors.append("demographics: must be an object")
        return out
    for name in _DEMOGRAPHIC_FIELDS:
        if name not in section:
            errors.append(f"demographics.{name}: missing")
    for name in sorted(set(section) - set(_DEMOGRAPHIC_FIELDS)):
        errors.append(f"demographics.{name}: unknown field")
    if errors:
        return out

    age = _as_int(section["age_years"])
    if age is None or age < 18:
        errors.append("demographics.age_years: must be an integer >= 18")
    else:
        out["age_years"] = age
    if section["gender"] not in GENDERS:
        errors.append(f"demographics.gender: must be one of {', '.join(GENDERS)}")
    else:
        out["gender"] = section["gender"]
    household = _as_int(section["household_size"])
    if household is None or household < 1:
        errors.append("demographics.household_size: must be an integer >= 1")
    else:
        out["household_size"] = household
    children = _as_int(section["n_children"])
    if children is None or children < 0:
        errors.append("demographics.n_children: must be an integer >= 0")
    else:
        out["n_children"] = children
    car = _as_int(section["car_in_household"])
    if car not in (0, 1):
        errors.append("demographics.car_in_household: must be 0 or 1")
    else:
        out["car_in_household"] = car
    income = _as_number(section["income_uah_month"])
    if income is None or income <= 0:
        errors.append("demographics.income_uah_month: must be a number > 0")
    else:
        out["income_uah_month"] = income
    if section["employment"] not in EMPLOYMENT_STATUSES:
        errors.append(
            f"demographics.employment: must be one of {', '.join(EMPLOYMENT_STATUSES)}")
    else:
        out["employment"] = section["employment"]
    edu = _as_int(section["education_high"])
    if edu not in (0, 1):
        errors.append("demographics.education_high: must be 0 or 1")
    else:
        out["education_high"] = edu
    return out


def _check_likert(section, errors: list[str]) -> dict:
    out = {}
    if not isinstance(section, dict):
        errors.append("likert: must be an object")
        return out
    for code in STATEMENTS:
        if code not in section:
            errors.append(f"likert.{code}: missing")
            continue
        score = _as_int(section[code])
        if score is None or not 1 <= score <= 5:
            errors.append(f"likert.{code}: out of range 1..5")
        else:
            out[code] = score
    for code in sorted(set(section) - set(STATEMENTS)):
        errors.append(f"likert.{code}: unknown statement")
    return out


def _check_choices(section, errors: list[str]) -> tuple[str, ...]:
    if not isinstance(section, list):
        errors.append("choices: must be a list")
        return ()
    if len(section) != TASKS_PER_BLOCK:
        errors.append(f"choices: expected {TASKS_PER_BLOCK} entries, got {len(section)}")
        return ()
    picks: dict[int, str] = {}
    for i, entry in enumerate(section):
        if not isinstance(entry, dict) or "task_id" not in entry or "choice" not in entry:
            errors.append(f"choices[{i}]: must be an object with task_id and choice")
            continue
        task_id = _as_int(entry["task_id"])
        if task_id is None or not 1 <= task_id <= TASKS_PER_BLOCK:
            errors.append(f"choices[{i}].task_id: must be an integer 1..{TASKS_PER_BLOCK}")
            continue
        if task_id in picks:
            errors.append(f"choices[{i}].task_id: duplicate task {task_id}")
            continue
        if entry["choice"] not in ALTERNATIVES:
            errors.append(f"choices[{i}].choice: must be one of {', '.join(ALTERNATIVES)}")
            continue
        picks[task_id] = entry["choice"]
    if errors:
        return ()
    return tuple(picks[t] for t in range(1, TASKS_PER_BLOCK + 1))


def _check_supply(section, errors: list[str]) -> Optional[SupplyAnswers]:
    if not isinstance(section, dict):
        errors.append("supply: must be an object")
        return None
    remun = _as_number(section.get("remuneration_uah"))
    if remun is None or not 50 <= remun <= 120:
        errors.append("supply.remuneration_uah: out of range 50..120")
    demand = section.get("remuneration_demand_uah")
    if demand is not None:
        demand = _as_number(demand)
        if demand is None or not 50 <= demand <= 120:
            errors.append("supply.remuneration_demand_uah: out of range 50..120")
    if section.get("cs_mode") not in CS_MODES:
        errors.append(f"supply.cs_mode: must be one of {', '.join(CS_MODES)}")
    detour = _as_number(section.get("detour_min"))
    if detour is None or not 15 <= detour <= 60:
        errors.append("supply.detour_min: out of range 15..60")
    importance = section.get("importance", {})
    if not isinstance(importance, dict):
        errors.append("supply.importance: must be an object")
        importance = {}
    else:
        for key in sorted(importance):
            if key not in IMPORTANCE_ATTRIBUTES:
                errors.append(f"supply.importance.{key}: unknown attribute")
                continue
            score = _as_int(importance[key])
            if score is None or not 1 <= score <= 4:
                errors.append(f"supply.importance.{key}: out of range 1..4")
    if errors:
        return None
    return SupplyAnswers(
        remuneration_uah=remun,
        cs_mode=section["cs_mode"],
        detour_min=detour,
        remuneration_demand_uah=demand,
        importance={k: importance[k] for k in IMPORTANCE_ATTRIBUTES if k in importance},
    )


def validate_envelope(payload) -> tuple[dict, list[str]]:
    """Check a submitted response envelope field by field.

    Returns the keyword arguments for :class:`RespondentRecord` (sans id and
    block) and a list of human-readable field errors; the kwargs are only
    meaningful when the error list is empty.
    """
    errors: list[str] = []
    if not isinstance(payload, dict):
        return {}, ["envelope: must be a JSON object"]
    sections = payload.get("sections")
    if not isinstance(sections, dict):
        return {}, ["sections: missing or not an object"]
    for name in ("demographics", "likert", "choices", "supply"):
        if name not in sections:
            errors.append(f"sections.{name}: missing")
    if errors:
        return {}, errors

    demo_errors: list[str] = []
    likert_errors: list[str] = []
    choice_errors: list[str] = []
    supply_errors: list[str] = []
    demographics = _check_demographics(sections["demographics"], demo_errors)
    likert = _check_likert(sections["likert"], likert_errors)
    choices = _check_choices(sections["choices"], choice_errors)
    supply = _check_supply(sections["supply"], supply_errors)
    errors = demo_errors + likert_errors + choice_errors + supply_errors
    if errors:
        return {}, errors
    return dict(demographics, likert=likert, choices=choices, supply=supply), []


def envelope_digest(payload: dict) -> str:
    """Canonical content hash of the four answer sections (client metadata
    such as submission timestamps is excluded so that retries stay idempotent)."""
    canon = json.dumps(payload.get("sections"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# --- persistence --------------------------------------------------------------

class ResponseLog:
    """Append-only NDJSON store; every stored response is one JSON line.

    ``append`` does not return until the line is flushed and fsync'd, which is
    what makes the receipt durable.  On construction any existing log is
    replayed so a restarted process resumes with the same stored records.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.entries: list[dict] = []
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        self.entries.append(json.loads(line))
                    except json.JSONDecodeError as exc:
                        raise ValidationError(
                            f"{self.path}:{lineno}: corrupt log line ({exc})")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("a", encoding="utf-8")

    def append(self, entry: dict) -> None:
        line = json.dumps(entry, sort_keys=True, separators=(",", ":"))
        self._fh.write(line + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self.entries.append(entry)

    def close(self) -> None:
        self._fh.close()


# --- the service --------------------------------------------------------------

@dataclass
class Session:
    session_id: str
    block_id: int
    issued_at: str
    completed: bool = False
    receipt: Optional[dict] = None
    digest: Optional[str] = None


@dataclass
class SurveyService:
    """Business logic behind the HTTP endpoints (kept framework-free for tests)."""

    design: tuple[ChoiceTask, ...]
    log: ResponseLog
    content: dict = field(default_factory=load_statement_content)
    n_blocks: Optional[int] = None

    def __post_init__(self):
        blocks = sorted({t.block_id for t in self.design})
        if not blocks:
            raise ValidationError("design has no tasks")
        if blocks != list(range(1, len(blocks) + 1)):
            raise ValidationError(f"design blocks must be 1..B, got {blocks}")
        if self.n_blocks is None:
            self.n_blocks = len(blocks)
        elif not 1 <= self.n_blocks <= len(blocks):
            raise ValidationError(
                f"n_blocks {self.n_blocks} outside 1..{len(blocks)}")
        self._lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        # Resume block rotation where the stored responses left off, so
        # restarts do not pile every later respondent onto block 1.
        self._session_count = len(self.log.entries)
        self._replay_completed_sessions()

    def _replay_completed_sessions(self) -> None:
        for entry in self.log.entries:
            sid = entry["session_id"]
            self.sessions[sid] = Session(
                session_id=sid,
                block_id=entry["block_id"],
                issued_at=entry.get("issued_at", entry["stored_at"]),
                completed=True,
                receipt={"session_id": sid,
                         "respondent_id": entry["respondent_id"],
                         "status": "stored"},
                digest=entry["digest"],
            )

    # -- sessions --

    def create_session(self) -> dict:
        with self._lock:
            n = self._session_count
            self._session_count += 1
        block_id = (n % self.n_blocks) + 1
        session = Session(
            session_id=secrets.token_hex(16),
            block_id=block_id,
            issued_at=datetime.now(timezone.utc).isoformat(),
        )
        self.sessions[session.session_id] = session
        return {"session_id": session.session_id, "block_id": session.block_id,
                "issued_at": session.issued_at}

    # -- questionnaire --

    def questionnaire(self, session_id: str) -> dict:
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return {
            "session_id": session.session_id,
            "block_id": session.block_id,
            "sections": [
                self._demographics_section(),
                self._attitudes_section(),
                self._tasks_section(session.block_id),
                self._supply_section(),
            ],
        }

    @staticmethod
    def _demographics_section() -> dict:
        fields = [
            {"name": "age_years", "type": "integer", "min": 18},
            {"name": "gender", "type": "choice", "options": list(GENDERS)},
            {"name": "household_size", "type": "integer", "min": 1},
            {"name": "n_children", "type": "integer", "min": 0},
            {"name": "car_in_household", "type": "choice", "options": [0, 1]},
            {"name": "income_uah_month", "type": "number", "min_exclusive": 0},
            {"name": "employment", "type": "choice",
             "options": list(EMPLOYMENT_STATUSES)},
            {"name": "education_high", "type": "choice", "options": [0, 1]},
        ]
        for f in fields:
            f["required"] = True
        return {"id": "demographics", "title_en": "About you",
                "title_uk": "Про вас", "fields": fields}

    def _attitudes_section(self) -> dict:
        scale = self.content["scale"]
        return {
            "id": "likert",
            "title_en": "Your views on grocery delivery",
            "title_uk": "Ваше ставлення до доставки продуктів",
            "scale": {"min": scale["min"], "max": scale["max"],
                      "labels_en": scale["labels_en"],
                      "labels_uk": scale["labels_uk"]},
            "statements": [dict(s) for s in self.content["statements"]],
        }

    def _tasks_section(self, block_id: int) -> dict:
        tasks = sorted((t for t in self.design if t.block_id == block_id),
                       key=lambda t: t.task_id)
        rendered = []
        for task in tasks:
            rows = [
                {"key": "cost", "kind": "number", "unit": "UAH",
                 "label_en": "Delivery cost", "label_uk": "Вартість доставки",
                 "values": {"CS": task.cs_cost, "CC": task.cc_cost, "STORE": None}},
                {"key": "time", "kind": "number", "unit": "h",
                 "label_en": "Delivery time", "label_uk": "Час доставки",
                 "values": {"CS": task.cs_time, "CC": task.cc_time, "STORE": None}},
                {"key": "eco", "kind": "boolean", "unit": "",
                 "label_en": "Reduces delivery traffic and emissions",
                 "label_uk": "Зменшує трафік доставки та викиди",
                 "values": {"CS": task.cs_co2, "CC": 0, "STORE": None}},
                {"key": "flex", "kind": "boolean", "unit": "",
                 "label_en": "Flexible delivery conditions",
                 "label_uk": "Гнучкі умови доставки",
                 "values": {"CS": task.cs_flex, "CC": 0, "STORE": None}},
            ]
            rendered.append({
                "task_id": task.task_id,
                "alternatives": [
                    {"id": alt, "label_en": ALTERNATIVE_LABELS[alt]["en"],
                     "label_uk": ALTERNATIVE_LABELS[alt]["uk"]}
                    for alt in ALTERNATIVES
                ],
                "attribute_rows": rows,
            })
        return {
            "id": "choices",
            "title_en": "Nine delivery situations",
            "title_uk": "Дев'ять ситуацій доставки",
            "instruction_en": "In each situation, pick the option you would actually choose.",
            "instruction_uk": "У кожній ситуації оберіть варіант, який ви справді обрали б.",
            "tasks": rendered,
        }

    @staticmethod
    def _supply_section() -> dict:
        return {
            "id": "supply",
            "title_en": "Delivering for others",
            "title_uk": "Доставка для інших",
            "items": [
                {"name": "remuneration_uah", "type": "number",
                 "min": 50, "max": 120, "required": True,
                 "label_en": "Fair payment for one delivery, UAH",
                 "label_uk": "Справедлива оплата за одну доставку, грн"},
                {"name": "remuneration_demand_uah", "type": "number",
                 "min": 50, "max": 120, "required": False,
                 "label_en": "What you would pay for one delivery, UAH",
                 "label_uk": "Скільки ви заплатили б за одну доставку, грн"},
                {"name": "cs_mode", "type": "choice", "required": True,
                 "label_en": "How you would travel when delivering",
                 "label_uk": "Як ви пересувалися б під час доставки",
                 "options": [{"id": m, "label_en": MODE_LABELS[m]["en"],
                              "label_uk": MODE_LABELS[m]["uk"]} for m in CS_MODES]},
                {"name": "detour_min", "type": "number",
                 "min": 15, "max": 60, "required": True,
                 "label_en": "Longest acceptable detour, minutes",
                 "label_uk": "Найдовший прийнятний гак, хвилин"},
                {"name": "importance", "type": "ranking", "required": False,
                 "min": 1, "max": 4,
                 "label_en": "Rate how much each aspect matters (1 = least, 4 = most)",
                 "label_uk": "Оцініть важливість кожного аспекту (1 = найменша, 4 = найбільша)",
                 "items": [{"id": k, "label_en": IMPORTANCE_LABELS[k]["en"],
                            "label_uk": IMPORTANCE_LABELS[k]["uk"]}
                           for k in IMPORTANCE_ATTRIBUTES]},
            ],
        }

    # -- responses --

    def record_response(self, payload) -> tuple[int, dict]:
        """Store one envelope; returns (http_status, body)."""
        if not isinstance(payload, dict) or not isinstance(payload.get("session_id"), str):
            return 422, {"detail": "invalid response", "errors": ["session_id: missing"]}
        session = self.sessions.get(payload["session_id"])
        if session is None:
            return 404, {"detail": "unknown session"}

        kwargs, errors = validate_envelope(payload)
        if errors:
            return 422, {"detail": "invalid response", "errors": errors}

        digest = envelope_digest(payload)
        with self._lock:
            if session.completed:
                if digest == session.digest:
                    return 200, dict(session.receipt)
                return 409, {"detail": "session already has a different stored response"}
            respondent_id = f"r{len(self.log.entries) + 1:06d}"
            # Construct the record before persisting: anything the export path
            # would reject must be rejected here, not at export time.
            RespondentRecord(id=respondent_id, block_id=session.block_id, **kwargs)
            entry = {
                "session_id": session.session_id,
                "respondent_id": respondent_id,
                "block_id": session.block_id,
                "issued_at": session.issued_at,
                "stored_at": datetime.now(timezone.utc).isoformat(),
                "digest": digest,
                "client": payload.get("client", {}),
                "sections": payload["sections"],
            }
            self.log.append(entry)           # durable before the receipt exists
            session.completed = True
            session.digest = digest
            session.receipt = {"session_id": session.session_id,
                               "respondent_id": respondent_id, "status": "stored"}
            return 201, dict(session.receipt)

    # -- export --

    def stored_records(self) -> list[RespondentRecord]:
        records = []
        for entry in self.log.entries:
            kwargs, errors = validate_envelope({"session_id": entry["session_id"],
                                                "sections": entry["sections"]})
            if errors:
                raise ValidationError(
                    f"stored response {entry['respondent_id']} no longer validates: {errors}")
            records.append(RespondentRecord(
                id=entry["respondent_id"], block_id=entry["block_id"], **kwargs))
        return records

    def export_dataset(self) -> Dataset:
        return Dataset(
            attributes=tuple(default_attribute_specs()),
            design=tuple(self.design),
            respondents=tuple(self.stored_records()),
        )

    def export_zip(self) -> bytes:
        dataset = self.export_dataset()
        buffer = io.BytesIO()
        with tempfile.TemporaryDirectory() as tmp:
            paths = write_dataset(dataset, tmp)
            attrs_path = Path(tmp) / "attrs.json"
            write_attribute_specs(dataset.attributes, attrs_path)
            paths["attrs"] = attrs_path
            with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as zf:
                for name in ("design", "respondents", "likert", "choices", "attrs"):
                    path = paths[name]
                    info = zipfile.ZipInfo(path.name)  # fixed date => stable bytes
                    info.compress_type = zipfile.ZIP_DEFLATED
                    zf.writestr(info, path.read_bytes())
        return buffer.getvalue()


# --- FastAPI wiring -----------------------------------------------------------

def create_app(design: Optional[list[ChoiceTask]] = None,
               data_dir=None,
               n_blocks: Optional[int] = None) -> FastAPI:
    """Build the HTTP app.

    ``design`` is the blocked choice-task design respondents rotate through;
    without one the API answers 503 on every survey endpoint.  ``data_dir``
    holds the append-only response log (a temporary directory is used when
    omitted, which suits tests).
    """
    app = FastAPI(title="crowdchoice survey service")
    service: Optional[SurveyService] = None
    if design is not None:
        if data_dir is None:
            data_dir = tempfile.mkdtemp(prefix="crowdchoice-")
        log = ResponseLog(Path(data_dir) / LOG_FILE)
        service = SurveyService(design=tuple(design), log=log, n_blocks=n_blocks)
    app.state.service = service

    def _not_ready() -> JSONResponse:
        return JSONResponse(status_code=503, content={"detail": "no design loaded"})

    @app.post("/api/session")
    def create_session():
        if service is None:
            return _not_ready()
        return JSONResponse(status_code=201, content=service.create_session())

    @app.get("/api/questionnaire/{session_id}")
    def questionnaire(session_id: str):
        if service is None:
            return _not_ready()
        try:
            return service.questionnaire(session_id)
        except KeyError:
            return JSONResponse(status_code=404, content={"detail": "unknown session"})

    @app.post("/api/response")
    def record_response(payload: dict):
        if service is None:
            return _not_ready()
        status, body = service.record_response(payload)
        return JSONResponse(status_code=status, content=body)

    @app.get("/api/export")
    def export():
        if service is None:
            return _not_ready()
        data = service.export_zip()
        return Response(content=data, media_type="application/zip",
                        headers={"Content-Disposition": 'attachment; filename="survey_export.zip"'})

    return app
