"""Tests for the survey collection service: sessions, validation, durability,
idempotent storage, concurrency, and the dataset export."""

import json
import zipfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pytest

from crowdchoice.dataio import read_dataset
from crowdchoice.model import ValidationError
from crowdchoice.service import (
    LOG_FILE,
    ResponseLog,
    SurveyService,
    create_app,
    envelope_digest,
    load_statement_content,
    validate_envelope,
)


def make_sections(**overrides):
    base = {
        "demographics": {
            "age_years": 31, "gender": "female", "household_size": 3,
            "n_children": 1, "car_in_household": 1,
            "income_uah_month": 15000, "employment": "full",
            "education_high": 1,
        },
        "likert": {f"F{i}": 3 for i in range(1, 16)},
        "choices": [{"task_id": t, "choice": "CS"} for t in range(1, 10)],
        "supply": {
            "remuneration_uah": 85, "cs_mode": "subway", "detour_min": 30,
            "remuneration_demand_uah": 80,
            "importance": {"cost": 4, "time": 3, "eco": 1, "flex": 2},
        },
    }
    base.update(overrides)
    return base


def make_envelope(session_id, **overrides):
    return {
        "session_id": session_id,
        "sections": make_sections(**overrides),
        "client": {"app": "test", "submitted_at": "2026-08-14T12:00:00Z"},
    }


@pytest.fixture()
def service(design_tasks, tmp_path):
    svc = SurveyService(design=tuple(design_tasks),
                        log=ResponseLog(tmp_path / LOG_FILE))
    yield svc
    svc.log.close()


# --- statement content -----------------------------------------------------------

class TestContent:
    def test_bundled_statements_are_complete_and_bilingual(self):
        content = load_statement_content()
        codes = [s["code"] for s in content["statements"]]
        assert codes == [f"F{i}" for i in range(1, 16)]
        for statement in content["statements"]:
            assert statement["text_en"].strip()
            assert statement["text_uk"].strip()
        scale = content["scale"]
        assert scale["min"] == 1 and scale["max"] == 5
        assert len(scale["labels_en"]) == 5 == len(scale["labels_uk"])


# --- envelope validation -----------------------------------------------------------

class TestValidateEnvelope:
    def test_valid_envelope_produces_record_kwargs(self):
        kwargs, errors = validate_envelope(make_envelope("s1"))
        assert errors == []
        assert kwargs["age_years"] == 31
        assert kwargs["choices"] == ("CS",) * 9
        assert kwargs["supply"].remuneration_uah == 85.0
        assert kwargs["likert"]["F15"] == 3

    def test_choices_are_reordered_by_task_id(self):
        shuffled = [{"task_id": t, "choice": "CC" if t % 2 else "STORE"}
                    for t in (9, 3, 1, 7, 5, 2, 8, 6, 4)]
        kwargs, errors = validate_envelope(
            make_envelope("s1", choices=shuffled))
        assert errors == []
        assert kwargs["choices"] == ("CC", "STORE", "CC", "STORE", "CC",
                                     "STORE", "CC", "STORE", "CC")

    @pytest.mark.parametrize("mutate,message", [
        (lambda s: s.pop("likert"), "sections.likert: missing"),
        (lambda s: s["likert"].__setitem__("F3", 6),
         "likert.F3: out of range 1..5"),
        (lambda s: s["likert"].__setitem__("F3", True),
         "likert.F3: out of range 1..5"),
        (lambda s: s["likert"].__setitem__("F16", 3),
         "likert.F16: unknown statement"),
        (lambda s: s["likert"].pop("F9"), "likert.F9: missing"),
        (lambda s: s["demographics"].__setitem__("age_years", 17),
         "demographics.age_years: must be an integer >= 18"),
        (lambda s: s["demographics"].__setitem__("age_years", True),
         "demographics.age_years: must be an integer >= 18"),
        (lambda s: s["demographics"].__setitem__("nickname", "x"),
         "demographics.nickname: unknown field"),
        (lambda s: s["demographics"].__setitem__("gender", "other"),
         "demographics.gender: must be one of female, male"),
        (lambda s: s["demographics"].__setitem__("income_uah_month", 0),
         "demographics.income_uah_month: must be a number > 0"),
        (lambda s: s.__setitem__("choices", s["choices"][:8]),
         "choices: expected 9 entries, got 8"),
        (lambda s: s["choices"][2].__setitem__("choice", "TAXI"),
         "choices[2].choice: must be one of CS, CC, STORE"),
        (lambda s: s["choices"][3].__setitem__("task_id", 3),
         "choices[3].task_id: duplicate task 3"),
        (lambda s: s["choices"][0].__setitem__("task_id", 0),
         "choices[0].task_id: must be an integer 1..9"),
        (lambda s: s["supply"].__setitem__("remuneration_uah", 300),
         "supply.remuneration_uah: out of range 50..120"),
        (lambda s: s["supply"].__setitem__("detour_min", 5),
         "supply.detour_min: out of range 15..60"),
        (lambda s: s["supply"].__setitem__("cs_mode", "scooter"),
         "supply.cs_mode: must be one of car, subway, bus, tram_trolley, "
         "bicycle, walk"),
        (lambda s: s["supply"]["importance"].__setitem__("cost", 5),
         "supply.importance.cost: out of range 1..4"),
        (lambda s: s["supply"]["importance"].__setitem__("speed", 2),
         "supply.importance.speed: unknown attribute"),
    ])
    def test_field_errors_are_itemized(self, mutate, message):
        envelope = make_envelope("s1")
        mutate(envelope["sections"])
        _, errors = validate_envelope(envelope)
        assert message in errors

    def test_multiple_errors_are_all_reported(self):
        envelope = make_envelope("s1")
        envelope["sections"]["likert"]["F3"] = 6
        envelope["sections"]["supply"]["detour_min"] = 5
        _, errors = validate_envelope(envelope)
        assert "likert.F3: out of range 1..5" in errors
        assert "supply.detour_min: out of range 15..60" in errors

    def test_optional_supply_fields_may_be_missing(self):
        envelope = make_envelope("s1")
        envelope["sections"]["supply"].pop("remuneration_demand_uah")
        envelope["sections"]["supply"].pop("importance")
        kwargs, errors = validate_envelope(envelope)
        assert errors == []
        assert kwargs["supply"].remuneration_demand_uah is None
        assert kwargs["supply"].importance == {}

    def test_digest_ignores_client_metadata(self):
        a = make_envelope("s1")
        b = make_envelope("s1")
        b["client"] = {"app": "other", "submitted_at": "2030-01-01T00:00:00Z"}
        assert envelope_digest(a) == envelope_digest(b)
        c = make_envelope("s1")
        c["sections"]["likert"]["F1"] = 4
        assert envelope_digest(a) != envelope_digest(c)


# --- sessions and questionnaire -------------------------------------------------------

class TestSessions:
    def test_session_ids_are_long_and_unique(self, service):
        ids = {service.create_session()["session_id"] for _ in range(20)}
        assert len(ids) == 20
        assert all(len(sid) == 32 for sid in ids)

    def test_blocks_rotate_round_robin(self, service):
        blocks = [service.create_session()["block_id"] for _ in range(13)]
        assert blocks == [1, 2, 3, 4, 5, 6, 1, 2, 3, 4, 5, 6, 1]

    def test_questionnaire_renders_the_session_block(self, service,
                                                     design_tasks):
        session = service.create_session()
        doc = service.questionnaire(session["session_id"])
        assert [s["id"] for s in doc["sections"]] == [
            "demographics", "likert", "choices", "supply"]
        tasks_doc = doc["sections"][2]["tasks"]
        expected = sorted((t for t in design_tasks
                           if t.block_id == session["block_id"]),
                          key=lambda t: t.task_id)
        assert [t["task_id"] for t in tasks_doc] == list(range(1, 10))
        for rendered, task in zip(tasks_doc, expected):
            rows = {row["key"]: row for row in rendered["attribute_rows"]}
            assert set(rows) == {"cost", "time", "eco", "flex"}
            assert rows["cost"]["values"] == {
                "CS": task.cs_cost, "CC": task.cc_cost, "STORE": None}
            assert rows["time"]["values"] == {
                "CS": task.cs_time, "CC": task.cc_time, "STORE": None}
            assert rows["eco"]["values"]["CS"] == task.cs_co2
            assert rows["flex"]["values"]["CS"] == task.cs_flex
            assert [a["id"] for a in rendered["alternatives"]] == [
                "CS", "CC", "STORE"]

    def test_unknown_session_raises(self, service):
        with pytest.raises(KeyError):
            service.questionnaire("nope")


# --- storing responses ------------------------------------------------------------------

class TestRecordResponse:
    def test_first_submission_stores_and_issues_receipt(self, service):
        session = service.create_session()
        status, receipt = service.record_response(
            make_envelope(session["session_id"]))
        assert status == 201
        assert receipt == {"session_id": session["session_id"],
                           "respondent_id": "r000001", "status": "stored"}
        assert len(service.log.entries) == 1

    def test_retry_with_same_answers_is_idempotent(self, service):
        session = service.create_session()
        first = make_envelope(session["session_id"])
        status1, receipt1 = service.record_response(first)
        retry = make_envelope(session["session_id"])
        retry["client"] = {"app": "retry", "attempt": 2}
        status2, receipt2 = service.record_response(retry)
        assert (status1, status2) == (201, 200)
        assert receipt1 == receipt2
        assert len(service.log.entries) == 1

    def test_changed_answers_conflict(self, service):
        session = service.create_session()
        service.record_response(make_envelope(session["session_id"]))
        changed = make_envelope(session["session_id"])
        changed["sections"]["likert"]["F1"] = 5
        status, body = service.record_response(changed)
        assert status == 409
        assert "different stored response" in body["detail"]
        assert len(service.log.entries) == 1

    def test_invalid_envelope_is_rejected_with_details(self, service):
        session = service.create_session()
        envelope = make_envelope(session["session_id"])
        envelope["sections"]["likert"]["F3"] = 6
        status, body = service.record_response(envelope)
        assert status == 422
        assert "likert.F3: out of range 1..5" in body["errors"]
        assert service.log.entries == []

    def test_unknown_session_is_404(self, service):
        status, body = service.record_response(make_envelope("missing"))
        assert status == 404
        assert body["detail"] == "unknown session"

    def test_missing_session_id_is_422(self, service):
        status, body = service.record_response({"sections": make_sections()})
        assert status == 422
        assert "session_id: missing" in body["errors"]

    def test_receipt_means_the_line_is_durable(self, service):
        session = service.create_session()
        status, receipt = service.record_response(
            make_envelope(session["session_id"]))
        assert status == 201
        # A fresh reader of the same file must already see the entry.
        fresh = ResponseLog(service.log.path)
        try:
            assert len(fresh.entries) == 1
            assert fresh.entries[0]["respondent_id"] == receipt["respondent_id"]
            assert fresh.entries[0]["sections"]["likert"]["F1"] == 3
        finally:
            fresh.close()


# --- restart recovery -------------------------------------------------------------------

class TestRestartRecovery:
    def test_rotation_and_receipts_survive_restart(self, design_tasks, tmp_path):
        log_path = tmp_path / LOG_FILE
        first = SurveyService(design=tuple(design_tasks),
                              log=ResponseLog(log_path))
        receipts = {}
        for _ in range(2):
            session = first.create_session()
            _, receipt = first.record_response(
                make_envelope(session["session_id"]))
            receipts[session["session_id"]] = receipt
        export_before = first.export_zip()
        first.log.close()

        second = SurveyService(design=tuple(design_tasks),
                               log=ResponseLog(log_path))
        try:
            # Two responses are stored, so the next session gets block 3.
            assert second.create_session()["block_id"] == 3
            # Replayed sessions keep their idempotent receipts.
            sid = next(iter(receipts))
            status, receipt = second.record_response(make_envelope(sid))
            assert status == 200
            assert receipt == receipts[sid]
            assert second.export_zip() == export_before
        finally:
            second.log.close()

    def test_corrupt_log_line_is_reported_with_location(self, tmp_path):
        path = tmp_path / LOG_FILE
        path.write_text('{"ok": 1}\nnot json\n', encoding="utf-8")
        with pytest.raises(ValidationError, match=rf"{LOG_FILE}:2"):
            ResponseLog(path)

    def test_blank_lines_are_skipped(self, tmp_path, design_tasks):
        path = tmp_path / LOG_FILE
        path.write_text("\n\n", encoding="utf-8")
        log = ResponseLog(path)
        try:
            assert log.entries == []
        finally:
            log.close()


# --- export ----------------------------------------------------------------------------

class TestExport:
    def fill(self, service, n):
        for i in range(n):
            session = service.create_session()
            envelope = make_envelope(session["session_id"])
            envelope["sections"]["demographics"]["age_years"] = 20 + i
            status, _ = service.record_response(envelope)
            assert status == 201

    def test_export_round_trips_through_the_csv_bundle(self, service, tmp_path):
        self.fill(service, 7)
        dataset = service.export_dataset()
        assert len(dataset.respondents) == 7
        blob = service.export_zip()
        outdir = tmp_path / "unpacked"
        with zipfile.ZipFile(__import__("io").BytesIO(blob)) as zf:
            names = set(zf.namelist())
            zf.extractall(outdir)
        assert names == {"design.csv", "respondents.csv", "likert.csv",
                         "choices.csv", "attrs.json"}
        again = read_dataset(outdir)
        assert again.respondents == dataset.respondents
        assert again.design == dataset.design

    def test_export_bytes_are_deterministic(self, service):
        self.fill(service, 3)
        assert service.export_zip() == service.export_zip()

    def test_exported_records_reflect_session_blocks(self, service):
        self.fill(service, 4)
        dataset = service.export_dataset()
        assert [r.block_id for r in dataset.respondents] == [1, 2, 3, 4]
        assert [r.id for r in dataset.respondents] == [
            "r000001", "r000002", "r000003", "r000004"]


# --- service construction ----------------------------------------------------------------

class TestServiceConstruction:
    def test_design_must_have_contiguous_blocks(self, design_tasks, tmp_path):
        block2 = tuple(t for t in design_tasks if t.block_id == 2)
        with pytest.raises(ValidationError, match=r"blocks must be 1\.\.B"):
            SurveyService(design=block2, log=ResponseLog(tmp_path / LOG_FILE))

    def test_empty_design_is_rejected(self, tmp_path):
        with pytest.raises(ValidationError, match="no tasks"):
            SurveyService(design=(), log=ResponseLog(tmp_path / LOG_FILE))

    def test_block_cap_must_be_in_range(self, design_tasks, tmp_path):
        with pytest.raises(ValidationError, match=r"n_blocks 9 outside 1\.\.6"):
            SurveyService(design=tuple(design_tasks),
                          log=ResponseLog(tmp_path / LOG_FILE), n_blocks=9)


# --- concurrency --------------------------------------------------------------------------

class TestConcurrency:
    def test_parallel_submissions_balance_blocks_exactly(self, service):
        n = 120

        def run_one(i):
            session = service.create_session()
            envelope = make_envelope(session["session_id"])
            envelope["sections"]["demographics"]["age_years"] = 18 + (i % 50)
            status, receipt = service.record_response(envelope)
            return status, receipt["respondent_id"]

        with ThreadPoolExecutor(max_workers=16) as pool:
            results = list(pool.map(run_one, range(n)))

        assert all(status == 201 for status, _ in results)
        assert len({rid for _, rid in results}) == n
        counts = {}
        for entry in service.log.entries:
            counts[entry["block_id"]] = counts.get(entry["block_id"], 0) + 1
        assert counts == {b: n // 6 for b in range(1, 7)}


# --- HTTP layer ----------------------------------------------------------------------------

class TestHttpApi:
    @pytest.fixture()
    def client(self, design_tasks, tmp_path):
        from fastapi.testclient import TestClient

        app = create_app(design=list(design_tasks), data_dir=tmp_path)
        with TestClient(app) as client:
            yield client

    def test_full_flow_over_http(self, client):
        created = client.post("/api/session")
        assert created.status_code == 201
        session = created.json()

        doc = client.get(f"/api/questionnaire/{session['session_id']}")
        assert doc.status_code == 200
        assert len(doc.json()["sections"]) == 4

        stored = client.post("/api/response",
                             json=make_envelope(session["session_id"]))
        assert stored.status_code == 201
        assert stored.json()["status"] == "stored"

        again = client.post("/api/response",
                            json=make_envelope(session["session_id"]))
        assert again.status_code == 200
        assert again.json() == stored.json()

        export = client.get("/api/export")
        assert export.status_code == 200
        assert export.headers["content-type"] == "application/zip"
        assert "survey_export.zip" in export.headers["content-disposition"]
        with zipfile.ZipFile(__import__("io").BytesIO(export.content)) as zf:
            assert "respondents.csv" in zf.namelist()

    def test_http_validation_and_missing_session_codes(self, client):
        assert client.get("/api/questionnaire/nope").status_code == 404

        session = client.post("/api/session").json()
        envelope = make_envelope(session["session_id"])
        envelope["sections"]["supply"]["detour_min"] = 900
        response = client.post("/api/response", json=envelope)
        assert response.status_code == 422
        assert "supply.detour_min: out of range 15..60" in response.json()["errors"]

    def test_endpoints_without_a_design_answer_503(self):
        from fastapi.testclient import TestClient

        app = create_app()
        with TestClient(app) as client:
            for call in (lambda: client.post("/api/session"),
                         lambda: client.get("/api/questionnaire/x"),
                         lambda: client.post("/api/response", json={}),
                         lambda: client.get("/api/export")):
                response = call()
                assert response.status_code == 503
                assert response.json() == {"detail": "no design loaded"}
