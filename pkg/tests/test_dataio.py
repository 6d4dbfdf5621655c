"""File formats: canonical CSV/JSON round-trips and located parse errors."""
import json

import pytest

from crowdchoice.dataio import (
    ParseError,
    read_attribute_specs,
    read_dataset,
    read_design,
    read_likert_scores,
    read_params,
    write_attribute_specs,
    write_dataset,
    write_design,
    write_json,
    write_params,
)
from crowdchoice.model import published_parameters


class TestDesignFile:
    def test_round_trip(self, design_tasks, tmp_path):
        path = tmp_path / "design.csv"
        write_design(design_tasks, path)
        assert read_design(path) == list(design_tasks)

    def test_rewrite_is_byte_identical(self, design_tasks, tmp_path):
        path_a = tmp_path / "a.csv"
        path_b = tmp_path / "b.csv"
        write_design(design_tasks, path_a)
        write_design(read_design(path_a), path_b)
        assert path_a.read_bytes() == path_b.read_bytes()

    def test_header_checked(self, tmp_path):
        path = tmp_path / "design.csv"
        path.write_text("foo,bar\n1,2\n")
        with pytest.raises(ParseError, match="header"):
            read_design(path)

    def test_cell_error_names_row_and_column(self, tmp_path):
        path = tmp_path / "design.csv"
        path.write_text(
            "block_id,task_id,cs_cost,cs_time,cs_co2,cs_flex,cc_cost,cc_time\n"
            "1,1,60,notanumber,0,0,50,3\n")
        with pytest.raises(ParseError, match=r"row 2.*cs_time"):
            read_design(path)

    def test_off_grid_level_rejected(self, tmp_path):
        path = tmp_path / "design.csv"
        path.write_text(
            "block_id,task_id,cs_cost,cs_time,cs_co2,cs_flex,cc_cost,cc_time\n"
            "1,1,61,1.5,0,0,50,3\n")
        with pytest.raises(ParseError, match="row 2"):
            read_design(path)


class TestDatasetBundle:
    def test_round_trip(self, small_dataset, tmp_path):
        write_dataset(small_dataset, tmp_path)
        loaded = read_dataset(tmp_path)
        assert loaded.respondents == small_dataset.respondents
        assert loaded.design == small_dataset.design

    def test_rewrite_is_byte_identical(self, small_dataset, tmp_path):
        dir_a = tmp_path / "a"
        dir_b = tmp_path / "b"
        write_dataset(small_dataset, dir_a)
        write_dataset(read_dataset(dir_a), dir_b)
        for name in ("design.csv", "respondents.csv", "likert.csv", "choices.csv"):
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes(), name

    def test_optional_supply_fields_survive(self, tiny_dataset, tmp_path):
        write_dataset(tiny_dataset, tmp_path)
        loaded = read_dataset(tmp_path)
        by_id = {r.id: r for r in loaded.respondents}
        assert by_id["p03"].supply.remuneration_demand_uah is None
        assert by_id["p02"].supply.importance == {"cost": 3, "time": 4}
        assert by_id["p01"].supply.importance["flex"] == 2

    def test_likert_score_errors_located(self, small_dataset, tmp_path):
        write_dataset(small_dataset, tmp_path)
        path = tmp_path / "likert.csv"
        lines = path.read_text().splitlines()
        lines[3] = lines[3].rsplit(",", 1)[0] + ",9"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError, match="row 4"):
            read_likert_scores(path)

    def test_choice_label_errors_located(self, small_dataset, tmp_path):
        write_dataset(small_dataset, tmp_path)
        path = tmp_path / "choices.csv"
        lines = path.read_text().splitlines()
        lines[2] = lines[2].rsplit(",", 1)[0] + ",WALK"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError, match="row 3"):
            read_dataset(tmp_path)


class TestSpecsAndParams:
    def test_attribute_specs_round_trip(self, specs, tmp_path):
        path = tmp_path / "attrs.json"
        write_attribute_specs(specs, path)
        assert read_attribute_specs(path) == list(specs)

    def test_params_round_trip(self, tmp_path):
        path = tmp_path / "params.json"
        params = published_parameters()
        write_params(params, path)
        assert read_params(path).values == params.values

    def test_params_reject_unknown_names(self, tmp_path):
        path = tmp_path / "params.json"
        doc = published_parameters().as_dict()
        doc["beta_bogus"] = 1.0
        path.write_text(json.dumps(doc))
        with pytest.raises(Exception, match="beta_bogus"):
            read_params(path)

    def test_write_json_is_canonical(self, tmp_path):
        path_a = tmp_path / "a.json"
        path_b = tmp_path / "b.json"
        write_json({"b": 1, "a": [1.5, 2]}, path_a)
        write_json({"a": [1.5, 2], "b": 1}, path_b)
        assert path_a.read_bytes() == path_b.read_bytes()
        assert json.loads(path_a.read_text()) == {"a": [1.5, 2], "b": 1}
