import json

import pytest

from qlesim.errors import DomainError
from qlesim.output import emit_csv, emit_json_table, file_sha256, write_json_atomic


def test_two_by_two_table_is_three_lines(tmp_path):
    path = emit_csv({"a": [1, 2], "b": [3.5, 4.5]}, tmp_path / "t.csv")
    text = path.read_text(encoding="utf-8")
    assert text == "a,b\n1,3.5\n2,4.5\n"


def test_floats_round_trip_exactly(tmp_path):
    values = [0.1, 1.0 / 3.0, 6016.5e-6, 2.3381216607963267e-06]
    path = emit_csv({"x": values}, tmp_path / "t.csv")
    lines = path.read_text(encoding="utf-8").splitlines()[1:]
    assert [float(line) for line in lines] == values


def test_empty_table_is_header_only(tmp_path):
    path = emit_csv({"a": [], "b": []}, tmp_path / "t.csv")
    assert path.read_text(encoding="utf-8") == "a,b\n"


def test_line_endings_are_lf(tmp_path):
    path = emit_csv({"a": [1, 2]}, tmp_path / "t.csv")
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.endswith(b"\n")


def test_ragged_table_rejected(tmp_path):
    with pytest.raises(DomainError):
        emit_csv({"a": [1, 2], "b": [3]}, tmp_path / "t.csv")


def test_json_table(tmp_path):
    path = emit_json_table({"a": [1, 2], "b": ["x", "y"]}, tmp_path / "t.json")
    doc = json.loads(path.read_text(encoding="utf-8"))
    assert doc["columns"] == ["a", "b"]
    assert doc["rows"] == [{"a": 1, "b": "x"}, {"a": 2, "b": "y"}]


def test_atomic_json_write(tmp_path):
    path = write_json_atomic({"k": [1, 2.5]}, tmp_path / "m.json")
    assert json.loads(path.read_text(encoding="utf-8")) == {"k": [1, 2.5]}
    assert not (tmp_path / "m.json.tmp").exists()


def test_file_sha256_changes_with_content(tmp_path):
    a = emit_csv({"x": [1]}, tmp_path / "a.csv")
    b = emit_csv({"x": [2]}, tmp_path / "b.csv")
    assert file_sha256(a) != file_sha256(b)
    assert file_sha256(a) == file_sha256(a)
