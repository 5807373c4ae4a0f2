"""Tests for persistence module."""

import csv
import json
import tempfile
from pathlib import Path

import pytest

from retroptics.tools.persistence import (
    _sanitize_filename,
    load_record,
    save_record,
    write_csv,
)


@pytest.fixture
def temp_storage():
    """Create a temporary storage directory for tests."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)


class TestSaveRecord:
    """Test save_record function."""

    def test_saves_with_metadata(self, temp_storage):
        """Test the record carries metadata and content."""
        path = temp_storage / "nested" / "target.json"

        result = save_record(path, "engineered_target", {"kappa_bar_abs2": 0.0112})

        data = json.loads(path.read_text())
        assert result["filepath"] == str(path)
        assert data["metadata"]["record_type"] == "engineered_target"
        assert data["metadata"]["name"] == "target"
        assert data["metadata"]["timestamp"] == result["timestamp"]
        assert data["content"] == {"kappa_bar_abs2": 0.0112}

    def test_invalid_record_type(self, temp_storage):
        """Test unknown record types are rejected."""
        with pytest.raises(ValueError, match="Invalid record_type"):
            save_record(temp_storage / "x.json", "hypothesis_tree", {})

    def test_content_is_stable_across_saves(self, temp_storage):
        """Test only the metadata differs between two saves of the same content."""
        content = {"dim": 3, "delta": [0.1, 0.2, 0.3]}
        first = temp_storage / "a.json"
        second = temp_storage / "b.json"

        save_record(first, "multiport_plan", content, name="plan")
        save_record(second, "multiport_plan", content, name="plan")

        a, b = json.loads(first.read_text()), json.loads(second.read_text())
        assert a["content"] == b["content"]


class TestLoadRecord:
    """Test load_record function."""

    def test_round_trip(self, temp_storage):
        """Test a saved record loads back."""
        path = temp_storage / "counts.json"
        save_record(path, "counts", {"trials": 10, "records": []})

        data = load_record(path, "counts")

        assert data["content"]["trials"] == 10

    def test_missing_file(self, temp_storage):
        """Test a missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_record(temp_storage / "missing.json")

    def test_type_mismatch(self, temp_storage):
        """Test loading with the wrong record type fails."""
        path = temp_storage / "plan.json"
        save_record(path, "multiport_plan", {"dim": 2})

        with pytest.raises(ValueError, match="Expected a 'counts' record"):
            load_record(path, "counts")

    def test_plain_json(self, temp_storage):
        """Test a document without metadata is returned as content."""
        path = temp_storage / "config.json"
        path.write_text(json.dumps({"experiment": "eight_port"}))

        data = load_record(path)

        assert data == {"metadata": {}, "content": {"experiment": "eight_port"}}


class TestCsv:
    """Test CSV helpers."""

    def test_formatting(self, temp_storage):
        """Test floats use 12 significant digits and None is empty."""
        path = temp_storage / "histogram.csv"

        write_csv(path, ["theta", "density", "stderr"], [[0.1, 1 / 3, None], [2, 0.5, 1e-20]])

        assert path.read_text() == (
            "theta,density,stderr\n0.1,0.333333333333,\n2,0.5,1e-20\n"
        )

    def test_read_back(self, temp_storage):
        """Test rows read back as dicts keyed by the header."""
        path = temp_storage / "counts.csv"
        write_csv(path, ["setting", "pattern"], [[0, "0,1,1,1"]])

        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))

        assert rows == [{"setting": "0", "pattern": "0,1,1,1"}]


class TestSanitizeFilename:
    """Test _sanitize_filename function."""

    def test_replaces_special_characters(self):
        """Test special characters collapse to single underscores."""
        assert _sanitize_filename("Fig 5.3 / weak coherent") == "fig_5_3_weak_coherent"

    def test_keeps_dashes(self):
        """Test preset names with dashes survive."""
        assert _sanitize_filename("zero-minus-Nplus1") == "zero-minus-nplus1"

    def test_limits_length(self):
        """Test long names are truncated to 100 characters."""
        assert len(_sanitize_filename("a" * 150)) == 100

    def test_empty_name(self):
        """Test a name with no usable characters gets a fallback."""
        assert _sanitize_filename("///") == "record"
