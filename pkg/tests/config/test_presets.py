"""Tests for named presets and environment settings."""

import pytest

from retroptics.config import (
    get_default_seed,
    get_log_level,
    get_preset,
    list_presets,
    preset_kind,
)
from retroptics.schemas import ExperimentConfig
from retroptics.tools.fock import squeezed_state


class TestPresets:
    """Test preset lookup."""

    def test_all_presets_listed(self):
        """Test every documented scenario is available."""
        assert set(list_presets()) == {
            "simple-config",
            "dft3",
            "optimal3",
            "zero-minus-Nplus1",
            "fig5_3",
            "fig5_5",
        }

    def test_unknown_preset(self):
        """Test an unknown name lists the valid ones."""
        with pytest.raises(ValueError, match="Valid presets are"):
            get_preset("dft4")

    @pytest.mark.parametrize("name", ["simple-config", "dft3", "optimal3", "zero-minus-Nplus1"])
    def test_design_presets(self, name):
        """Test design presets name a target, a multiport and a pattern of matching degree."""
        preset = get_preset(name)

        assert preset_kind(name) == "design"
        assert preset["unitary"] in ("two_bs", "dft", "optimize")
        assert sum(preset["pattern"]) == len(preset["target"]) - 1

    @pytest.mark.parametrize("name,eta", [("fig5_3", 1.0), ("fig5_5", 0.6)])
    def test_simulate_presets_validate(self, name, eta):
        """Test simulate presets validate as experiment configs."""
        config = ExperimentConfig.model_validate(get_preset(name)["config"])

        assert preset_kind(name) == "simulate"
        assert config.experiment == "eight_port"
        assert config.detector_efficiency == eta
        assert len(config.phase_settings) == 4

    def test_squeezed_reference_is_physical(self):
        """Test the squeezed reference builds with most of its weight below the cutoff."""
        spec = get_preset("fig5_3")["config"]["reference"]

        state = squeezed_state(complex(*spec["alpha"]), complex(*spec["t"]), spec["cutoff"])

        assert abs(complex(*spec["t"])) < 1
        assert state.tail_mass < 0.05


class TestSettings:
    """Test environment-backed settings."""

    def test_default_seed(self, monkeypatch):
        """Test the seed falls back to zero."""
        monkeypatch.delenv("RETROPTICS_SEED", raising=False)

        assert get_default_seed() == 0

    def test_seed_from_environment(self, monkeypatch):
        """Test RETROPTICS_SEED is read at call time."""
        monkeypatch.setenv("RETROPTICS_SEED", "42")

        assert get_default_seed() == 42

    def test_invalid_seed(self, monkeypatch):
        """Test a non-integer seed is rejected."""
        monkeypatch.setenv("RETROPTICS_SEED", "abc")

        with pytest.raises(ValueError, match="must be an integer"):
            get_default_seed()

    def test_log_level(self, monkeypatch):
        """Test the log level is upper-cased."""
        monkeypatch.setenv("RETROPTICS_LOG_LEVEL", "debug")

        assert get_log_level() == "DEBUG"
