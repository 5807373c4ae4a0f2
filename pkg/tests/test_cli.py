"""Tests for the retroptics command-line interface."""

import csv
import json
import math
import tempfile
from pathlib import Path

import pytest

from retroptics.cli import EXIT_OK, EXIT_USAGE, main, parse_target, resolve_unitary
from retroptics.schemas import CommandResult, CountsFile


@pytest.fixture
def workdir():
    """Create a temporary working directory for command output."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)


def _run_json(capsys, argv):
    code = main(["--log-level", "WARNING", *argv, "--json"])
    result = CommandResult.model_validate_json(capsys.readouterr().out)
    return code, result


def _eight_port_config(path, **overrides):
    data = {
        "experiment": "eight_port",
        "signal": {"kind": "coherent", "mean_photons": 0.3, "cutoff": 3},
        "reference": {"kind": "binomial", "degree": 3, "alternating": True},
        "phase_settings": [0.0, math.pi / 4],
        "trials": 2_000,
        "seed": 5,
    }
    data.update(overrides)
    path.write_text(json.dumps(data))
    return path


class TestParsing:
    """Test target and multiport parsing helpers."""

    def test_inline_target(self):
        """Test inline amplitudes, including complex ones."""
        psi = parse_target("1, 0.5+0.5j ,-1")

        assert psi.cutoff == 2
        assert psi.amps[1] == complex(0.5, 0.5)

    def test_invalid_amplitude(self):
        """Test unparseable amplitudes are rejected."""
        with pytest.raises(ValueError, match="invalid amplitude"):
            parse_target("1,x,1")

    def test_missing_target_file(self, workdir):
        """Test a missing JSON target raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            parse_target(str(workdir / "psi.json"))

    def test_unitary_choices(self):
        """Test named multiports resolve to matrices of the right size."""
        assert resolve_unitary("dft", 4).shape == (4, 4)
        assert resolve_unitary("dft:5", 3).shape == (5, 5)
        assert resolve_unitary("two_bs", 7).shape == (3, 3)

        with pytest.raises(ValueError, match="invalid multiport"):
            resolve_unitary("dft:three", 3)


class TestDesignCommand:
    """Test the design command."""

    def test_two_beam_splitters(self, capsys):
        """Test the cascaded scheme reports |kappa_bar|^2 and P_psi."""
        code, result = _run_json(
            capsys, ["design", "1,1,1", "--unitary", "two_bs", "--pattern", "0,1,1"]
        )

        assert code == EXIT_OK
        assert result.status == "ok"
        assert result.data["kappa_bar_abs2"] == pytest.approx(0.011179, abs=2e-6)
        assert result.data["efficiency"] == pytest.approx(0.06708, abs=5e-5)

    def test_preset(self, capsys):
        """Test the dft3 preset matches the inline DFT design."""
        _, preset = _run_json(capsys, ["design", "--preset", "dft3"])
        _, inline = _run_json(capsys, ["design", "1,1,1", "--unitary", "dft"])

        assert preset.data["efficiency"] == pytest.approx(inline.data["efficiency"])
        assert preset.data["efficiency"] == pytest.approx(0.1333, abs=5e-4)

    def test_optimized_column_beats_dft(self, capsys):
        """Test the optimized first column is at least as efficient as the DFT."""
        _, optimal = _run_json(capsys, ["design", "--preset", "optimal3"])
        _, dft = _run_json(capsys, ["design", "--preset", "dft3"])

        assert optimal.data["efficiency"] >= dft.data["efficiency"] - 1e-9

    def test_zero_photon_target(self, capsys):
        """Test a vacuum target is reported, not treated as an error."""
        code, result = _run_json(capsys, ["design", "1,0,0"])

        assert code == EXIT_OK
        assert result.summary == "no roots: zero-photon target"
        assert result.data == {}

    def test_simulate_preset_rejected(self, capsys):
        """Test a simulate preset cannot drive the design command."""
        code, result = _run_json(capsys, ["design", "--preset", "fig5_3"])

        assert code == EXIT_USAGE
        assert result.status == "error"
        assert "not a design preset" in result.summary

    def test_writes_record_and_netlist(self, capsys, workdir):
        """Test the engineered target and Reck netlist are written."""
        out, netlist = workdir / "target.json", workdir / "plan.csv"

        code, result = _run_json(
            capsys, ["design", "1,1,1", "--out", str(out), "--netlist", str(netlist)]
        )

        assert code == EXIT_OK
        assert result.paths == {"target": str(out), "netlist": str(netlist)}
        record = json.loads(out.read_text())
        assert record["metadata"]["record_type"] == "engineered_target"
        assert record["content"]["pattern"] == [0, 1, 1]
        with open(netlist, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["index", "p", "q", "theta", "phi", "reflectivity"]
        assert len(rows) == 4

    def test_target_from_saved_record(self, capsys, workdir):
        """Test a saved design record can be fed back as the target."""
        out = workdir / "target.json"
        _run_json(capsys, ["design", "1,1,1", "--out", str(out)])

        code, result = _run_json(capsys, ["design", str(out), "--unitary", "two_bs"])

        assert code == EXIT_OK
        assert result.data["efficiency"] == pytest.approx(0.06708, abs=5e-5)

    def test_missing_target(self, capsys):
        """Test design without a target or preset is a usage error."""
        code, result = _run_json(capsys, ["design"])

        assert code == EXIT_USAGE
        assert "TARGET" in result.summary

    def test_plain_text_output(self, capsys):
        """Test the summary is printed without --json."""
        code = main(["--log-level", "WARNING", "design", "1,1,1"])

        assert code == EXIT_OK
        assert capsys.readouterr().out.startswith("P_psi = ")


class TestDecomposeCommand:
    """Test the decompose command."""

    def test_dft_plan(self, capsys, workdir):
        """Test the three-port DFT factorizes into three beam splitters."""
        out = workdir / "plan.json"

        code, result = _run_json(capsys, ["decompose", "--unitary", "dft:3", "--out", str(out)])

        assert code == EXIT_OK
        assert result.data["dim"] == 3
        assert len(result.data["elements"]) == 3
        assert json.loads(out.read_text())["metadata"]["record_type"] == "multiport_plan"

    def test_plan_drives_design(self, capsys, workdir):
        """Test a saved plan reproduces the DFT design efficiency."""
        out = workdir / "plan.json"
        _run_json(capsys, ["decompose", "--unitary", "dft:3", "--out", str(out)])

        _, from_plan = _run_json(capsys, ["design", "1,1,1", "--unitary", str(out)])
        _, direct = _run_json(capsys, ["design", "1,1,1", "--unitary", "dft"])

        assert from_plan.data["efficiency"] == pytest.approx(
            direct.data["efficiency"], rel=1e-8
        )

    def test_missing_matrix_file(self, capsys, workdir):
        """Test a missing matrix file is a usage error."""
        code, _ = _run_json(capsys, ["decompose", "--unitary", str(workdir / "u.json")])

        assert code == EXIT_USAGE


class TestSimulateCommand:
    """Test the simulate command."""

    def test_writes_outputs(self, capsys, workdir):
        """Test counts, histogram and analytic files are written."""
        config = _eight_port_config(workdir / "config.json")
        out = workdir / "run"

        code, result = _run_json(capsys, ["simulate", str(config), "--out", str(out)])

        assert code == EXIT_OK
        assert set(result.paths) == {"counts_csv", "counts_json", "histogram", "analytic"}
        header = (out / "counts.csv").read_text().splitlines()[0]
        assert header == "setting,phase,pattern,count,analytic_prob"
        histogram = (out / "histogram.csv").read_text().splitlines()
        assert histogram[0] == "theta,density,stderr,analytic_density"
        assert len(histogram) == 1 + 8
        counts = CountsFile.model_validate(
            json.loads((out / "counts.json").read_text())["content"]
        )
        assert counts.trials == 2_000
        assert counts.config.seed == 5

    def test_same_seed_same_counts(self, capsys, workdir):
        """Test seeded reruns write byte-identical counts."""
        config = _eight_port_config(workdir / "config.json")

        _run_json(capsys, ["simulate", str(config), "--out", str(workdir / "a")])
        _run_json(capsys, ["simulate", str(config), "--out", str(workdir / "b")])

        first = (workdir / "a" / "counts.csv").read_bytes()
        second = (workdir / "b" / "counts.csv").read_bytes()
        assert first == second

    def test_seed_from_environment(self, capsys, workdir, monkeypatch):
        """Test RETROPTICS_SEED is used when neither config nor flag sets a seed."""
        monkeypatch.setenv("RETROPTICS_SEED", "17")
        config = _eight_port_config(workdir / "config.json", seed=None)

        code, result = _run_json(capsys, ["simulate", str(config), "--out", str(workdir)])

        assert code == EXIT_OK
        assert result.data["seed"] == 17
        analytic = json.loads((workdir / "analytic.json").read_text())
        assert analytic["content"]["seed"] == 17

    def test_flags_override_config(self, capsys, workdir):
        """Test --trials and --seed replace the configured values."""
        config = _eight_port_config(workdir / "config.json")

        _, result = _run_json(
            capsys,
            ["simulate", str(config), "--trials", "50", "--seed", "9", "--out", str(workdir)],
        )

        assert result.data["trials"] == 50
        assert result.data["seed"] == 9

    def test_invalid_efficiency(self, capsys, workdir):
        """Test an efficiency outside (0, 1] is a usage error."""
        config = _eight_port_config(workdir / "config.json")

        code, result = _run_json(
            capsys, ["simulate", str(config), "--eta", "1.5", "--out", str(workdir)]
        )

        assert code == EXIT_USAGE
        assert result.status == "error"

    def test_design_preset_rejected(self, capsys, workdir):
        """Test a design preset cannot drive the simulate command."""
        code, _ = _run_json(capsys, ["simulate", "--preset", "dft3", "--out", str(workdir)])

        assert code == EXIT_USAGE


class TestAnalyzeCommand:
    """Test the analyze command."""

    def _simulate(self, capsys, workdir, **overrides):
        config = _eight_port_config(workdir / "config.json", **overrides)
        _run_json(capsys, ["simulate", str(config), "--out", str(workdir)])
        return workdir / "counts.json"

    def test_phase_distribution(self, capsys, workdir):
        """Test the reconstructed P(theta) integrates to one and is written."""
        counts = self._simulate(capsys, workdir)
        out = workdir / "phase.csv"

        code, result = _run_json(
            capsys,
            [
                "analyze",
                str(counts),
                "--mode",
                "phase-dist",
                "--source",
                "analytic",
                "--grid-size",
                "64",
                "--out",
                str(out),
            ],
        )

        assert code == EXIT_OK
        assert result.data["integral"] == pytest.approx(1.0, abs=1e-9)
        assert len(out.read_text().splitlines()) == 1 + 64

    def test_missing_settings(self, capsys, workdir):
        """Test a single reference shift leaves angles missing and exits 2."""
        counts = self._simulate(capsys, workdir, phase_settings=[0.0])

        code, result = _run_json(capsys, ["analyze", str(counts), "--mode", "phase-dist"])

        assert code == EXIT_USAGE
        assert "missing phase setting" in result.summary

    def test_element_needs_photon_number(self, capsys, workdir):
        """Test dmelem without --photon-number is a usage error."""
        counts = self._simulate(capsys, workdir)

        code, result = _run_json(capsys, ["analyze", str(counts), "--mode", "dmelem"])

        assert code == EXIT_USAGE
        assert "--photon-number" in result.summary

    def test_element_of_known_state(self, capsys, workdir):
        """Test rho_01 = 1/2 of (|0> + |1>)/sqrt(2) from a double beam splitter run."""
        config = workdir / "config.json"
        config.write_text(
            json.dumps(
                {
                    "experiment": "double_bs",
                    "signal": {"kind": "fock", "amplitudes": [[1, 0], [1, 0]]},
                    "reference": {"kind": "coherent", "alpha": [0.5**0.5, 0], "cutoff": 6},
                    "phase_settings": [0.0, math.pi / 2, math.pi, 3 * math.pi / 2],
                    "trials": 100,
                    "seed": 1,
                }
            )
        )
        _run_json(capsys, ["simulate", str(config), "--out", str(workdir)])
        out = workdir / "element.json"

        code, result = _run_json(
            capsys,
            [
                "analyze",
                str(workdir / "counts.json"),
                "--mode",
                "dmelem",
                "--photon-number",
                "0",
                "--source",
                "analytic",
                "--out",
                str(out),
            ],
        )

        assert code == EXIT_OK
        assert result.data["re"] == pytest.approx(0.5, abs=1e-8)
        assert json.loads(out.read_text())["metadata"]["record_type"] == "analysis"

    def test_wrong_record_type(self, capsys, workdir):
        """Test a design record is not accepted as counts."""
        target = workdir / "target.json"
        _run_json(capsys, ["design", "1,1,1", "--out", str(target)])

        code, result = _run_json(capsys, ["analyze", str(target), "--mode", "moments"])

        assert code == EXIT_USAGE
        assert "Expected a 'counts' record" in result.summary
