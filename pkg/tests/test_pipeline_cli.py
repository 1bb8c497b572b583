"""Config validation, table I/O, and the command-line verbs."""

import json
import os

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from coopfdtd.cli import main
from coopfdtd.errors import ConfigError, InvalidArgumentError
from coopfdtd.pipeline import (
    TABLE_COLUMNS,
    SpectrumTable,
    apply_sweep_value,
    parse_config,
)


def tiny_config(**overrides):
    data = {
        "scene": {
            "kind": "vacuum",
            "extent": [0.8, 0.8, 0.8],
            "dipoles": [
                {"label": "A", "position": [0.0, 0.0, 0.0],
                 "orientation": [1.0, 0.0, 0.0]},
            ],
        },
        "grid": {"resolution": 12, "pml_cells": 8},
        "source": {"center_frequency": 1.0, "fractional_bandwidth": 0.5},
        "analysis": {
            "frequency": {"min": 0.9, "max": 1.1, "count": 9},
            "kk_window": [0.92, 1.08],
        },
        "atoms": {"frequency_a": 1.0, "frequency_b": 1.0},
    }
    data.update(overrides)
    return data


def write_config(tmp_path, data, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


class TestConfigValidation:
    def test_valid_config_parses(self):
        cfg = parse_config(tiny_config())
        assert cfg.freq_grid.size == 9
        assert cfg.atoms[0].transition_frequency == 1.0

    def test_unknown_top_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown keys"):
            parse_config(tiny_config(bogus=1))

    def test_unknown_scene_key_rejected(self):
        data = tiny_config()
        data["scene"]["plate_gap"] = 0.7
        with pytest.raises(ConfigError, match="unknown keys"):
            parse_config(data)

    def test_bad_scene_kind_rejected(self):
        data = tiny_config()
        data["scene"]["kind"] = "freespace"
        with pytest.raises(ConfigError, match="scene.kind"):
            parse_config(data)

    def test_missing_section_rejected(self):
        data = tiny_config()
        del data["analysis"]
        with pytest.raises(ConfigError, match="missing keys"):
            parse_config(data)

    def test_short_frequency_grid_rejected(self):
        data = tiny_config()
        data["analysis"]["frequency"]["count"] = 4
        with pytest.raises(ConfigError, match="count"):
            parse_config(data)

    def test_bad_dipole_vector_rejected(self):
        data = tiny_config()
        data["scene"]["dipoles"][0]["position"] = [0.0, 0.0]
        with pytest.raises(ConfigError, match="exactly 3"):
            parse_config(data)

    def test_sweep_path_must_exist(self):
        data = tiny_config(sweep={"parameter": "scene.plate_gap",
                                  "values": [0.5]})
        with pytest.raises(ConfigError, match="not found"):
            parse_config(data)

    def test_empty_sweep_values_rejected(self):
        data = tiny_config(sweep={"parameter": "source.center_frequency",
                                  "values": []})
        with pytest.raises(ConfigError, match="non-empty"):
            parse_config(data)

    def test_config_hash_tracks_content(self):
        a = parse_config(tiny_config())
        b = parse_config(tiny_config())
        assert a.config_hash == b.config_hash
        data = tiny_config()
        data["grid"]["resolution"] = 14
        assert parse_config(data).config_hash != a.config_hash

    def test_apply_sweep_value_deep_copies(self):
        raw = tiny_config()
        out = apply_sweep_value(raw, "scene.dipoles.0.position.2", 0.1)
        assert out["scene"]["dipoles"][0]["position"][2] == 0.1
        assert raw["scene"]["dipoles"][0]["position"][2] == 0.0


def synthetic_columns(freqs, gamma_aa=None, gamma_ij=None, delta_ij=None,
                      gamma_bb=None):
    zeros = np.zeros_like(freqs)
    return {
        "omega": freqs, "P_A": zeros, "P_B": zeros, "P_AB": zeros,
        "P_co": zeros, "eta": zeros,
        "gamma_ij": zeros if gamma_ij is None else gamma_ij,
        "gamma_AA": zeros if gamma_aa is None else gamma_aa,
        "gamma_BB": zeros if gamma_bb is None else gamma_bb,
        "delta_ij": zeros if delta_ij is None else delta_ij,
    }


class TestSpectrumTable:
    def test_round_trip_byte_identical(self, tmp_path):
        f = np.linspace(0.9, 1.1, 21)
        table = SpectrumTable(synthetic_columns(f, gamma_aa=f**2),
                              {"config_hash": "abc", "version": "0"})
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        table.write_csv(p1)
        SpectrumTable.read_csv(p1).write_csv(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_missing_column_rejected(self):
        f = np.linspace(0.9, 1.1, 21)
        cols = synthetic_columns(f)
        del cols["eta"]
        with pytest.raises(InvalidArgumentError, match="missing columns"):
            SpectrumTable(cols, {})

    def test_non_finite_rejected(self):
        f = np.linspace(0.9, 1.1, 21)
        bad = np.zeros_like(f)
        bad[3] = np.nan
        with pytest.raises(InvalidArgumentError, match="non-finite"):
            SpectrumTable(synthetic_columns(f, gamma_aa=bad), {})

    def test_non_increasing_omega_rejected(self):
        f = np.linspace(1.1, 0.9, 21)
        with pytest.raises(InvalidArgumentError, match="strictly increasing"):
            SpectrumTable(synthetic_columns(f), {})

    def test_corrupted_row_names_line(self, tmp_path):
        f = np.linspace(0.9, 1.1, 21)
        path = tmp_path / "t.csv"
        SpectrumTable(synthetic_columns(f), {}).write_csv(path)
        lines = path.read_text().splitlines()
        lines[5] = lines[5].replace(",", ";", 1)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(InvalidArgumentError, match="line 6"):
            SpectrumTable.read_csv(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("omega,Pa\n1.0,2.0\n")
        with pytest.raises(InvalidArgumentError, match="header"):
            SpectrumTable.read_csv(path)


@pytest.fixture
def runner():
    return CliRunner()


class TestCliRun:
    def test_missing_config_exits_2(self, runner, tmp_path):
        result = runner.invoke(main, ["run", "--config",
                                      str(tmp_path / "nope.yaml")])
        assert result.exit_code == 2

    def test_invalid_config_exits_2(self, runner, tmp_path):
        path = write_config(tmp_path, tiny_config(bogus=1))
        result = runner.invoke(main, ["run", "--config", path])
        assert result.exit_code == 2
        assert "config" in result.output

    def test_run_writes_table_and_manifest(self, runner, tmp_path):
        path = write_config(tmp_path, tiny_config())
        out = str(tmp_path / "out")
        result = runner.invoke(main, ["run", "--config", path, "--out", out,
                                      "--max-steps", "4000"])
        assert result.exit_code == 0, result.output
        table = SpectrumTable.read_csv(os.path.join(out, "spectra.csv"))
        assert table.columns["gamma_AA"].size == 9
        assert np.all(table.columns["gamma_AA"] > 0)
        manifest = json.loads(
            (tmp_path / "out" / "manifest.json").read_text())
        assert set(manifest["runs"]) == {"reference", "A"}
        assert manifest["config_hash"] == parse_config(tiny_config()).config_hash

    def test_sweep_reuses_reference(self, runner, tmp_path):
        data = tiny_config(sweep={
            "parameter": "scene.dipoles.0.position.2",
            "values": [0.0, 0.05],
        })
        path = write_config(tmp_path, data)
        out = str(tmp_path / "sweep")
        result = runner.invoke(main, ["sweep", "--config", path, "--out", out,
                                      "--max-steps", "4000"])
        assert result.exit_code == 0, result.output
        for tag in ("point_000", "point_001"):
            assert os.path.exists(os.path.join(out, f"{tag}.csv"))
        agg = (tmp_path / "sweep" / "aggregate.csv").read_text().splitlines()
        assert agg[0].startswith("sweep_value,")
        assert len(agg) == 3
        manifest = json.loads(
            (tmp_path / "sweep" / "manifest.json").read_text())
        assert manifest["reference_runs"] == 1
        assert manifest["failed_points"] == 0

    def test_sweep_without_sweep_section_exits_2(self, runner, tmp_path):
        path = write_config(tmp_path, tiny_config())
        result = runner.invoke(main, ["sweep", "--config", path])
        assert result.exit_code == 2


class TestCliAnalyze:
    def write_table(self, tmp_path, freqs, name="table.csv", **kwargs):
        path = tmp_path / name
        SpectrumTable(synthetic_columns(freqs, **kwargs), {}).write_csv(path)
        return str(path)

    def test_resonance_recovers_lorentzian(self, runner, tmp_path):
        f = np.linspace(0.9, 1.1, 401)
        g = 0.1 + 2.0 / (1.0 + 4.0 * 80.0**2 * (f / 1.02 - 1.0) ** 2)
        table = self.write_table(tmp_path, f, gamma_aa=g)
        result = runner.invoke(main, ["analyze", table, "--mode", "resonance"])
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)
        assert report["omega_c"] == pytest.approx(1.02, rel=1e-4)
        assert report["q_factor"] == pytest.approx(80.0, rel=1e-2)

    def test_poles_match_constant_coupling_closed_form(self, runner, tmp_path):
        f = np.linspace(0.2, 1.8, 401)
        table = self.write_table(
            tmp_path, f,
            gamma_aa=np.full(f.size, 0.1), gamma_bb=np.full(f.size, 0.1),
            gamma_ij=np.full(f.size, 0.05),
            delta_ij=np.full(f.size, 0.02))
        config = write_config(tmp_path, tiny_config())
        result = runner.invoke(main, ["analyze", table, "--mode", "poles",
                                      "--config", config])
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)
        roots = {complex(re, im) for re, im in report["roots"]}
        markov = {complex(re, im) for re, im in report["markov_roots"]}
        expected = {1.02 - 0.075j, 0.98 - 0.025j}
        for want in expected:
            assert min(abs(z - want) for z in roots) < 1e-8
            assert min(abs(z - want) for z in markov) < 1e-12

    def test_dynamics_writes_trace(self, runner, tmp_path):
        f = np.linspace(-80.0, 82.0, 8001)
        table = self.write_table(
            tmp_path, f,
            gamma_aa=np.full(f.size, 0.1), gamma_bb=np.full(f.size, 0.1),
            gamma_ij=np.full(f.size, 0.05))
        data = tiny_config()
        data["atoms"] = {"frequency_a": 1.0, "frequency_b": 1.0}
        data["analysis"]["time"] = {"max": 20.0, "count": 11}
        config = write_config(tmp_path, data)
        trace_path = str(tmp_path / "trace.csv")
        result = runner.invoke(main, ["analyze", table, "--mode", "dynamics",
                                      "--config", config, "--out", trace_path])
        assert result.exit_code == 0, result.output
        lines = open(trace_path).read().splitlines()
        assert lines[0] == "t,re_a,im_a,re_b,im_b,population"
        assert len(lines) == 12
        pops = [float(line.split(",")[-1]) for line in lines[1:]]
        assert pops[0] == pytest.approx(1.0, abs=1e-3)
        assert all(b <= a + 1e-9 for a, b in zip(pops, pops[1:]))

    def test_poles_without_config_exits_2(self, runner, tmp_path):
        f = np.linspace(0.9, 1.1, 21)
        table = self.write_table(tmp_path, f)
        result = runner.invoke(main, ["analyze", table, "--mode", "poles"])
        assert result.exit_code == 2

    def test_corrupt_table_exits_2(self, runner, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("not,a,table\n")
        result = runner.invoke(main, ["analyze", str(path),
                                      "--mode", "resonance"])
        assert result.exit_code == 2


class TestSeedCheck:
    def test_seed_check_passes(self, runner):
        result = runner.invoke(main, ["run", "--seed-check"])
        assert result.exit_code == 0, result.output
        assert "seed-check passed" in result.output
