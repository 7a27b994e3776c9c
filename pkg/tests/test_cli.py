import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fracwave.cli import DEFAULTS, RunConfig, dispatch, main, parse_config
from fracwave.errors import ConfigError
from fracwave.mlfunc import ml_two
from fracwave.spectral import read_field_binary, read_field_csv


def _rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    return list(csv.reader(lines[1:]))


class TestParse:
    def test_empty_gives_defaults(self):
        cfg = parse_config("")
        assert cfg["alpha"] == DEFAULTS["alpha"]
        assert cfg["grid"] == DEFAULTS["grid"]

    def test_key_value_and_json_agree(self):
        kv = parse_config("alpha = 1.25\ngrid.dt = 0.002  # coarser\nml.z = [-1, 0]\n")
        js = parse_config('{"alpha": 1.25, "grid": {"dt": 0.002}, "ml": {"z": [-1, 0]}}')
        assert kv.values == js.values
        assert kv.digest() == js.digest()

    def test_alpha_rejected(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("subcommand = \"ml\"\nalpha = 2.5\n")
        msg = " ".join(exc.value.errors)
        assert "line 2" in msg and "(1, 2)" in msg

    def test_mu_rejected(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("p = 2\nmu = -1\n")
        assert "line 2" in " ".join(exc.value.errors)

    def test_mu_inside_interval(self):
        assert parse_config("p = 3\nmu = 1.5\n")["mu"] == 1.5

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("alpha = 1.5\nbogus = 3\n")
        assert any("line 2" in e and "bogus" in e for e in exc.value.errors)

    def test_bad_json(self):
        with pytest.raises(ConfigError):
            parse_config('{"alpha": }')

    def test_digest_ignores_output_dir(self):
        a = parse_config('out = "x"')
        b = parse_config('out = "y"')
        assert a.digest() == b.digest()
        assert a.digest() != parse_config("seed = 1").digest()


class TestDispatch:
    def test_ml_three_rows(self, tmp_path):
        cfg = parse_config('subcommand = "ml"\nalpha = 1.5\nml.z = [-1.0, -0.5, 0.0]\n').with_overrides(
            out=str(tmp_path))
        assert dispatch(cfg) == 0
        rows = _rows(tmp_path / "ml.csv")
        assert rows[0] == ["alpha", "beta", "z", "value"]
        assert len(rows) == 4
        assert float(rows[3][3]) == 1.0
        assert float(rows[1][3]) == pytest.approx(float(ml_two(1.5, 1.0, -1.0)), rel=1e-14)

    def test_unknown_subcommand(self, tmp_path):
        cfg = RunConfig(dict(DEFAULTS, subcommand="frobnicate", out=str(tmp_path)))
        with pytest.raises(ConfigError):
            dispatch(cfg)

    def test_solve_outputs(self, tmp_path):
        cfg = parse_config('subcommand = "solve"\nformat = "both"\ngrid.dt = 0.01\ngrid.n_points = 16\n'
                           'grid.n_modes = 4').with_overrides(out=str(tmp_path))
        assert dispatch(cfg) == 0
        a = read_field_csv(tmp_path / "field.csv", 1.5)
        b = read_field_binary(tmp_path / "field.bin")
        np.testing.assert_array_equal(a.values, b.values)
        assert b.values.shape == (101, 17)

    def test_verify_subset(self, tmp_path):
        text = json.dumps({"subcommand": "verify", "verify": {"experiments": ["kernel_mass", "weights"]}})
        cfg = parse_config(text).with_overrides(out=str(tmp_path))
        assert dispatch(cfg) == 0
        rows = _rows(tmp_path / "reports.csv")
        assert rows[0] == ["id", "param-json", "value", "tolerance", "pass", "seconds"]
        assert {r[0] for r in rows[1:]} >= {"kernel_mass", "weights.unit_ap"}
        assert not (tmp_path / "timings.csv").exists()
        assert (tmp_path / "weights.csv").exists()

    def test_verify_failure_exit_code(self, tmp_path):
        text = json.dumps({"subcommand": "verify", "verify": {"experiments": ["ml_range"], "alphas": [1.5]}})
        assert dispatch(parse_config(text).with_overrides(out=str(tmp_path))) == 1


class TestMain:
    def test_out_precedence(self, tmp_path, monkeypatch):
        cfg = tmp_path / "c.txt"
        cfg.write_text(f'out = "{tmp_path / "from_config"}"\nml.z = [0.0]\n')
        monkeypatch.setenv("FRACWAVE_OUT", str(tmp_path / "from_env"))
        assert main(["ml", "--config", str(cfg)]) == 0
        assert (tmp_path / "from_env" / "ml.csv").exists()
        assert main(["ml", "--config", str(cfg), "--out", str(tmp_path / "from_flag")]) == 0
        assert (tmp_path / "from_flag" / "ml.csv").exists()
        monkeypatch.delenv("FRACWAVE_OUT")
        assert main(["ml", "--config", str(cfg)]) == 0
        assert (tmp_path / "from_config" / "ml.csv").exists()

    def test_bad_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["integrate"])
        assert exc.value.code == 2

    def test_config_error_exit(self, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("alpha = 2.5\n")
        assert main(["ml", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "line 1" in capsys.readouterr().err

    def test_missing_config_is_io_error(self, tmp_path):
        assert main(["ml", "--config", str(tmp_path / "nope.txt"), "--out", str(tmp_path)]) == 3

    def test_seed_range(self, tmp_path):
        assert main(["ml", "--seed", str(2**64), "--out", str(tmp_path)]) == 2

    def test_seed_changes_hash(self, tmp_path):
        main(["ml", "--seed", "1", "--out", str(tmp_path / "a")])
        main(["ml", "--seed", "2", "--out", str(tmp_path / "b")])
        ha = (tmp_path / "a" / "ml.csv").read_text().splitlines()[0]
        hb = (tmp_path / "b" / "ml.csv").read_text().splitlines()[0]
        assert ha != hb

    def test_oscillation_outputs(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text('forcing.kind = "zero"\ndomain.lower = [-1.0]\ngrid.dt = 0.002\ngrid.n_points = 128\n'
                       'grid.n_modes = 16\n')
        assert main(["oscillation", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        rows = _rows(tmp_path / "oscillation.csv")
        assert len(rows) == 4
        assert len(_rows(tmp_path / "elongated.csv")) == 5
        assert all(r[-1] == "true" for r in _rows(tmp_path / "elongated.csv")[1:])

    def test_console_module_runs(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "fracwave.cli", "ml", "--out", str(tmp_path)],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert len(_rows(tmp_path / "ml.csv")) == 102

    def test_identical_runs_are_byte_identical(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"verify": {"experiments": ["elongated", "apriori_ratio"], "n_fields": 4,
                                              "n_samples": 5}}))
        for name in ("a", "b"):
            main(["verify", "--config", str(cfg), "--seed", "42", "--out", str(tmp_path / name)])
        for f in ("reports.csv", "weights.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
