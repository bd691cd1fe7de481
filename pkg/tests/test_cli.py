import subprocess
import sys

import pytest

from srbandits.cli import main, parse_seeds
from srbandits.config import ExperimentConfig, load_config
from srbandits.errors import ConfigError


def write_small(path, **updates):
    cfg = ExperimentConfig(
        name=path.stem, horizon=40, scenario_n_aps=2, scenario_n_stations=4, scenario_arena=[30.0, 30.0]
    ).replace(**updates)
    cfg.save(path)
    return path


class TestParseSeeds:
    @pytest.mark.parametrize("text, seeds", [("1..4", [1, 2, 3, 4]), ("3", [3]), ("1,4,7", [1, 4, 7]), ("2..3,9", [2, 3, 9])])
    def test_forms(self, text, seeds):
        assert parse_seeds(text) == seeds

    @pytest.mark.parametrize("text", ["", "5..2", ","])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_seeds(text)


class TestCommands:
    def test_run(self, tmp_path, capsys):
        cfg = write_small(tmp_path / "a.cfg")
        assert main(["run", "--config", str(cfg), "--seed", "2", "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "a_seed2.csv").exists()
        assert "cumulative_throughput_bps" in capsys.readouterr().out

    def test_compare(self, tmp_path, capsys):
        a = write_small(tmp_path / "a.cfg")
        b = write_small(tmp_path / "b.cfg", algo="ucb")
        code = main(["compare", "--configs", f"{a},{b}", "--seeds", "1..2", "--out", str(tmp_path / "cmp")])
        assert code == 0
        assert (tmp_path / "cmp" / "compare.csv").exists()
        assert "b-a" in capsys.readouterr().out

    def test_compare_mismatch(self, tmp_path, capsys):
        a = write_small(tmp_path / "a.cfg")
        b = write_small(tmp_path / "b.cfg", scenario_traffic_bps=1e8)
        code = main(["compare", "--configs", f"{a},{b}", "--seeds", "1", "--out", str(tmp_path)])
        assert code != 0
        assert "error:" in capsys.readouterr().err

    def test_surface(self, tmp_path, capsys):
        cfg = write_small(tmp_path / "s.cfg", scenario_n_aps=3, scenario_n_stations=5, scenario_arena=[60.0, 60.0])
        out = tmp_path / "surf" / "s.csv"
        assert main(["surface", "--config", str(cfg), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "p_tx_dbm,t_cs_dbm,c_total_bps"
        assert len(lines) == 1 + 21 * 21
        assert "argmax" in capsys.readouterr().out

    def test_init_configs(self, tmp_path):
        assert main(["init-configs", "--out", str(tmp_path)]) == 0
        cfg = load_config(tmp_path / "dynamic_partial.cfg")
        assert cfg.transfer_strategy == "partial"

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("horizon = 0\n")
        assert main(["run", "--config", str(bad), "--seed", "1", "--out", str(tmp_path)]) == 2
        assert "horizon" in capsys.readouterr().err

    def test_missing_subcommand(self):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code != 0

    def test_module_entry_point(self, tmp_path):
        cfg = write_small(tmp_path / "m.cfg", horizon=5)
        proc = subprocess.run(
            [sys.executable, "-m", "srbandits", "run", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "m_seed1.csv").exists()
