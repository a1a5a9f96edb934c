import csv
import json
import math

import pytest

from hermheat.cli import load_config, main, render_csv
from hermheat.experiments import EXPERIMENTS, ConfigError, resolve, run_experiment


def write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def rows_of(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_inf_literal(self, tmp_path):
        raw = load_config(write(tmp_path, "q = [inf, 2.0]\n"))
        assert raw["q"] == [math.inf, 2.0]

    def test_nested_tables_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="flat"):
            load_config(write(tmp_path, "[solver]\nN = 4\n"))

    def test_unknown_key_lists_allowed(self):
        with pytest.raises(ConfigError, match="allowed: N, beta, d"):
            resolve(EXPERIMENTS["propagator-check"], {"gamma": 1})

    @pytest.mark.parametrize("name,raw", [
        ("propagator-check", {"d": 3}),
        ("propagator-check", {"beta": 0.0}),
        ("smoothing-sweep", {"beta": 2.0, "p": [1.0], "q": [1.0]}),
        ("smoothing-sweep", {"p": [1.0, 2.0], "q": [2.0]}),
        ("continuity", {"r": -1.0}),
        ("envelope-audit", {"p": 2.0}),
        ("decay", {"a": 3.0}),
        ("decay", {"alpha": 0.5}),
        ("decay", {"dt": 0.003}),
        ("decay", {"m": 2.0}),
        ("blowup-probe", {"beta": 0.5}),
        ("blowup-probe", {"epsilon": 0.01}),
        ("blowup-probe", {"seed": -1}),
    ])
    def test_invalid(self, name, raw):
        with pytest.raises(ConfigError):
            resolve(EXPERIMENTS[name], raw)

    def test_seed_override(self):
        assert resolve(EXPERIMENTS["norms-audit"], {"seed": 4}, seed=9)["seed"] == 9

    def test_output_key_not_forwarded(self):
        assert "output" not in resolve(EXPERIMENTS["norms-audit"], {"output": "x"})


class TestCsv:
    def test_cells(self):
        text = render_csv(["a", "b", "c"], [(0.1, True, "x"), (math.inf, False, 3)])
        assert text == "a,b,c\n0.1,true,x\ninf,false,3\n"


class TestCli:
    def test_invalid_config_writes_nothing(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["propagator-check", "--config", str(write(tmp_path, "d = 3\n")),
                     "--out", str(out)])
        assert code == 2
        assert not out.exists()
        assert "invalid config" in capsys.readouterr().err

    def test_unknown_key_exit(self, tmp_path):
        out = tmp_path / "out"
        assert main(["norms-audit", "--config", str(write(tmp_path, "dims = 1\n")),
                     "--out", str(out)]) == 2
        assert not out.exists()

    def test_missing_config(self, tmp_path):
        assert main(["norms-audit", "--config", str(tmp_path / "nope.toml")]) == 2

    def test_outputs_and_determinism(self, tmp_path, capsys):
        cfg = write(tmp_path, "d = 1\nN = 16\nseed = 7\n")
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        assert main(["propagator-check", "--config", str(cfg), "--out", str(a)]) == 0
        assert main(["propagator-check", "--config", str(cfg), "--out", str(b)]) == 0
        assert main(["propagator-check", "--config", str(cfg), "--out", str(c), "--seed", "8"]) == 0
        first = (a / "propagator-check.csv").read_bytes()
        assert first == (b / "propagator-check.csv").read_bytes()
        assert first != (c / "propagator-check.csv").read_bytes()
        summary = json.loads((a / "propagator-check.json").read_text())
        assert set(summary) == {"config", "results", "verdicts", "versions"}
        assert summary["config"]["seed"] == 7
        assert all(summary["verdicts"].values())
        assert "PASS propagator-check:identity" in capsys.readouterr().out
        assert not list(a.glob("*.tmp"))

    def test_output_key_used(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = write(tmp_path, 'd = 1\noutput = "here"\n')
        assert main(["propagator-check", "--config", str(cfg)]) == 0
        assert (tmp_path / "here" / "propagator-check.csv").exists()


class TestExperiments:
    def test_unsupported_mehler_path(self):
        res = run_experiment("propagator-check", {"beta": 0.5, "N": 12})
        assert res.passed
        assert any(r[1] == "unsupported-path" for r in res.rows)
        assert "unsupported-path" in res.results["mehler_note"]

    def test_sigma_column_critical_case(self):
        res = run_experiment("smoothing-sweep", {"d": 2, "beta": 1.0, "N": 8, "p": [1.0],
                                                 "q": [math.inf]})
        assert {r[6] for r in res.rows} == {1.0}
        assert res.results["ground_closed_form_error"] <= 1e-6

    def test_continuity_short(self):
        res = run_experiment("continuity", {"N": 32})
        assert res.passed
        finals = [r[-1] for r in res.rows if r[0] == 16]
        assert len(finals) == 3 and max(finals) < 1e-3

    def test_norms_audit(self):
        assert run_experiment("norms-audit", {}).passed

    def test_envelope_single(self):
        res = run_experiment("envelope-audit", {"p": 2.0, "r": 3.0, "d": 5, "beta": 1.0})
        assert res.passed
