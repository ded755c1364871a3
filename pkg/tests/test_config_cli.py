"""Run configuration parsing and the command-line surface."""

import json
import subprocess
import sys

import pytest

from lowmach.cli import OUTPUT_ROOT_ENV, run_command
from lowmach.config import (
    EXPERIMENTS,
    ConfigError,
    apply_overrides,
    defaults_for,
    parse_config,
    parse_override_value,
    validate,
)


def errors_of(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.errors


class TestParseConfig:
    def test_minimal_config_gets_defaults(self):
        cfg = parse_config('{"experiment": "simulate"}')
        assert cfg.grid.d == 2 and cfg.grid.n == 32
        assert cfg.params.eps == (0.1,)
        assert cfg.stepper.adaptive is True
        assert cfg.coefficients().name == "perfect-gas"

    def test_empty_object_defaults_to_simulate(self):
        assert parse_config("{}").experiment == "simulate"

    def test_experiment_defaults_mirror_drivers(self):
        cfg = parse_config('{"experiment": "sweep"}')
        assert cfg.grid.n == 64
        assert cfg.params.eps == (0.5, 0.25, 0.125, 0.0625)

    def test_eps_zero_reported_at_its_path(self):
        errs = errors_of('{"params": {"eps": [0.5, 0]}}')
        assert errs == ["params.eps[1]: 0 violates eps in (0, 1]"]

    def test_all_errors_are_collected(self):
        text = json.dumps(
            {
                "grid": {"n": 7, "d": 4},
                "params": {"eps": [2.0], "mu": [-1]},
                "stepper": {"scheme": "euler", "dt": 0},
                "data": {"seed": -3},
                "output": {"formats": ["pdf"]},
            }
        )
        errs = errors_of(text)
        paths = [e.split(":")[0] for e in errs]
        for path in (
            "grid.d", "grid.n", "params.eps[0]", "params.mu[0]", "stepper.scheme", "stepper.dt", "data.seed",
            "output.formats",
        ):
            assert path in paths, (path, errs)

    def test_unknown_experiment_lists_names(self):
        errs = errors_of('{"experiment": "warp-drive"}')
        assert len(errs) == 1
        assert errs[0].startswith("experiment: unknown name 'warp-drive'; available:")
        for name in EXPERIMENTS:
            assert name in errs[0]

    def test_syntax_error_has_line_and_column(self):
        errs = errors_of('{\n  "grid": {"n": 32,}\n}')
        assert errs == ["syntax error at line 2, column 20: Expecting property name enclosed in double quotes"]

    def test_unknown_keys(self):
        errs = errors_of('{"grid": {"nx": 4}, "extras": {}}')
        assert errs[0].startswith("extras: unknown section")
        errs = errors_of('{"grid": {"nx": 4}}')
        assert errs[0].startswith("grid.nx:")

    def test_band_beyond_dealiased_range(self):
        errs = errors_of('{"grid": {"n": 16}, "data": {"band": 6}}')
        assert errs == ["data.band: 6.0 exceeds the dealiased band n/3 = 5.33333"]

    def test_options_checked_against_driver(self):
        assert parse_config('{"experiment": "example42", "options": {"beta": 3}}').options == {"beta": 3}
        errs = errors_of('{"experiment": "example42", "options": {"gamma": 3}}')
        assert errs[0].startswith("options.gamma: unknown option for example42")
        errs = errors_of('{"experiment": "sweep", "options": {"beta": 3}}')
        assert errs == ["options: sweep takes no options"]

    def test_material_law_error(self):
        errs = errors_of('{"model": {"k": {"law": "cubic"}}}')
        assert errs == ["model.k: unknown material law 'cubic'; expected 'constant' or 'power'"]

    def test_non_object_root(self):
        with pytest.raises(ConfigError, match="expected a JSON object"):
            validate([1, 2])

    @pytest.mark.parametrize("name", EXPERIMENTS)
    def test_echo_is_a_fixed_point(self, name):
        """Validating the echo of a validated config gives the same config."""
        cfg = validate({"experiment": name})
        assert validate(cfg.to_dict()) == cfg
        assert validate(json.loads(json.dumps(cfg.to_dict()))).to_dict() == cfg.to_dict()

    def test_defaults_are_copies(self):
        d = defaults_for("sweep")
        d["grid"]["n"] = 8
        assert defaults_for("sweep")["grid"]["n"] == 64


class TestOverrides:
    def test_value_parsing(self):
        assert parse_override_value("3") == 3
        assert parse_override_value("true") is True
        assert parse_override_value("results/x") == "results/x"

    def test_comma_list(self):
        raw = apply_overrides({}, [("params.eps", "0.5,0.25")])
        assert raw == {"params": {"eps": [0.5, 0.25]}}

    def test_scalar_for_list_key_becomes_list(self):
        cfg = validate(apply_overrides({}, [("params.mu", "0.5")]))
        assert cfg.params.mu == (0.5,)

    def test_bad_path(self):
        with pytest.raises(ConfigError, match="section.key"):
            apply_overrides({}, [("seed", "1")])


class TestRunCommand:
    @pytest.fixture(autouse=True)
    def output_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
        self.root = tmp_path

    def test_no_arguments(self, capsys):
        assert run_command([]) == 2
        assert "usage" in capsys.readouterr().err

    def test_help(self):
        assert run_command(["--help"]) == 0

    def test_unknown_subcommand(self):
        assert run_command(["teleport"]) == 2

    def test_validate_model(self, capsys):
        assert run_command(["validate-model", "--preset", "perfect-gas"]) == 0
        out = capsys.readouterr().out
        assert "A3 chi1 < chi3" in out and "compat dS/dth = g3" in out
        assert out.rstrip().endswith("validate-model: PASS")
        assert (self.root / "results" / "validate_summary.json").exists()

    def test_unknown_preset(self, capsys):
        assert run_command(["validate-model", "--preset", "ideal"]) == 2
        assert "model.preset" in capsys.readouterr().err

    def test_config_errors_all_reported(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"params": {"eps": [0]}, "grid": {"n": 3}}')
        assert run_command(["simulate", "--config", str(path)]) == 2
        err = capsys.readouterr().err
        assert "params.eps[0]" in err and "grid.n" in err

    def test_config_syntax_error(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{\n\n  oops\n}")
        assert run_command(["simulate", "--config", str(path)]) == 2
        assert "syntax error at line 3, column 3" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert run_command(["simulate", "--config", str(tmp_path / "none.json")]) == 2
        assert "cannot read" in capsys.readouterr().err

    def test_mismatched_experiment(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text('{"experiment": "sweep"}')
        assert run_command(["simulate", "--config", str(path)]) == 2
        assert "subcommand is 'simulate'" in capsys.readouterr().err

    def test_override_without_value(self, capsys):
        assert run_command(["simulate", "--grid.n"]) == 2
        assert "grid.n: missing value" in capsys.readouterr().err

    def test_simulate_writes_outputs_under_root(self, capsys):
        argv = ["simulate", "--n", "16", "--data.t_end", "0.02", "--output", "run", "--quiet"]
        assert run_command(argv) == 0
        assert capsys.readouterr().out.strip() == "simulate: PASS"
        names = sorted(p.name for p in (self.root / "run").iterdir())
        assert "simulate_norms.csv" in names and "simulate_summary.json" in names

    def test_echo_reproduces_the_run(self, tmp_path):
        """Feeding the JSON config echo back yields byte-identical tables."""
        argv = ["simulate", "--n", "16", "--data.t_end", "0.02", "--params.eps", "0.3", "--output", "a"]
        assert run_command(argv) == 0
        first = (self.root / "a" / "simulate_norms.csv").read_bytes()
        echo = json.loads((self.root / "a" / "simulate_summary.json").read_text())["config"]
        echo["output"]["directory"] = "b"
        path = tmp_path / "echo.json"
        path.write_text(json.dumps(echo))
        assert run_command(["simulate", "--config", str(path)]) == 0
        assert (self.root / "b" / "simulate_norms.csv").read_bytes() == first

    def test_verify_operators_passes(self, capsys):
        assert run_command(["verify-operators", "--seed", "1", "--n", "32", "--options.slope_points", "1024"]) == 0
        assert capsys.readouterr().out.rstrip().endswith("verify-operators: PASS")

    def test_console_script_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-c", "from lowmach.cli import main; main()"], capture_output=True, text=True
        )
        assert proc.returncode == 2
