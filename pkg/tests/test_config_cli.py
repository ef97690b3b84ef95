import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from gaussfold.cli import EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main
from gaussfold.circuit import GaussianCircuitSpec2
from gaussfold.config import ConfigError, load_config, parse_config
from gaussfold.passive import format_matrix, haar_random, parse_matrix
from gaussfold.phasespace import passive_symplectic, squeezing_layer
from gaussfold.verify import TOL_ENV

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def base_config(**changes):
    raw = {
        "circuit": {"modes": 2, "xi": 0.4, "transmissivities": [0.7], "U_A": "random:1", "U_B": "dft", "cutoff": 3},
        "prior": {"kind": "uniform_shell", "photons": 2},
        "sampler": {"burn_in": 20, "n_samples": 300, "master_seed": 5},
    }
    for section, value in changes.items():
        if value is None:
            raw.pop(section, None)
        elif section != "prior" and isinstance(value, dict) and section in raw:
            raw[section] = {**raw[section], **value}
        else:
            raw[section] = value
    return raw


def write_config(tmp_path, raw, name="exp.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw))
    return path


class TestConfig:
    @pytest.mark.parametrize("name", ["reference.yaml", "scattershot.yaml", "two_circuit.yaml"])
    def test_shipped_configs_load(self, name):
        cfg = load_config(CONFIGS / name)
        assert cfg.output is not None and cfg.output.is_absolute()

    def test_two_circuit_flattens(self):
        cfg = load_config(CONFIGS / "two_circuit.yaml")
        assert isinstance(cfg.circuit, GaussianCircuitSpec2)
        assert cfg.device_circuit.M == 4

    def test_matrix_file_relative_to_config(self, tmp_path):
        (tmp_path / "u.txt").write_text(format_matrix(haar_random(2, 9).matrix))
        cfg = parse_config(base_config(circuit={"U_B": "u.txt"}), tmp_path)
        assert np.allclose(cfg.circuit.U_B.matrix, haar_random(2, 9).matrix)

    @pytest.mark.parametrize(
        "changes, match",
        [
            ({"prior": None}, "prior"),
            ({"circuit": {"xi": 1.5}}, "squeezing"),
            ({"circuit": {"modes": 3}}, "even"),
            ({"circuit": {"U_A": "missing.txt"}}, "U_A"),
            ({"circuit": {"U_A": 7}}, "U_A"),
            ({"circuit": {"kind": "lattice"}}, "kind"),
            ({"circuit": {"colour": "red"}}, "unknown"),
            ({"prior": {"kind": "fixed", "m0": [1]}}, "m0"),
            ({"prior": {"kind": "zipf"}}, "prior.kind"),
            ({"sampler": {"n_chains": 0}}, "n_chains"),
            ({"sampler": {"burn_in": "many"}}, "sampler"),
            ({"extra": 1}, "unknown"),
        ],
    )
    def test_rejects(self, changes, match):
        with pytest.raises(ConfigError, match=match):
            parse_config(base_config(**changes))

    def test_not_a_mapping(self):
        with pytest.raises(ConfigError):
            parse_config([1, 2])

    def test_overrides_take_precedence(self):
        cfg = parse_config(base_config()).with_overrides(seed=9, cutoff=5, samples=10, burn_in=0, output="x")
        assert (cfg.sampler.master_seed, cfg.circuit.cutoff, cfg.sampler.n_samples, cfg.sampler.burn_in) == (9, 5, 10, 0)
        assert cfg.output == Path("x")
        kept = parse_config(base_config()).with_overrides()
        assert kept.sampler.master_seed == 5 and kept.circuit.cutoff == 3


class TestSimulate:
    def test_vacuum_only_when_xi_zero(self, tmp_path):
        cfg = write_config(tmp_path, base_config(circuit={"xi": 0.0}))
        assert main(["simulate", "--config", str(cfg), "--output", str(tmp_path / "out")]) == EXIT_OK
        lines = (tmp_path / "out" / "simulate.jsonl").read_text().splitlines()
        assert json.loads(lines[0])["record"] == "header"
        assert len(lines) == 2
        rec = json.loads(lines[1])
        assert rec["k"] == [0, 0] and rec["m"] == [0, 0] and rec["residual"] < 1e-15
        assert rec["p"] == 1.0

    def test_reports(self, tmp_path, capsys):
        cfg = write_config(tmp_path, base_config())
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(cfg), "--output", str(out)]) == EXIT_OK
        report = json.loads((out / "simulate_report.json").read_text())
        assert report["max_factorization_residual"] < 1e-12
        assert report["prefactors"]
        assert "prefactor table" in capsys.readouterr().out
        records = [json.loads(x) for x in (out / "simulate.jsonl").read_text().splitlines()[1:]]
        assert sum(r["target"] for r in records) == pytest.approx(1.0)
        assert all(r["residual"] is None for r in records if sum(r["k"]) + sum(r["m"]) > 6)

    def test_cutoff_flag(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        main(["simulate", "--config", str(cfg), "--cutoff", "1", "--output", str(tmp_path / "a")])
        lines = (tmp_path / "a" / "simulate.jsonl").read_text().splitlines()
        assert json.loads(lines[0])["config"]["cutoff"] == 1
        # two sources of at most one photon pair each
        assert max(sum(json.loads(x)["k"]) + sum(json.loads(x)["m"]) for x in lines[1:]) == 4

    def test_outcome_limit_is_runtime_error(self, tmp_path, capsys):
        raw = base_config(circuit={"modes": 4, "transmissivities": [0.6, 0.6], "cutoff": 6})
        cfg = write_config(tmp_path, raw)
        assert main(["simulate", "--config", str(cfg), "--output", str(tmp_path / "out")]) == EXIT_RUNTIME
        assert "limit" in capsys.readouterr().err
        assert not (tmp_path / "out").exists()


class TestSample:
    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        for name in ("a", "b"):
            assert main(["sample", "--config", str(cfg), "--output", str(tmp_path / name)]) == EXIT_OK
        for f in ("samples.jsonl", "sample_report.json", "sample_report.txt"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_seed_flag_changes_stream(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        main(["sample", "--config", str(cfg), "--output", str(tmp_path / "a")])
        main(["sample", "--config", str(cfg), "--seed", "6", "--output", str(tmp_path / "b")])
        assert (tmp_path / "a" / "samples.jsonl").read_text() != (tmp_path / "b" / "samples.jsonl").read_text()

    def test_flags(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        main(["sample", "--config", str(cfg), "--samples", "40", "--burn-in", "0", "--output", str(tmp_path / "a")])
        lines = (tmp_path / "a" / "samples.jsonl").read_text().splitlines()
        assert len(lines) == 41
        assert json.loads(lines[0])["config"]["sampler"]["n_samples"] == 40

    def test_scattershot_accepts_all_in_shell(self, tmp_path):
        out = tmp_path / "s"
        assert main(["sample", "--config", str(CONFIGS / "scattershot.yaml"), "--output", str(out)]) == EXIT_OK
        report = json.loads((out / "sample_report.json").read_text())
        assert report["in_support_proposals"] > 0
        assert report["in_support_acceptance_rate"] == 1.0

    def test_multiple_chains(self, tmp_path):
        cfg = write_config(tmp_path, base_config(sampler={"n_chains": 3, "n_samples": 50}))
        main(["sample", "--config", str(cfg), "--output", str(tmp_path / "a")])
        report = json.loads((tmp_path / "a" / "sample_report.json").read_text())
        assert [c["seed"] for c in report["chains"]] == ["5/0", "5/1", "5/2"]
        assert report["samples"] == 150

    def test_unreachable_prior_is_runtime_error(self, tmp_path):
        raw = base_config(prior={"kind": "fixed", "m0": [9, 9]}, sampler={"max_init_draws": 100})
        cfg = write_config(tmp_path, raw)
        assert main(["sample", "--config", str(cfg), "--output", str(tmp_path / "out")]) == EXIT_RUNTIME
        assert not (tmp_path / "out").exists()

    def test_invalid_config_writes_nothing(self, tmp_path):
        cfg = write_config(tmp_path, base_config(circuit={"xi": -0.2}))
        assert main(["sample", "--config", str(cfg), "--output", str(tmp_path / "out")]) == EXIT_INVALID
        assert not (tmp_path / "out").exists()

    def test_missing_config_file(self, tmp_path):
        assert main(["sample", "--config", str(tmp_path / "none.yaml")]) == EXIT_INVALID


class TestVerify:
    def test_selected_suites(self, tmp_path):
        out = tmp_path / "v"
        assert main(["verify", "--suite", "hafnian,sandwich", "--suite", "conservation", "--output", str(out)]) == EXIT_OK
        report = json.loads((out / "verify_report.json").read_text())
        assert report["all_passed"]
        assert {c["check"].split("/")[0] for c in report["checks"]} == {"hafnian", "sandwich", "conservation"}

    def test_tolerance_override_fails(self, monkeypatch):
        monkeypatch.setenv(TOL_ENV, "sandwich=1e-300")
        assert main(["verify", "--suite", "sandwich"]) == EXIT_CHECK_FAILED

    def test_unknown_suite(self, capsys):
        assert main(["verify", "--suite", "nope"]) == EXIT_INVALID
        assert "unknown" in capsys.readouterr().err


class TestDecompose:
    def test_single_squeezer(self, tmp_path):
        path = tmp_path / "s.txt"
        path.write_text(format_matrix(squeezing_layer([0.7]).matrix))
        out = tmp_path / "d"
        assert main(["decompose", str(path), "--output", str(out)]) == EXIT_OK
        report = json.loads((out / "decompose_report.json").read_text())
        assert report["r_list"] == pytest.approx([0.7])
        assert report["reconstruction_residual"] < 1e-12
        assert parse_matrix((out / "S1.txt").read_text()).shape == (2, 2)

    def test_passive_has_zero_degrees(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text(format_matrix(passive_symplectic(haar_random(2, 1)).matrix))
        out = tmp_path / "d"
        assert main(["decompose", str(path), "--output", str(out)]) == EXIT_OK
        assert json.loads((out / "decompose_report.json").read_text())["r_list"] == pytest.approx([0, 0], abs=1e-12)

    @pytest.mark.parametrize(
        "text",
        ["2\n1,0 0,0\n0,0 2,0\n", "3\n1,0 0,0 0,0\n0,0 1,0 0,0\n0,0 0,0 1,0\n", "2\n1,0 0,0\n", "abc\n", ""],
    )
    def test_rejects_bad_matrices(self, tmp_path, text):
        path = tmp_path / "m.txt"
        path.write_text(text)
        assert main(["decompose", str(path), "--output", str(tmp_path / "d")]) == EXIT_INVALID
        assert not (tmp_path / "d").exists()


def test_parser_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["sample"])
    assert exc.value.code == 2
