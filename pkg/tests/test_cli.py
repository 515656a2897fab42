import json
import math

import numpy as np
import pytest
import yaml

from chemotaxis_lab.cli import Flags, TableReport, dump_defaults, emit_report, loads_config, run_command
from chemotaxis_lab.cli.commands import OUT_ENV, output_root, sweep_members
from chemotaxis_lab.cli.config import DEFAULTS
from chemotaxis_lab.cli.main import main
from chemotaxis_lab.errors import ParseError, ValidationError
from chemotaxis_lab.spectral_core.grid import Field, GridSpec, save_field

FAST_VERIFY = "checks:\n  corpus_sizes:\n    duhamel: 2\n"


def problems_of(text):
    with pytest.raises(ValidationError) as info:
        loads_config(text)
    return info.value.problems


class TestConfig:
    def test_empty_file_gives_defaults(self):
        cfg = loads_config("")
        assert cfg.data == DEFAULTS
        assert cfg.digest() == loads_config("{}").digest()

    def test_defaults_dump_roundtrips(self):
        assert yaml.safe_load(dump_defaults()) == DEFAULTS
        loads_config(dump_defaults())

    def test_r_range_with_line(self):
        probs = problems_of("grid:\n  d: 2\nconstruction:\n  r: 2\n")
        assert any(p.startswith("line 4: construction.r:") and "1 <= r < d" in p.replace("≤", "<=")
                   for p in probs)

    def test_unknown_key_with_line(self):
        probs = problems_of("construction:\n  m: 7\n  bogus: 1\n")
        assert any(p.startswith("line 3: construction.bogus: unknown key") for p in probs)

    def test_beta_violation_names_inequality(self):
        probs = problems_of("construction:\n  beta: 1.5\n")
        assert any("line 2" in p and "2^m" in p for p in probs)

    def test_collects_every_problem(self):
        assert len(problems_of("construction:\n  r: 2\n  bogus: 1\nsolver:\n  integrator: euler\n")) >= 3

    def test_bad_yaml(self):
        with pytest.raises(ParseError):
            loads_config("grid: [1\n")
        with pytest.raises(ParseError):
            loads_config("- 1\n- 2\n")

    def test_count_sweep_members(self):
        cfg = loads_config("construction:\n  m: 9\n  count_sweep: [1, 2, 3]\n"
                           "grid:\n  points_per_axis: 2048\n")
        Ks = [mem.params.K for mem in sweep_members(cfg)]
        assert Ks == [(7,), (6, 7), (5, 6, 7)]


class TestEmit:
    def report(self):
        return TableReport("demo", [{"a": 1, "b": 0.1}, {"a": 2, "c": "x"}], {"k": math.inf},
                           {"b vs a": ([1, 2], [0.1, 0.2])})

    def test_csv_union_of_columns(self):
        assert self.report().to_csv() == "a,b,c\n1,0.1,\n2,,x\n"

    def test_rerun_is_byte_identical(self, tmp_path):
        a = emit_report(self.report(), ("csv", "json"), tmp_path / "a", {"seed": 1})
        b = emit_report(self.report(), ("csv", "json"), tmp_path / "b", {"seed": 1})
        assert [p.name for p in a] == [p.name for p in b]
        for pa, pb in zip(a, b):
            assert pa.read_bytes() == pb.read_bytes()
        names = {p.name for p in a}
        assert {"report.csv", "report.json", "summary.json", "manifest.json"} <= names

    def test_format_selection(self, tmp_path):
        files = emit_report(self.report(), ("json",), tmp_path, None)
        assert "report.csv" not in {p.name for p in files}


class TestOutputRoot:
    def test_precedence(self, monkeypatch, tmp_path):
        cfg = loads_config("")
        monkeypatch.delenv(OUT_ENV, raising=False)
        assert str(output_root(cfg, Flags())) == DEFAULTS["output"]["directory"]
        monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
        assert output_root(cfg, Flags()) == tmp_path / "env"
        assert output_root(cfg, Flags(out=str(tmp_path / "flag"))) == tmp_path / "flag"


class TestMain:
    def test_defaults_command(self, capsys):
        assert main(["defaults"]) == 0
        assert yaml.safe_load(capsys.readouterr().out) == DEFAULTS

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("construction:\n  r: 2\n")
        assert main(["construct", "--config", str(path), "--out", str(tmp_path)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_parse_error_exit_code(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("grid: [1\n")
        assert main(["construct", "--config", str(path)]) == 2

    def test_missing_config_is_runtime_error(self, tmp_path):
        assert main(["construct", "--config", str(tmp_path / "nope.yaml")]) == 3

    def test_unknown_check_id(self, tmp_path):
        assert main(["verify", "nope", "--out", str(tmp_path)]) == 2

    def test_norm_of_zero_field(self, tmp_path):
        src = tmp_path / "zero.npz"
        save_field(src, Field.zeros(GridSpec(2, 32, 2 * math.pi)))
        assert main(["norm", "--input", str(src), "--out", str(tmp_path), "--format", "json"]) == 0
        rows = json.loads((tmp_path / "norm" / "report.json").read_text())
        assert len(rows) == 5
        assert all(float(r["value"]) == 0.0 for r in rows)

    def test_verify_writes_report_and_manifest(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(FAST_VERIFY)
        rc = main(["verify", "duhamel", "--config", str(cfg), "--out", str(tmp_path), "--seed", "4"])
        assert rc == 0
        assert "duhamel: pass" in capsys.readouterr().out
        out = tmp_path / "verify" / "duhamel"
        assert (out / "report.csv").read_text().startswith("check_id,index,params,lhs,rhs,slack")
        man = json.loads((out / "manifest.json").read_text())
        assert man["seed"] == 4
        assert man["config_sha256"] == loads_config(FAST_VERIFY).digest()
        assert {"numpy", "scipy", "python"} <= set(man["versions"])

    def test_construct_and_decompose(self, tmp_path):
        assert main(["construct", "--out", str(tmp_path)]) == 0
        u0 = tmp_path / "construct" / "fields" / "u0.npz"
        assert u0.exists()
        assert main(["decompose", "--input", str(u0), "--out", str(tmp_path),
                     "--format", "json"]) == 0
        rows = json.loads((tmp_path / "decompose" / "report.json").read_text())
        top = max(rows, key=lambda r: float(r["mass_fraction"]))
        assert int(top["shell"]) == DEFAULTS["construction"]["m"]
        assert float(top["mass_fraction"]) == pytest.approx(1.0, abs=1e-12)

    def test_run_command_status(self, tmp_path):
        cfg = loads_config(FAST_VERIFY)
        res = run_command("verify", cfg, Flags(out=str(tmp_path), check_id="duhamel"))
        assert res.status == 0 and res.reports[0].passed
        assert np.all([p.exists() for p in res.files])
