import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from detform.cli import (CONFIG_SCHEMA, SHARPNESS_HEADER, ConfigError, config_hash, main,
                         normalize_config, strip_volatile)


def read_records(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def test_schema_is_valid_draft():
    jsonschema.Draft202012Validator.check_schema(CONFIG_SCHEMA)


@pytest.mark.parametrize("bad", [
    {"command": "eval", "bogus": 1},
    {"command": "eval", "quadrature": {"rel_tol": 1e-3, "nope": 2}},
    {"command": "explode"},
    {"command": "eval", "route": "sideways"},
    {"command": "eval", "triple": {"name": "golden", "colour": "red"}},
])
def test_unknown_keys_rejected(bad):
    with pytest.raises(ConfigError):
        normalize_config(bad)


def test_hash_deterministic_and_ignores_output():
    a = normalize_config({"command": "eval", "route": "frequency"})
    b = normalize_config({"route": "frequency", "command": "eval", "output": "x.jsonl"})
    assert config_hash(a) == config_hash(b)
    c = normalize_config({"command": "eval", "route": "direct"})
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 16


def test_defaults_fill_nested_sections():
    cfg = normalize_config({"command": "sharpness", "sharpness": {"N": 12}})
    assert cfg["sharpness"]["N"] == 12 and cfg["sharpness"]["p"] == 2.0


def test_eval_record(tmp_path):
    out = tmp_path / "r.jsonl"
    assert main(["eval", "--route", "direct", "--triple", "golden", "--rel-tol", "1e-3", "-o", str(out)]) == 0
    (rec,) = read_records(out)
    assert rec["route"] == "direct"
    for key in ("timestamp", "config_hash", "value", "error_estimate", "runtime", "diagnostics"):
        assert key in rec
    assert len(rec["value"]) == 2
    assert rec["value"][0] == pytest.approx(0.149261083278, rel=1e-3)


def test_env_var_config(tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "eval", "route": "frequency", "quadrature": {"rel_tol": 1e-3}}))
    monkeypatch.setenv("DETFORM_CONFIG", str(cfg))
    out = tmp_path / "r.jsonl"
    assert main(["eval", "-o", str(out)]) == 0
    assert read_records(out)[0]["route"] == "frequency"


def test_config_command_mismatch(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "sharpness"}))
    assert main(["eval", "--config", str(cfg)]) == 2
    assert "does not match" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "eval", "extra": True}))
    assert main(["eval", "--config", str(cfg)]) == 2
    assert "config invalid" in capsys.readouterr().err


def test_permutation_check(tmp_path):
    out = tmp_path / "r.jsonl"
    code = main(["check", "--symmetry", "permutations", "--triple", "golden", "--rel-tol", "1e-4",
                 "-o", str(out)])
    recs = read_records(out)
    assert code == 0
    assert len(recs) == 6 and all(r["pass"] for r in recs)


def test_failed_certificate_exit_code(tmp_path):
    out = tmp_path / "r.jsonl"
    assert main(["certificate", "--exponents", "2", "4", "4", "--rel-tol", "1e-4", "-o", str(out)]) == 1
    assert read_records(out)[0]["pass"] is False


def test_sharpness_csv(tmp_path):
    out, table = tmp_path / "r.jsonl", tmp_path / "s.csv"
    assert main(["sharpness", "--p", "2", "--q", "4", "--r", "4", "--N", "14", "-o", str(out),
                 "--csv", str(table)]) == 0
    with open(table) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SHARPNESS_HEADER
    body = rows[1:]
    assert [int(r[0]) for r in body] == [10, 11, 12, 13, 14]
    ratios = [float(r[3]) for r in body]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert len(read_records(out)) == 5


def test_determinism(tmp_path):
    args = ["eval", "--route", "fiberwise", "--triple", "random", "--triple-seed", "3", "--rel-tol", "1e-3"]
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(args + ["-o", str(a)]) == 0
    assert main(args + ["-o", str(b)]) == 0
    ra, rb = read_records(a), read_records(b)
    assert [strip_volatile(r) for r in ra] == [strip_volatile(r) for r in rb]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "detform", "schema"], capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["additionalProperties"] is False
