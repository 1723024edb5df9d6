import json
from pathlib import Path

import pytest

from boundarylab import cli
from boundarylab.errors import DomainError


def test_dim_csv_contract(tmp_path):
    rc = cli.main(["dim", "--out", str(tmp_path)])
    assert rc == 0
    text = (tmp_path / "dim.csv").read_text()
    lines = text.strip().splitlines()
    assert lines[0] == "p,q,dimension,base"
    fields = lines[1].split(",")
    assert fields[0] == "5" and fields[1] == "3"
    assert abs(float(fields[2]) - 1.7202098) < 1e-6
    assert abs(float(fields[3]) - 2.6180340) < 1e-6
    assert lines[-1].startswith("# p=5,q=3,Q=")
    assert "seed=42" in lines[-1] and "version=" in lines[-1]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["checks"][0]["check"] == "dim"
    assert summary["checks"][0]["status"] == "pass"


def test_reruns_are_byte_identical(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert cli.main(["polygon", "--out", str(out1)]) == 0
    assert cli.main(["polygon", "--out", str(out2)]) == 0
    assert (out1 / "polygon.csv").read_bytes() == (out2 / "polygon.csv").read_bytes()
    assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()


def test_config_file_roundtrip(tmp_path):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({"p": 6, "q": 4, "seed": 7}))
    assert cli.main(["dim", "--config", str(cfg_path), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "dim.csv").read_text().strip().splitlines()
    fields = lines[1].split(",")
    assert fields[0] == "6" and fields[1] == "4"
    assert abs(float(fields[2]) - 1.8342046) < 1e-6
    assert "seed=7" in lines[-1]


def test_seed_override(tmp_path):
    assert cli.main(["dim", "--out", str(tmp_path), "--seed", "11"]) == 0
    lines = (tmp_path / "dim.csv").read_text().strip().splitlines()
    assert "seed=11" in lines[-1]


def test_unknown_config_key_rejected(tmp_path):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({"p": 6, "q": 3, "bogus": 1}))
    with pytest.raises(DomainError):
        cli.RunConfig.from_file(cfg_path)


def test_invalid_config_values_rejected():
    with pytest.raises(DomainError):
        cli.RunConfig(p=4, q=3)
    with pytest.raises(DomainError):
        cli.RunConfig(p=5, q=3, modulus_tol=0.0)


def test_unknown_subcommand_rejected():
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])


def test_identity_subcommand_small(tmp_path):
    cfg = cli.RunConfig(p=6, q=3, output_dir=str(tmp_path))
    lab = cli.Lab(cfg)
    res = cli.run_identity(lab, tmp_path, n_triples=25, horizon=20.0)
    assert res.status == "pass"
    assert res.key_values["violations"] == 0
    text = (tmp_path / "identity.csv").read_text().strip().splitlines()
    assert any(line.startswith("violations,0") for line in text)


def test_lemma5_subcommand_small(tmp_path):
    cfg = cli.RunConfig(p=6, q=3, output_dir=str(tmp_path))
    lab = cli.Lab(cfg)
    res = cli.run_lemma5(lab, tmp_path, n_functions=500)
    assert res.status == "pass"
    assert res.key_values["violations"] == 0
