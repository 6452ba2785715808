import json

import pytest

from fsgroup import operators
from fsgroup.cli import main
from fsgroup.config import ConfigError, ExperimentConfig, build_operator
from fsgroup.operators import IdentityCheck

from conftest import Z1


def _cfg(tmp_path, text):
    p = tmp_path / "exp.ini"
    p.write_text(text)
    return str(p)


def test_certify_example(tmp_path, capsys):
    cfg = _cfg(tmp_path, "[experiment]\ngroup = Z^N:1\n[operator]\npreset = 2I+L1\n[certify]\nwindow = 30\nperiod = 1\n")
    assert main(["certify", "--config", cfg]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["overall"] == "stable" and rep["window_radius"] == 30 and len(rep["paths"]) == 2


def test_identities_free_group(capsys):
    assert main(["identities", "--group", "F:2", "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["all_hold"] and rep["radius"] == 3
    omegas = {c["omega"] for c in rep["checks"] if c["check"] == "qlp"}
    assert omegas == {"e", "u1", "u1'", "u2", "u2'"}


def test_ball_dump(tmp_path, capsys):
    dump = tmp_path / "b.txt"
    assert main(["ball", "--group", "Z^N:2", "--nmax", "2", "--dump-set", str(dump)]) == 0
    out = capsys.readouterr().out
    assert len(out.splitlines()) == 13
    assert dump.read_text() == out


def test_false_identity_gives_exit_1(monkeypatch, capsys):
    def broken(w, A, amb):
        return IdentityCheck("qlp", False, 1.0, len(amb))

    monkeypatch.setattr(operators, "verify_qlp_identity", broken)
    assert main(["identities", "--group", "Z^N:1"]) == 1
    assert "identity violation" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["nonsense"])
    assert e.value.code == 2
    assert main(["scan", "--config", _cfg(tmp_path, "[thresholds]\nbogus = 1\n")]) == 2
    assert "bogus" in capsys.readouterr().err
    assert main(["scan", "--config", _cfg(tmp_path, "[thresholds]\ntau_stab = -1\n")]) == 2
    assert main(["scan", "--config", _cfg(tmp_path, "[nosuch]\na = 1\n")]) == 2
    assert main(["scan", "--config", _cfg(tmp_path, "[operator]\npreset = magic\n")]) == 2
    assert main(["scan", "--config", _cfg(tmp_path, "[sections]\nnmax = many\n")]) == 2
    assert main(["scan", "--group", "SL2"]) == 2
    assert main(["scan", "--config", str(tmp_path / "missing.ini")]) == 2


def test_scan_csv_and_determinism(tmp_path):
    cfg = _cfg(tmp_path, "[operator]\npreset = adjacency\n[sections]\nkind = interval\nnmax = 40\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["scan", "--config", cfg, "--out", str(a)]) == 0
    assert main(["scan", "--config", cfg, "--out", str(b)]) == 0
    text = (a / "scan.csv").read_text()
    assert text == (b / "scan.csv").read_text()
    lines = text.splitlines()
    assert lines[0] == "n,dim,norm,sigma_min,cond,verdict"
    assert len(lines) == 42


def test_scan_json_norm_reference(tmp_path, capsys):
    cfg = _cfg(tmp_path, "[sections]\nkind = interval\nnmax = 60\n[thresholds]\nreference_norm = 3\n")
    assert main(["scan", "--config", cfg, "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["verdict"] == "stable" and rep["norm_scan"]["gap"] >= 0 and rep["norm_scan"]["monotone"]
    cfg = _cfg(tmp_path, "[sections]\nkind = interval\nnmax = 10\n[thresholds]\nreference_norm = 2\n")
    assert main(["scan", "--config", cfg]) == 1


def test_section_dump_matrix(tmp_path):
    m = tmp_path / "m.txt"
    cfg = _cfg(tmp_path, "[operator]\nterms = (0):2; (1):1\n[sections]\nkind = interval\nnmax = 3\n")
    assert main(["section", "--config", cfg, "--dump-matrix", str(m), "--out", str(tmp_path / "o")]) == 0
    lines = m.read_text().splitlines()
    assert lines[0] == "4 7"


def test_boundary_extract_inflate(tmp_path, capsys):
    assert main(["boundary", "--group", "Z^N:2", "--nmax", "6"]) == 0
    capsys.readouterr()
    assert main(["extract", "--group", "Z^N:2"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["selected_prefixes"][:2] == ["(1,1)", "(2,2)"]
    cfg = _cfg(tmp_path, "[experiment]\ngroup = F:2\n[extract]\nmode = free\nsequence = free-example:40\nhorizon = 10\nwindow = 5\n")
    assert main(["extract", "--config", cfg]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["equal"] and rep["letters"] == ["u1'"] * 10
    cfg = _cfg(tmp_path, "[operator]\npreset = shift\n[sections]\nkind = interval\nnmax = 19\n")
    assert main(["inflate", "--config", cfg]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["agree"] and rep["pairwise_disjoint"] and rep["block_diagonal"]
    assert rep["scan_verdict"] == "unstable"


def test_config_roundtrip_and_presets():
    cfg = ExperimentConfig.from_text("[experiment]\ngroup = F:2\ngenerators = u1; u2\n[inflate]\nenlarged = yes\n")
    assert cfg.inflate.enlarged is True
    assert cfg.gens.user_supplied and len(cfg.gens) == 3
    assert dict(build_operator(Z1, "laplacian").terms) == {(0,): -2, (1,): 1, (-1,): 1}
    assert dict(build_operator(Z1, "2I+L1").terms) == {(0,): 2, (1,): 1}
    with pytest.raises(ConfigError):
        build_operator(Z1, "", "(1)")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("[inflate]\nenlarged = perhaps\n")
