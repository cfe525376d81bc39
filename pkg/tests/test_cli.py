import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from pellrep import __version__, reduction, search
from pellrep.cli import dispatch
from pellrep.numerics import CertificationError

GOLDEN = Path(__file__).parent / "golden" / "verify_k10_n100.json"


def run(capsys, *argv):
    code = dispatch(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_seq(capsys):
    code, out, _ = run(capsys, "seq", "--k", "3", "--n", "7")
    assert code == 0 and out.strip() == "662"
    code, out, _ = run(capsys, "seq", "--k", "2", "--count", "5", "--format", "csv")
    assert out.splitlines() == ["k,n,value", "2,1,2", "2,2,6", "2,3,14", "2,4,34", "2,5,82"]


def test_seq_json_uses_strings(capsys):
    code, out, _ = run(capsys, "seq", "--k", "4", "--n", "300", "--json")
    d = json.loads(out)
    assert isinstance(d["result"]["terms"][0]["value"], str)
    assert d["tool_version"] == __version__


def test_digits(capsys):
    assert run(capsys, "digits", "--check", "662")[0] == 0
    assert run(capsys, "digits", "--check", "754")[0] == 1


def test_root(capsys):
    code, out, _ = run(capsys, "root", "--k", "2", "--digits", "20")
    assert code == 0 and out.startswith("2.414213562373095048")


def test_bound(capsys):
    code, out, _ = run(capsys, "bound", "--stage", "lemma31", "--k", "550")
    assert code == 0 and Fraction(out.strip()) < Fraction("1.13e56")
    code, out, _ = run(capsys, "bound", "--stage", "lambda1", "--k", "10", "--n", "50", "--json")
    assert code == 0 and json.loads(out)["result"]["ok"]


def test_verify_matches_golden(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "verify", "--kmax", "10", "--nmax", "100", "--json", str(out))
    assert code == 0
    assert "2288" in err
    got = json.loads(out.read_text())
    golden = json.loads(GOLDEN.read_text())
    got_sols = [{k: s[k] for k in ("k", "n", "value")} for s in got["result"]["solutions"]]
    assert got_sols == golden["solutions"]
    assert got["result"]["agrees"]


def test_json_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "verify", "--kmax", "6", "--nmax", "40", "--json", str(a))
    run(capsys, "verify", "--kmax", "6", "--nmax", "40", "--json", str(b))
    assert a.read_bytes() == b.read_bytes()
    d = json.loads(a.read_text())
    for key in ("tool_version", "precision_bits", "config_hash"):
        assert key in d


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# desk run\nkmax = 4\nnmax=30\n")
    out = tmp_path / "r.json"
    code, _, _ = run(capsys, "--config", str(cfg), "verify", "--json", str(out))
    d = json.loads(out.read_text())
    assert code == 0 and d["result"]["ranges"]["k_max"] == 4 and d["result"]["ranges"]["n_max"] == 30
    bad = tmp_path / "bad.cfg"
    bad.write_text("kmax 4\n")
    assert run(capsys, "--config", str(bad), "verify")[0] == 2


def test_precision(monkeypatch, capsys):
    monkeypatch.setenv("PRECISION_BITS", "400")
    code, out, _ = run(capsys, "seq", "--k", "3", "--n", "2", "--json")
    assert json.loads(out)["precision_bits"] == 400
    assert run(capsys, "--precision", "64", "seq", "--k", "3", "--n", "2")[0] == 2


@pytest.mark.parametrize("argv", [["seq", "--bogus"], ["nope"], ["seq", "--k", "3"],
                                  ["bound", "--stage", "x"], ["verify", "--kmax", "1"]])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_certification_failure_exit(monkeypatch, capsys):
    def boom(*a, **k):
        raise CertificationError("undecided")
    monkeypatch.setattr(search, "verify_theorem", boom)
    assert run(capsys, "verify", "--kmax", "3", "--nmax", "10")[0] == 3


def test_reduce_single(tmp_path, capsys):
    cert = tmp_path / "c.json"
    code, out, _ = run(capsys, "reduce", "--instance", "gamma3", "--a", "2", "--json",
                       "--certificate", str(cert))
    assert code == 0
    d = json.loads(out)
    assert float(d["result"]["bound"]) <= 750
    assert json.loads(cert.read_text()) == d
    for key in ("label", "tau", "mu", "q", "epsilon", "bound", "precision_bits"):
        assert key in d["result"]


def test_reduce_chain_wiring(monkeypatch, tmp_path, capsys):
    def fake_chain(k_values, gamma2, workers, progress, record_all):
        progress("stage i: fake")
        rep = reduction.ChainReport()
        rep.stages.append(reduction.StageReport("i", "fake", result={"w_bound": "1"}))
        return rep
    monkeypatch.setattr(reduction, "reduce_chain", fake_chain)
    cert = tmp_path / "chain.json"
    code, out, err = run(capsys, "reduce", "--instance", "chain", "--certificate", str(cert))
    assert code == 0 and "stage i" in err and "stage i: ok" in out
    assert json.loads(cert.read_text())["result"]["stages"][0]["name"] == "i"


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "pellrep", "seq", "--k", "3", "--n", "7"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "662"
