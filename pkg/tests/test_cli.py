import json
import subprocess
import sys

import pytest

from adveig.cli import COMMANDS, main
from adveig.operator import PecletWarning


def write(tmp_path, text, name="p.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.fixture
def p1(tmp_path):
    return write(tmp_path, '[problem]\npreset = "P1"\n[domain]\nnx = 129\n')


@pytest.fixture
def p3(tmp_path):
    return write(tmp_path, '[problem]\npreset = "P3"\n[domain]\nnx = 33\nny = 33\n', "p3.ini")


def run(*argv):
    return main([str(a) for a in argv])


def test_solve_writes_outputs(p1, tmp_path, capsys):
    out = tmp_path / "o"
    assert run("solve", "-c", p1, "--out", out, "--A", 2, "--dump-matrix") == 0
    for f in ("eig.json", "u.csv", "v.csv", "operator.mtx", "adjoint.mtx"):
        assert (out / f).exists(), f
    body = json.loads((out / "eig.json").read_text())
    assert body["pass"] is True and body["A"] == 2.0
    assert "output" not in body["config"]
    assert "lambda = 10.86" in capsys.readouterr().out


@pytest.mark.parametrize(
    "command, files",
    [
        ("sweep", ["sweep.json", "sweep.csv"]),
        ("minmax", ["minmax.json"]),
        ("bound", ["bound.json"]),
        ("limit", ["limit.json", "limit.csv"]),
        ("verify", ["verify.json"]),
    ],
)
def test_commands_are_byte_identical(command, files, p3, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = [command, "-c", p3, "--A", 4]
    if command == "verify":
        # a finer grid keeps the decomposition residual within tolerance
        argv += ["--nx", 65, "--ny", 65]
    codes = [run(*argv, "--out", a), run(*argv, "--out", b)]
    assert codes[0] == codes[1]
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_counterexample_and_gradflow(tmp_path):
    ce = write(tmp_path, '[problem]\npreset = "P5"\n[domain]\nnx = 1025\n[amplitudes]\nvalues = [0, 5, 20, 80]\n')
    assert run("counterexample", "-c", ce, "--out", tmp_path / "ce") == 0
    rows = (tmp_path / "ce" / "counterexample.csv").read_text().splitlines()
    assert rows[0] == "A,lambda" and len(rows) == 5
    g = write(tmp_path, '[problem]\npreset = "G2"\n', "g.ini")
    assert run("gradflow", "-c", g, "--out", tmp_path / "g") == 0


def test_exit_codes(p1, tmp_path, capsys):
    out = tmp_path / "o"
    assert run("solve", "-c", tmp_path / "missing.ini", "--out", out) == 1
    assert "config not found" in capsys.readouterr().err
    bad = write(tmp_path, "[solver]\nspeed = 3\n", "bad.ini")
    assert run("solve", "-c", bad, "--out", out) == 1
    assert "line 2" in capsys.readouterr().err
    assert run("explode", "-c", p1) == 1
    assert run("solve") == 1
    # a precondition failure: the counterexample grid does not resolve the layer
    ce = write(tmp_path, '[problem]\npreset = "P5"\n[domain]\nnx = 65\n', "ce.ini")
    assert run("counterexample", "-c", ce, "--out", out) == 1
    # an unresolved boundary layer makes the eigen solver give up
    hard = write(tmp_path, '[domain]\nnx = 9\n[bc]\nb = 1\n[flow]\nkind = "constant"\nvector = [1]\n[amplitudes]\nA = 20\n', "h.ini")
    with pytest.warns(PecletWarning):
        assert run("solve", "-c", hard, "--out", out) == 2


def test_failed_check_exits_2(tmp_path):
    # the decomposition residual on a coarse grid exceeds the default tolerance
    cfg = write(tmp_path, '[problem]\npreset = "P3"\n[domain]\nnx = 33\nny = 33\n[analysis]\nt = 0.3\n')
    assert run("verify", "-c", cfg, "--out", tmp_path / "o", "--A", 4) == 2
    body = json.loads((tmp_path / "o" / "verify.json").read_text())
    assert body["pass"] is False
    failed = [r["check"] for r in body["records"] if not r["pass"]]
    assert "decomposition" in failed


def test_console_script(p1, tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "adveig.cli", "solve", "-c", p1, "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
    assert res.stdout.strip().endswith("PASS")


def test_command_table():
    assert sorted(COMMANDS) == ["bound", "counterexample", "gradflow", "limit", "minmax", "solve", "sweep", "verify"]
