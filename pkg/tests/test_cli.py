import json
import subprocess
import sys

import pytest

from umtp import cli
from umtp.core import RootedNetwork, dumps
from umtp.gen import path_graph

P = "0:0.2,1:0.3,2:0.5"


def _run(capsys, *argv):
    code = cli.run(list(argv) + ["--workers", "1"])
    out, err = capsys.readouterr()
    return code, out, err


def test_no_command_is_usage_error(capsys):
    assert cli.run([]) == cli.EXIT_ERROR


def test_unknown_option(capsys):
    code, _, err = _run(capsys, "sample", "--bogus")
    assert code == cli.EXIT_ERROR and "bogus" in err


def test_bad_offspring_names_flag(capsys):
    code, _, err = _run(capsys, "sample", "--sampler", "ugw", "--p", "nonsense")
    assert code == cli.EXIT_ERROR and "--p" in err


def test_sample_report_fields(capsys):
    code, out, _ = _run(capsys, "sample", "--sampler", "ugw", "--p", P, "--radius", "2",
                        "--n", "3", "--seed", "5")
    assert code == cli.EXIT_OK
    rep = json.loads(out)
    assert set(rep) == {"command", "config", "version", "prng", "result"}
    assert rep["config"]["seed"] == 5


def test_sample_deterministic(capsys):
    args = ("sample", "--sampler", "canopy", "--radius", "3", "--n", "4", "--seed", "9")
    assert _run(capsys, *args)[1] == _run(capsys, *args)[1]


def test_seed_from_environment(capsys, monkeypatch):
    base = ("sample", "--sampler", "line", "--radius", "2", "--n", "2")
    monkeypatch.setenv("UMTP_SEED", "11")
    a = _run(capsys, *base)[1]
    b = _run(capsys, *base, "--seed", "11")[1]
    assert a == b
    monkeypatch.setenv("UMTP_SEED", "x")
    assert _run(capsys, *base)[0] == cli.EXIT_ERROR


def test_csv_header_line(capsys):
    code, out, _ = _run(capsys, "sample", "--sampler", "line", "--radius", "2", "--n", "2",
                        "--format", "csv")
    assert code == cli.EXIT_OK
    first = out.splitlines()[0]
    assert first.startswith("# ")
    assert json.loads(first[2:])["command"] == "sample"


def test_mtp_test_rejects_center(capsys):
    code, out, _ = _run(capsys, "mtp-test", "--sampler", "biased-center-p3", "--n", "200",
                        "--permutations", "500")
    assert code == cli.EXIT_REJECTED
    assert json.loads(out)["result"]["p_value"] < 0.01


def test_mtp_test_accepts_uniform(capsys):
    code, _, _ = _run(capsys, "mtp-test", "--sampler", "uniform", "--graph", "path:5",
                      "--n", "500", "--permutations", "500")
    assert code == cli.EXIT_OK


def test_graph_from_json_file(tmp_path, capsys):
    f = tmp_path / "g.json"
    f.write_text(dumps(RootedNetwork.of(path_graph(4), 0)))
    code, out, _ = _run(capsys, "iso", "--graph", str(f))
    assert code == cli.EXIT_OK
    assert json.loads(out)["result"]


def test_bad_graph_string(capsys):
    assert _run(capsys, "ust", "--graph", "blob:3")[0] == cli.EXIT_ERROR


def test_out_file(tmp_path, capsys):
    f = tmp_path / "r.json"
    code, out, _ = _run(capsys, "return-compare", "--graph", "cycle:5", "--out", str(f))
    assert code == cli.EXIT_OK and out == ""
    assert json.loads(f.read_text())["command"] == "return-compare"


@pytest.mark.parametrize("argv", [
    ("converge", "--sizes", "100,200", "--n", "200"),
    ("walk", "--sampler", "ugw", "--p", P, "--radius", "5", "--n", "300",
     "--permutations", "200"),
    ("speed", "--sampler", "ugw", "--p", "2:1", "--radius", "50", "--steps", "50",
     "--trials", "10"),
    ("heat", "--graph", "path:4"),
    ("ust", "--graph", "cycle:5", "--n", "100"),
    ("msf", "--sampler", "ugw", "--p", "2:1", "--radius", "4", "--n", "20"),
    ("perc", "--sampler", "ugw", "--p", "2:1", "--radius", "4", "--n", "50"),
    ("sample", "--sampler", "cover", "--graph", "cycle:4", "--radius", "3", "--n", "2"),
])
def test_subcommands_run(capsys, argv):
    code, out, _ = _run(capsys, *argv)
    assert code in (cli.EXIT_OK, cli.EXIT_REJECTED)
    assert json.loads(out)["command"] == argv[0]


def test_walk_drift_rejected(capsys):
    code, _, _ = _run(capsys, "walk", "--sampler", "canopy", "--radius", "4", "--n", "2000",
                      "--permutations", "500", "--drift", "0.9", "--steps", "1")
    assert code == cli.EXIT_REJECTED


def test_entry_point_module():
    res = subprocess.run([sys.executable, "-m", "umtp.cli", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "umtp" in res.stdout
