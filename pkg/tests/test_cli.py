import json
import subprocess
import sys

import pytest

from deltadisp.cli import SUBCOMMANDS, build_parser, run

CHEAP = [
    ["spectrum", "--alpha", "-1"],
    ["norm", "--profile", "green", "--p", "2", "--r-max", "40"],
    ["evolve", "--alpha", "1", "--t", "0.5,1"],
    ["pitt", "--q", "5/2", "--count", "3", "--refinements", "1"],
]


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_spectrum_bundle(tmp_path, capsys):
    assert run(["spectrum", "--alpha", "-1", "--out", str(tmp_path)]) == 0
    printed = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert printed["eigenvalues"][0] == pytest.approx(-157.91367041742973, abs=1e-8)
    data = json.loads((tmp_path / "spectrum.json").read_text())
    assert data["schema_version"] == 1 and data["multiplicities"] == [1]
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["schema_version"] == 1 and man["subcommand"] == "spectrum"
    assert man["files"] == ["scan.csv", "spectrum.json"]
    assert set(man) >= {"config", "seed", "out", "tool_version", "parameters", "resolved"}


@pytest.mark.parametrize("argv", CHEAP, ids=lambda a: a[0])
def test_deterministic_outputs(argv, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(argv + ["--out", str(a)]) == 0
    assert run(argv + ["--out", str(b)]) == 0
    fa, fb = _files(a), _files(b)
    man_a, man_b = (json.loads(f.pop("manifest.json")) for f in (fa, fb))
    assert fa == fb
    for m in (man_a, man_b):
        m.pop("out"), m["parameters"].pop("out")
    assert man_a == man_b


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"centers": [[0, 0, 0], [1.5, 0, 0]], "strengths": [-0.2, "inf"]}))
    assert run(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["resolved"]["config"]["strengths"][1] == "inf"


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert run(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_all_subcommands_registered():
    choices = build_parser()._subparsers._group_actions[0].choices
    assert tuple(choices) == SUBCOMMANDS


@pytest.mark.parametrize("argv", [["bogus"], ["spectrum", "--no-such-flag"], []])
def test_usage_errors_exit_1(argv):
    proc = subprocess.run([sys.executable, "-m", "deltadisp", *argv], capture_output=True, text=True)
    assert proc.returncode == 1
    if argv == ["bogus"]:
        assert "[UNKNOWN-SUBCOMMAND]" in proc.stderr


def test_unbounded_pitt_exits_2(tmp_path):
    assert run(["pitt", "--q", "3.5", "--out", str(tmp_path)]) == 2
    data = json.loads((tmp_path / "pitt.json").read_text())
    assert data["schema_version"] == 1
