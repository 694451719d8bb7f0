import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from anchorlab import __version__
from anchorlab.audit import canonical_chsh_strategy
from anchorlab.cli import main


def run(argv, stdin=""):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdin=io.StringIO(stdin), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def pipe(*commands):
    text = ""
    for argv in commands:
        code, text, err = run(argv, text)
        assert code == 0, err
    return text


def test_chsh_value():
    assert pipe(["builtin", "chsh"], ["value"]).strip() == "0.75"


def test_ffl_repeat_value():
    assert pipe(["builtin", "ffl"], ["repeat", "2"], ["value"]).strip() == "0.6666667"


def test_chsh_xor_value():
    assert pipe(["builtin", "chsh"], ["xor-value", "--tol", "1e-6"]).strip() == "0.8535534"


def test_worst_case_and_anchor():
    assert pipe(["builtin", "chsh"], ["worst-case"]).strip() == "0.25"
    assert pipe(["builtin", "chsh"], ["anchor", "1/2"], ["value"]).strip() == "0.9375"


def test_json_outputs():
    res = json.loads(pipe(["builtin", "chsh"], ["value", "--json"]))
    assert res["exact"] == "3/4" and res["strategy"] == [{"0": "0", "1": "0"}, {"0": "0", "1": "0"}]
    res = json.loads(pipe(["builtin", "chsh"], ["xor-value", "--json", "--dump"]))
    assert {"bias", "value", "gap", "iterations", "Z", "y"} <= set(res)
    assert len(res["Z"]) == 4 and len(res["y"]) == 4


def test_manifest_on_stderr():
    code, out, err = run(["builtin", "chsh"])
    manifest = json.loads(err.strip().splitlines()[-1])
    assert manifest["command"] == "builtin" and manifest["version"] == __version__
    assert json.loads(out)["players"] == 2


def test_shell_pipeline():
    exe = shutil.which("anchorlab")
    cmd = f"{exe} builtin ffl | {exe} repeat 2 | {exe} value" if exe else None
    if cmd is None:
        m = f"{sys.executable} -m anchorlab.cli"
        cmd = f"{m} builtin ffl | {m} repeat 2 | {m} value"
    res = subprocess.run(cmd, shell=True, capture_output=True, text=True, check=True)
    assert res.stdout.strip() == "0.6666667"


def test_bound_commands():
    code, out, _ = run(["bound", "expanded_decay", "c=1", "eps=0.5", "n=64", "k=2", "alphabet_size=4"])
    assert code == 0 and out.strip() == "0.7788008"
    code, out, _ = run(["bound", "two_player_decay", "--json", "--param", "eps=0.1", "--param", "alpha=0.5",
                        "--param", "n=1000"])
    rep = json.loads(out)
    assert rep["clamped"] == 1.0 and rep["vacuous"] and rep["log_base"] == 2
    text = pipe(["builtin", "chsh"], ["bound-vs-truth", "--n-max", "2", "--bound", "two_player_decay",
                                      "eps=0.5", "alpha=0.5"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [float(r["true_value"]) for r in rows] == [0.75, 0.625]
    assert all(r["consistent"] == "True" for r in rows)


@pytest.mark.parametrize("argv,stdin", [
    (["value"], "{not json"),
    (["value"], '{"predicate": {"type": "builtin", "name": "nope"}}'),
    (["anchor", "1.5"], None),
    (["bound", "anchored_value", "omega=2", "alpha=0.5"], None),
    (["bound", "multiplayer_decay", "eps=1", "alpha=1", "N=2", "k=1", "c=0.5"], None),
    (["xor-value"], None),  # FFL is not an XOR game
    (["audit", "--strategy", "canonical:2", "--checks", "bogus"], None),
    (["builtin", "nxor"], None),
])
def test_validation_exit_code(argv, stdin):
    if stdin is None:
        stdin = pipe(["builtin", "ffl"])
    code, _, err = run(argv, stdin)
    assert code == 2
    assert "anchorlab:" in err


def test_solver_divergence_exit_code(monkeypatch):
    from anchorlab import xor_sdp
    from anchorlab.errors import SolverDiverged

    def boom(*a, **k):
        raise SolverDiverged("gap 1e-3 above tolerance")

    monkeypatch.setattr(xor_sdp, "quantum_bias", boom)
    code, _, err = run(["xor-value"], pipe(["builtin", "chsh"]))
    assert code == 3 and "diverged" in err


def test_value_cap_exit_code():
    code, _, err = run(["value", "--cap", "10"], pipe(["builtin", "chsh"], ["repeat", "2"]))
    assert code == 2 and "SearchSpaceTooLarge" in err


def test_help_lists_commands():
    code, out, _ = run([])
    assert code == 2
    for name in ("value", "worst-case", "repeat", "anchor", "xor-value", "bound", "bound-vs-truth",
                 "simulate", "fuzz", "audit", "builtin"):
        assert name in out
    assert main(["simulate", "--help"]) == 0


# ------------------------------------------------------------------ outputs and replay


def _simulate(tmp_path, game_file, out, seed="3"):
    return run(["simulate", "--game", str(game_file), "--n", "3", "--coords", "0,1", "--target", "2",
                "--alpha", "0.3", "--strategy", "neighbor-sum", "--samples", "5000", "--seed", seed,
                "--out", str(out)])


def test_out_directory_and_replay(tmp_path):
    game = tmp_path / "chsh.json"
    game.write_text(pipe(["builtin", "chsh"]))
    code, _, err = _simulate(tmp_path, game, tmp_path / "a")
    assert code == 0, err
    files = {p.name for p in (tmp_path / "a").iterdir()}
    assert files == {"report.json", "cells.csv", "tables.csv", "manifest.json"}
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 3 and str(game) in manifest["inputs"]
    # replay from the manifest alone, after the input file is gone
    game.unlink()
    code, _, err = run(["--replay", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b")])
    assert code == 0, err
    for name in ("report.json", "cells.csv", "tables.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_replay_stdin_input(tmp_path):
    code, _, err = run(["value", "--json", "--out", str(tmp_path / "a")], pipe(["builtin", "ffl"]))
    assert code == 0, err
    code, _, err = run(["--replay", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b")])
    assert code == 0, err
    assert (tmp_path / "a" / "value.json").read_bytes() == (tmp_path / "b" / "value.json").read_bytes()


def test_seed_environment_override(tmp_path, monkeypatch):
    game = tmp_path / "chsh.json"
    game.write_text(pipe(["builtin", "chsh"]))
    _simulate(tmp_path, game, tmp_path / "a", seed="3")
    monkeypatch.setenv("ANCHORLAB_SEED", "11")
    _simulate(tmp_path, game, tmp_path / "b", seed="3")
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["seed"] == 11
    assert (tmp_path / "a" / "report.json").read_bytes() != (tmp_path / "b" / "report.json").read_bytes()
    monkeypatch.setenv("ANCHORLAB_SEED", "3")
    _simulate(tmp_path, game, tmp_path / "c", seed="99")
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "c" / "report.json").read_bytes()
    monkeypatch.setenv("ANCHORLAB_SEED", "x")
    code, _, err = _simulate(tmp_path, game, tmp_path / "d")
    assert code == 2


def test_simulate_workers_identical(tmp_path):
    game = tmp_path / "chsh.json"
    game.write_text(pipe(["builtin", "chsh"]))
    outs = []
    for w in ("1", "3"):
        code, out, err = run(["simulate", "--game", str(game), "--n", "2", "--samples", "140000",
                              "--workers", w])
        assert code == 0, err
        outs.append(out)
    assert outs[0] == outs[1]


def test_fuzz_commands(tmp_path):
    code, out, err = run(["fuzz", "probfact", "--trials", "30"])
    assert code == 0 and "0 violations" in err
    assert out.splitlines()[0] == "trial,check,lhs,rhs,holds"
    code, out, err = run(["fuzz", "entropy", "--pairs", "10", "--channels", "3", "--raz", "4",
                          "--out", str(tmp_path / "e")])
    assert code == 0 and (tmp_path / "e" / "entropy_fuzz.csv").exists()
    code, _, _ = run(["--replay", str(tmp_path / "e" / "manifest.json"), "--out", str(tmp_path / "f")])
    assert (tmp_path / "e" / "entropy_fuzz.csv").read_bytes() == (tmp_path / "f" / "entropy_fuzz.csv").read_bytes()
    code, out, err = run(["fuzz", "audit", "--trials", "6"])
    assert code == 0 and "6 rows, 0 violations" in err


def test_audit_command(tmp_path):
    code, out, _ = run(["audit", "--strategy", "canonical:3"])
    rep = json.loads(out)
    assert abs(rep["condition_zero"]["epsilon"]) <= 1e-9
    f = tmp_path / "s.json"
    f.write_text(json.dumps(canonical_chsh_strategy(2).to_json()))
    code, out, _ = run(["audit", "--strategy", str(f), "--checks", "anticommutator"])
    assert code == 0 and set(json.loads(out)) == {"n", "dA", "dB", "anticommutator"}
    f.write_text('{"n": 2}')
    assert run(["audit", "--strategy", str(f)])[0] == 2


def test_nxor_builtin_with_signs(tmp_path):
    f = tmp_path / "signs.json"
    f.write_text(json.dumps([{"q": [x, y], "s": -1 if x == y == "1" else 1} for x in "01" for y in "01"]))
    assert pipe(["builtin", "nxor", "--signs", str(f)], ["value"]).strip() == "0.75"
    compact = pipe(["builtin", "nxor", "--signs", str(f), "--compact"])
    assert json.loads(compact)["predicate"]["type"] == "builtin"
    assert pipe(["builtin", "nxor", "--signs", str(f), "--compact"], ["xor-value"]).strip() == "0.8535534"
