"""``anchorlab`` command-line entry point.

Games travel as JSON on standard streams, so commands compose::

    anchorlab builtin ffl | anchorlab repeat 2 | anchorlab value

Every run produces a manifest (command, argv, inline inputs, seed, version,
timestamp).  With ``--out DIR`` the outputs and ``manifest.json`` are written
there; otherwise the manifest goes to stderr as one JSON line.
``anchorlab --replay manifest.json --out DIR`` re-executes a manifest.
Exit codes: 0 success, 2 invalid input, 3 solver divergence.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import math
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .errors import InvalidGame, InvalidStrategy, SolverDiverged, ValidationError

SEED_ENV = "ANCHORLAB_SEED"


def fmt(x: Any) -> str:
    """Human output: 7 significant digits."""
    return f"{float(x):.7g}"


def _jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _dump(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, ensure_ascii=False) + "\n"


class Run:
    """Collects inputs and outputs of one invocation."""

    def __init__(self, args: argparse.Namespace, argv: Sequence[str], stdin: io.TextIOBase, stderr=None):
        self.args = args
        self.stderr = stderr or sys.stderr
        self.argv = list(argv)
        self._stdin = stdin
        self.inputs: dict[str, str] = {}
        self.seed: int | None = None
        self.outputs: list[tuple[str, str]] = []
        self.stdout: list[str] = []

    def read(self, path: str | None) -> str:
        if path in (None, "-"):
            if "<stdin>" not in self.inputs:
                self.inputs["<stdin>"] = self._stdin.read()
            return self.inputs["<stdin>"]
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read {path}: {exc}") from None
        self.inputs[path] = text
        return text

    def read_json(self, path: str | None) -> Any:
        text = self.read(path)
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path or '<stdin>'} is not valid JSON: {exc}") from None

    def game(self):
        from .gameio import game_from_json

        path = getattr(self.args, "game", None)
        obj = self.read_json(path)
        return game_from_json(obj)

    def use_seed(self, default: int) -> int:
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                self.seed = int(env)
            except ValueError:
                raise ValidationError(f"{SEED_ENV}={env!r} is not an integer") from None
        else:
            self.seed = int(default)
        return self.seed

    def emit(self, name: str, text: str, show: bool = True) -> None:
        """Record an output file; without --out it is printed if ``show``."""
        self.outputs.append((name, text))
        if show and not self.args.out:
            self.stdout.append(text.rstrip("\n"))

    def say(self, line: str) -> None:
        self.stdout.append(line)

    def manifest(self) -> dict:
        return {
            "command": self.args.command,
            "argv": self.argv,
            "inputs": self.inputs,
            "seed": self.seed,
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "outputs": [name for name, _ in self.outputs],
        }


# --------------------------------------------------------------------------
# commands


def cmd_builtin(run: Run) -> None:
    from .gameio import builtin, builtin_json, game_to_json

    a = run.args
    signs = None
    if a.name == "nxor":
        if not a.signs:
            raise InvalidGame("nxor needs --signs FILE with [{\"q\": [...], \"s\": +-1}, ...]")
        signs = run.read_json(a.signs)
    g = builtin(a.name, signs)
    obj = builtin_json(a.name, signs) if a.compact else game_to_json(g)
    run.emit("game.json", json.dumps(obj, ensure_ascii=False) + "\n")


def _value_cmd(run: Run, worst: bool) -> None:
    from .games import classical_value, worst_case_value

    g = run.game()
    fn = worst_case_value if worst else classical_value
    v, strat = fn(g, cap=run.args.cap, return_strategy=True)
    res = {"value": float(v), "exact": str(v) if isinstance(v, Fraction) else None,
           "strategy": strat.labelled(g)}
    if run.args.json:
        run.emit("value.json", _dump(res))
    else:
        run.emit("value.json", _dump(res), show=False)
        run.say(fmt(v))


def cmd_value(run: Run) -> None:
    _value_cmd(run, worst=False)


def cmd_worst_case(run: Run) -> None:
    _value_cmd(run, worst=True)


def cmd_repeat(run: Run) -> None:
    from .gameio import dumps
    from .games import repeat

    run.emit("game.json", dumps(repeat(run.game(), run.args.n)) + "\n")


def cmd_anchor(run: Run) -> None:
    from .gameio import dumps
    from .games import anchor

    run.emit("game.json", dumps(anchor(run.game(), run.args.alpha)) + "\n")


def cmd_xor_value(run: Run) -> None:
    from .xor_sdp import classical_bias, quantum_bias, xor_matrix

    g = xor_matrix(run.game())
    sol = quantum_bias(g, tol=run.args.tol, method=run.args.method)
    res = {"value": sol.value, "bias": sol.bias, "primal": sol.primal, "dual": sol.dual,
           "gap": sol.gap, "iterations": sol.iterations, "method": sol.method,
           "residuals": sol.residuals}
    if max(g.shape) <= 16:
        res["classical_bias"] = classical_bias(g)
    if run.args.dump:
        res["Z"] = sol.Z.tolist()
        res["y"] = sol.y.tolist()
    if run.args.json:
        run.emit("xor_value.json", _dump(res))
    else:
        run.emit("xor_value.json", _dump(res), show=False)
        run.say(fmt(sol.value))


def _params(pairs: Sequence[str]) -> dict:
    out = {}
    for p in pairs:
        key, sep, val = p.partition("=")
        if not sep or not key:
            raise ValidationError(f"parameter {p!r} is not of the form key=value")
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def cmd_bound(run: Run) -> None:
    from .bounds import evaluate

    rep = evaluate(run.args.formula, **_params(run.args.params + run.args.param))
    if run.args.json:
        run.emit("bound.json", _dump(rep.to_dict()))
    else:
        run.emit("bound.json", _dump(rep.to_dict()), show=False)
        line = f"{fmt(rep.raw)} (clamped {fmt(rep.clamped)})" if rep.raw != rep.clamped else fmt(rep.raw)
        run.say(line)


def cmd_bound_vs_truth(run: Run) -> None:
    from .bounds import bound_vs_truth, bvt_csv

    rows = bound_vs_truth(run.game(), run.args.n_max, run.args.bound, _params(run.args.params + run.args.param))
    run.emit("bound_vs_truth.csv", bvt_csv(rows))


def _strategy(run: Run, game):
    from .games import classical_value
    from .repetition import ProductStrategy, neighbor_sum_strategy, strategy_from_json

    spec = run.args.strategy
    if spec in (None, "optimal"):
        _, strat = classical_value(game, return_strategy=True)
        return ProductStrategy(strat)
    if spec == "neighbor-sum":
        return neighbor_sum_strategy(game)
    obj = run.read_json(spec)
    try:
        return strategy_from_json(obj)
    except (KeyError, TypeError) as exc:
        raise InvalidStrategy(f"malformed strategy file: {exc}") from None


def _coords(text: str | None, n: int, target: int) -> tuple[int, ...]:
    if text is None:
        return tuple(k for k in range(n) if k != target)
    if text.strip() == "":
        return ()
    try:
        return tuple(int(c) for c in text.split(","))
    except ValueError:
        raise ValidationError(f"--coords must be comma-separated integers, got {text!r}") from None


def cmd_simulate(run: Run) -> None:
    from .games import anchor
    from .repetition import SimConfig, report_csv, simulate_conditional

    a = run.args
    game = run.game()
    if a.alpha is not None:
        game = anchor(game, a.alpha)
    target = a.n - 1 if a.target is None else a.target
    cfg = SimConfig(game, _strategy(run, game), a.n, _coords(a.coords, a.n, target), target,
                    a.samples, run.use_seed(a.seed), workers=a.workers)
    rep = simulate_conditional(cfg)
    cells, tables = report_csv(rep)
    body = rep.to_dict()
    body.pop("tables")
    run.emit("report.json", _dump(body))
    run.emit("cells.csv", cells, show=False)
    run.emit("tables.csv", tables, show=False)


def cmd_fuzz(run: Run) -> None:
    a = run.args
    seed = run.use_seed(a.seed)
    if a.suite == "entropy":
        from .entropy import entropy_fuzz, rows_to_csv

        rows = entropy_fuzz(a.pairs, a.channels, a.raz, master_seed=seed, max_dim=a.max_dim)
        text = rows_to_csv(rows)
    elif a.suite == "probfact":
        from .repetition import probfact_csv, probfact_fuzz

        rows = probfact_fuzz(a.trials, a.dims, seed)
        text = probfact_csv(rows)
    else:
        from .audit import AUDIT_FUZZ_COLUMNS, audit_fuzz
        from .entropy import rows_to_csv

        rows = audit_fuzz(a.trials, seed)
        text = rows_to_csv(rows, AUDIT_FUZZ_COLUMNS)
    run.emit(f"{a.suite}_fuzz.csv", text)
    bad = sum(1 for r in rows if not r["holds"])
    print(f"{a.suite}: {len(rows)} rows, {bad} violations", file=run.stderr)


def cmd_audit(run: Run) -> None:
    from .audit import XorStrategy, audit, canonical_chsh_strategy

    spec = run.args.strategy
    if spec.startswith("canonical:"):
        try:
            s = canonical_chsh_strategy(int(spec.split(":", 1)[1]))
        except ValueError:
            raise ValidationError(f"bad canonical strategy spec {spec!r}") from None
    else:
        s = XorStrategy.from_json(run.read_json(spec))
    checks = [c.strip() for c in run.args.checks.split(",") if c.strip()]
    run.emit("audit.json", _dump(audit(s, checks)))


COMMANDS = {
    "builtin": cmd_builtin,
    "value": cmd_value,
    "worst-case": cmd_worst_case,
    "repeat": cmd_repeat,
    "anchor": cmd_anchor,
    "xor-value": cmd_xor_value,
    "bound": cmd_bound,
    "bound-vs-truth": cmd_bound_vs_truth,
    "simulate": cmd_simulate,
    "fuzz": cmd_fuzz,
    "audit": cmd_audit,
}


def build_parser() -> argparse.ArgumentParser:
    from .bounds import FORMULAS, REPETITION_KEY

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="write outputs and manifest.json to DIR")
    common.add_argument("--json", action="store_true", help="full-precision JSON instead of a 7-digit summary")
    gamearg = argparse.ArgumentParser(add_help=False)
    gamearg.add_argument("--game", metavar="FILE", help="game JSON file (default: standard input)")

    p = argparse.ArgumentParser(prog="anchorlab", description="Nonlocal game laboratory.")
    p.add_argument("--version", action="version", version=f"anchorlab {__version__}")
    p.add_argument("--replay", metavar="MANIFEST", help="re-run the command recorded in a manifest")
    p.add_argument("--out", dest="replay_out", metavar="DIR", help="output directory for --replay")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    s = sub.add_parser("builtin", parents=[common], help="emit a builtin game as JSON")
    s.add_argument("name", choices=["chsh", "ffl", "nxor"])
    s.add_argument("--signs", metavar="FILE", help="nxor sign table: [{\"q\": [...], \"s\": 1}, ...]")
    s.add_argument("--compact", action="store_true", help="emit the builtin form instead of the table form")

    for name, hlp in (("value", "classical value by brute force"),
                      ("worst-case", "minimum winning probability over deterministic strategies")):
        s = sub.add_parser(name, parents=[common, gamearg], help=hlp)
        s.add_argument("--cap", type=int, default=10**8, help="strategy-space cap (default 1e8)")

    s = sub.add_parser("repeat", parents=[common, gamearg], help="n-fold parallel repetition")
    s.add_argument("n", type=int)
    s = sub.add_parser("anchor", parents=[common, gamearg], help="alpha-anchored game")
    s.add_argument("alpha", help="anchoring probability in (0, 1); fractions like 1/3 stay exact")

    s = sub.add_parser("xor-value", parents=[common, gamearg], help="quantum value of an XOR game via SDP")
    s.add_argument("--tol", type=float, default=1e-8, help="duality-gap tolerance in bias units")
    s.add_argument("--method", choices=["auto", "interior-point", "gram"], default="auto")
    s.add_argument("--dump", action="store_true", help="include the Gram matrix Z and dual vector y")

    s = sub.add_parser("bound", parents=[common], help="evaluate a closed-form bound")
    s.add_argument("formula", choices=sorted(FORMULAS))
    s.add_argument("params", nargs="*", metavar="KEY=VALUE")
    s.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="formula parameter (repeatable; positional KEY=VALUE also works)")

    s = sub.add_parser("bound-vs-truth", parents=[common, gamearg],
                       help="brute-forced repeated values against a bound (CSV)")
    s.add_argument("--n-max", type=int, required=True)
    s.add_argument("--bound", choices=sorted(REPETITION_KEY), required=True)
    s.add_argument("params", nargs="*", metavar="KEY=VALUE")
    s.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")

    s = sub.add_parser("simulate", parents=[common, gamearg],
                       help="Monte Carlo conditional-distribution gaps on a repeated game")
    s.add_argument("--strategy", help="strategy JSON file, 'optimal' (default) or 'neighbor-sum'")
    s.add_argument("--n", type=int, required=True, help="number of coordinates")
    s.add_argument("--coords", help="conditioning coordinates, comma separated (default: all but target)")
    s.add_argument("--target", type=int, help="target coordinate (default n-1)")
    s.add_argument("--alpha", help="anchor the game with this alpha first")
    s.add_argument("--samples", type=int, default=100000)
    s.add_argument("--seed", type=int, default=0, help=f"master seed ({SEED_ENV} overrides)")
    s.add_argument("--workers", type=int, default=1, help="sampling threads (output does not depend on it)")

    s = sub.add_parser("fuzz", parents=[common], help="seeded inequality fuzzing (CSV)")
    s.add_argument("suite", choices=["entropy", "probfact", "audit"])
    s.add_argument("--seed", type=int, default=0, help=f"master seed ({SEED_ENV} overrides)")
    s.add_argument("--pairs", type=int, default=1000)
    s.add_argument("--channels", type=int, default=200)
    s.add_argument("--raz", type=int, default=500)
    s.add_argument("--max-dim", type=int, default=4)
    s.add_argument("--trials", type=int, default=200, help="probfact / audit instance count")
    s.add_argument("--dims", type=int, default=8, help="probfact alphabet size cap")

    s = sub.add_parser("audit", parents=[common], help="residual audit of a CHSH(n) strategy")
    s.add_argument("--strategy", required=True, help="strategy JSON file or canonical:N")
    s.add_argument("--checks", default="all",
                   help="comma list of condition_zero, equivalence, anticommutator, permutation, "
                        "polar, appendix, or all")
    return p


def _execute(args: argparse.Namespace, argv: Sequence[str], stdin, stdout, stderr) -> int:
    run = Run(args, argv, stdin, stderr)
    try:
        COMMANDS[args.command](run)
    except SolverDiverged as exc:
        print(f"anchorlab: solver diverged: {exc}", file=stderr)
        return 3
    except ValidationError as exc:
        print(f"anchorlab: {type(exc).__name__}: {exc}", file=stderr)
        return 2
    manifest = run.manifest()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in run.outputs:
            (out / name).write_text(text)
        (out / "manifest.json").write_text(_dump(manifest))
    else:
        print(json.dumps(_jsonable(manifest), ensure_ascii=False), file=stderr)
    if run.stdout:
        print("\n".join(run.stdout), file=stdout)
    return 0


def replay(path: str, out: str | None, stdout=None, stderr=None) -> int:
    """Re-run a manifest: recorded inputs are materialized in a scratch
    directory and substituted for the original paths."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        m = json.loads(Path(path).read_text())
        argv = list(m["argv"])
        inputs = dict(m["inputs"])
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"anchorlab: cannot read manifest {path}: {exc}", file=stderr)
        return 2
    with tempfile.TemporaryDirectory() as tmp:
        mapping = {}
        for k, (orig, text) in enumerate(inputs.items()):
            if orig == "<stdin>":
                continue
            p = Path(tmp) / f"input{k}{Path(orig).suffix}"
            p.write_text(text)
            mapping[orig] = str(p)
        argv = [mapping.get(x, x) for x in argv]
        argv = _set_flag(argv, "--out", out)
        if m.get("seed") is not None:
            argv = _set_flag(argv, "--seed", str(m["seed"]))
        stdin = io.StringIO(inputs.get("<stdin>", ""))
        return main(argv, stdin=stdin, stdout=stdout, stderr=stderr)


def _set_flag(argv: list[str], flag: str, value: str | None) -> list[str]:
    out, skip = [], False
    for x in argv:
        if skip:
            skip = False
            continue
        if x == flag:
            skip = True
            continue
        if x.startswith(flag + "="):
            continue
        out.append(x)
    if value is not None:
        out += [flag, value]
    return out


def main(argv: Sequence[str] | None = None, stdin=None, stdout=None, stderr=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.replay:
        return replay(args.replay, args.replay_out, stdout, stderr)
    if not args.command:
        parser.print_help(stdout)
        return 2
    return _execute(args, argv, stdin, stdout, stderr)


if __name__ == "__main__":
    sys.exit(main())
