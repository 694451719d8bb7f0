"""JSON encoding of games.

A game file looks like::

    {"players": 2,
     "questions": [["0", "1"], ["0", "1"]],
     "answers": [["0", "1"], ["0", "1"]],
     "distribution": [{"q": ["0", "0"], "p": 0.25}, ...],
     "predicate": {"type": "table", "wins": [{"q": [...], "a": [...]}, ...]}}

``predicate`` may instead name a builtin: ``{"type": "builtin", "name":
"chsh"}``, ``"ffl"``, or ``"nxor"`` with ``"signs": [{"q": [...], "s": 1}]``.
Exact probabilities that are not small dyadic rationals are written as
strings such as ``"1/9"`` so a round trip never loses exactness.
"""

from __future__ import annotations

import itertools
import json
from fractions import Fraction
from typing import Any

import numpy as np

from .errors import InvalidGame
from .games import MAX_EXACT_DENOMINATOR, Game, ProbTable, as_number, chsh, ffl, nxor

BUILTINS = ("chsh", "ffl", "nxor")


def _encode_mass(m: Any) -> float | str:
    if isinstance(m, Fraction):
        d = m.denominator
        if d & (d - 1) == 0 and d <= MAX_EXACT_DENOMINATOR:
            return float(m)
        return f"{m.numerator}/{m.denominator}"
    return float(m)


def game_to_json(game: Game) -> dict:
    """Table form of ``game``; construction metadata goes under ``structure``."""
    qidx = list(itertools.product(*(range(len(q)) for q in game.questions)))
    aidx = list(itertools.product(*(range(len(a)) for a in game.answers)))
    wins = []
    for qi in qidx:
        for ai in aidx:
            if game.wins[qi + ai]:
                wins.append({
                    "q": [game.questions[p][i] for p, i in enumerate(qi)],
                    "a": [game.answers[p][i] for p, i in enumerate(ai)],
                })
    out: dict[str, Any] = {
        "players": game.players,
        "questions": [list(q) for q in game.questions],
        "answers": [list(a) for a in game.answers],
        "distribution": [{"q": list(q), "p": _encode_mass(m)}
                         for q, m in zip(game.distribution.support, game.distribution.mass)],
        "predicate": {"type": "table", "wins": wins},
    }
    if game.name:
        out["name"] = game.name
    st = game.structure
    if st:
        enc = {k: v for k, v in st.items() if k != "base"}
        if "alpha" in enc:
            enc["alpha"] = _encode_mass(enc["alpha"])
        enc["base"] = game_to_json(st["base"])
        out["structure"] = enc
    return out


def builtin_json(name: str, signs: list[dict] | None = None) -> dict:
    """Compact builtin form (the table form is ``game_to_json(builtin(...))``)."""
    pred: dict[str, Any] = {"type": "builtin", "name": name}
    if name == "nxor":
        pred["signs"] = signs or []
    return {"predicate": pred}


def builtin(name: str, signs: list[dict] | None = None) -> Game:
    if name == "chsh":
        return chsh()
    if name == "ffl":
        return ffl()
    if name == "nxor":
        if not signs:
            raise InvalidGame("nxor needs a non-empty sign table")
        return nxor({tuple(str(x) for x in e["q"]): int(e["s"]) for e in signs})
    raise InvalidGame(f"unknown builtin {name!r}; choose from {list(BUILTINS)}")


def _require(obj: dict, key: str) -> Any:
    if key not in obj:
        raise InvalidGame(f"game file is missing {key!r}")
    return obj[key]


def game_from_json(obj: dict) -> Game:
    if not isinstance(obj, dict):
        raise InvalidGame("game file must be a JSON object")
    pred = _require(obj, "predicate")
    kind = pred.get("type")
    if kind == "builtin":
        g = builtin(pred.get("name", ""), pred.get("signs"))
        if "distribution" in obj or "questions" in obj:
            # builtin predicate over user-supplied alphabets or distribution
            g = _table_game(obj, g.wins if "questions" not in obj else None, g)
        return g
    if kind != "table":
        raise InvalidGame(f"predicate type must be 'table' or 'builtin', got {kind!r}")
    return _table_game(obj, None, None)


def _table_game(obj: dict, wins: np.ndarray | None, template: Game | None) -> Game:
    players = int(obj.get("players", template.players if template else 0))
    questions = obj.get("questions") or (template and [list(q) for q in template.questions])
    answers = obj.get("answers") or (template and [list(a) for a in template.answers])
    if not questions or not answers:
        raise InvalidGame("game file needs questions and answers")
    if "distribution" in obj:
        try:
            dist = ProbTable.from_dict({tuple(str(x) for x in e["q"]): e["p"] for e in obj["distribution"]})
        except (KeyError, TypeError) as exc:
            raise InvalidGame(f"malformed distribution entry: {exc}") from None
    else:
        dist = template.distribution
    questions = [tuple(str(x) for x in q) for q in questions]
    answers = [tuple(str(x) for x in a) for a in answers]
    shape = tuple(len(q) for q in questions) + tuple(len(a) for a in answers)
    if wins is None and template is not None:
        # builtin predicate re-tabulated over new alphabets
        ql = [{lab: i for i, lab in enumerate(q)} for q in template.questions]
        wins = np.zeros(shape, dtype=bool)
        for qi in itertools.product(*(range(len(q)) for q in questions)):
            labels = [questions[p][i] for p, i in enumerate(qi)]
            try:
                tq = tuple(ql[p][lab] for p, lab in enumerate(labels))
            except KeyError:
                raise InvalidGame(f"builtin predicate undefined on questions {labels}") from None
            wins[qi] = template.wins[tq]
    elif wins is None:
        wins = np.zeros(shape, dtype=bool)
        qlook = [{lab: i for i, lab in enumerate(q)} for q in questions]
        alook = [{lab: i for i, lab in enumerate(a)} for a in answers]
        for e in obj["predicate"].get("wins", []):
            try:
                idx = tuple(qlook[p][str(x)] for p, x in enumerate(e["q"]))
                idx += tuple(alook[p][str(x)] for p, x in enumerate(e["a"]))
            except (KeyError, IndexError, TypeError):
                raise InvalidGame(f"win tuple {e!r} lies outside the alphabets") from None
            if len(idx) != 2 * players:
                raise InvalidGame(f"win tuple {e!r} has the wrong arity")
            wins[idx] = True
    structure = None
    if "structure" in obj:
        st = dict(obj["structure"])
        if "base" in st:
            st["base"] = game_from_json(st["base"])
        if "alpha" in st:
            st["alpha"] = as_number(st["alpha"])
        structure = st
    return Game(players, questions, answers, dist, wins, name=str(obj.get("name", "")),
                structure=structure)


def dumps(game: Game) -> str:
    return json.dumps(game_to_json(game), ensure_ascii=False)


def loads(text: str) -> Game:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidGame(f"game input is not valid JSON: {exc}") from None
    return game_from_json(obj)
