"""Closed-form bounds, thresholds and parameter formulas for repeated and
anchored games.

Every logarithm is base 2; ``log e`` means ``log2(e)``.  Universal constants
that are only known up to order (``c``, the constant hidden in an
``Omega(.)``) are explicit inputs.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import COutOfWindow, RangeError
from .games import Game, classical_value, repeat

LOG2E = math.log2(math.e)


@dataclass
class BoundReport:
    formula: str
    inputs: dict[str, Any]
    raw: float
    notes: list[str] = field(default_factory=list)

    @property
    def clamped(self) -> float:
        if math.isnan(self.raw):
            return 1.0
        return min(1.0, max(0.0, self.raw))

    @property
    def vacuous(self) -> bool:
        return self.raw >= 1

    def to_dict(self) -> dict:
        return {"formula": self.formula, "inputs": self.inputs, "raw": self.raw,
                "clamped": self.clamped, "vacuous": self.vacuous, "notes": self.notes,
                "log_base": 2}


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise RangeError(msg)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def anchored_value(omega: float, alpha: float) -> float:
    """Value of the alpha-anchored game: 1 - (1 - alpha)^2 (1 - omega)."""
    _require(0 <= omega <= 1, "omega must lie in [0, 1]")
    _require(0 < alpha < 1, "alpha must lie in (0, 1)")
    return 1 - (1 - alpha) ** 2 * (1 - omega)


def two_player_decay(eps: float, alpha: float, n: float, s: float = 1.0, c: float = 1.0) -> BoundReport:
    """(4/eps) exp(-c alpha^48 eps^17 n / s)."""
    _require(0 < eps < 1, "eps must lie in (0, 1)")
    _require(0 < alpha <= 1, "alpha must lie in (0, 1]")
    _require(n >= 1 and s >= 1 and c > 0, "need n >= 1, s >= 1, c > 0")
    raw = (4 / eps) * _exp(-c * alpha**48 * eps**17 * n / s)
    return BoundReport("two_player_decay", dict(eps=eps, alpha=alpha, n=n, s=s, c=c), raw)


def c_window(N: int) -> float:
    """Upper end of the admissible constant window 0 < c < 1/(N^{2N} log e)."""
    return 1 / (N ** (2 * N) * LOG2E)


def multiplayer_decay(eps: float, alpha: float, N: int, k: float, s: float = 1.0,
                      c: float = 0.01, enforce_window: bool = True) -> BoundReport:
    """(10/eps) exp(-c alpha^{20N+1} eps^{6N} k / s) for N players."""
    _require(eps > 0, "eps must be positive")
    _require(0 < alpha <= 1, "alpha must lie in (0, 1]")
    _require(N >= 1 and k >= 0 and s >= 1, "need N >= 1, k >= 0, s >= 1")
    _require(c > 0, "c must be positive")
    notes = []
    if c >= c_window(N):
        if enforce_window:
            raise COutOfWindow(f"c={c} outside (0, {c_window(N):.6g}) for N={N}")
        notes.append("c outside admissible window")
    raw = (10 / eps) * _exp(-c * alpha ** (20 * N + 1) * eps ** (6 * N) * k / s)
    return BoundReport("multiplayer_decay", dict(eps=eps, alpha=alpha, N=N, k=k, s=s, c=c), raw, notes)


def expanded_decay(c: float, eps: float, n: float, k: float, alphabet_size: int) -> BoundReport:
    """exp(-c eps^5 n / (k^2 log |A|))."""
    _require(alphabet_size >= 2, "alphabet_size must be >= 2")
    _require(c > 0 and eps > 0 and k > 0 and n >= 0, "need c, eps, k > 0 and n >= 0")
    raw = _exp(-c * eps**5 * n / (k**2 * math.log2(alphabet_size)))
    return BoundReport("expanded_decay", dict(c=c, eps=eps, n=n, k=k, alphabet_size=alphabet_size), raw)


def generalized_anchor_exponent(omega: float, k: float, sizeA: int, sizeB: int,
                                capital_omega_const: float = 1.0) -> float:
    """[1 - (1 - omega)^5] ** (const * k / log(|A||B|))."""
    _require(0 <= omega <= 1, "omega must lie in [0, 1]")
    _require(sizeA >= 2 and sizeB >= 2, "answer alphabets must have size >= 2")
    _require(k >= 0 and capital_omega_const > 0, "need k >= 0 and a positive constant")
    return (1 - (1 - omega) ** 5) ** (capital_omega_const * k / math.log2(sizeA * sizeB))


def yuen_entangled_bound(val: float, n: float, c: float = 1.0) -> BoundReport:
    """[1 - (1 - val)^3]^{c n}."""
    _require(0 <= val <= 1, "val must lie in [0, 1]")
    _require(n >= 0 and c > 0, "need n >= 0 and c > 0")
    raw = (1 - (1 - val) ** 3) ** (c * n)
    return BoundReport("yuen_entangled_bound", dict(val=val, n=n, c=c), raw)


def yuen_value_tail(cG: float, lenA: int, eps: float, n: float) -> BoundReport:
    """c_G |A| |log n| / (eps^17 n^{1/4}); ``lenA`` is the summed answer length."""
    _require(cG > 0 and lenA >= 1, "need cG > 0 and lenA >= 1")
    _require(0 < eps < 1 and n >= 1, "need eps in (0, 1) and n >= 1")
    raw = cG * lenA * abs(math.log2(n)) / (eps**17 * n**0.25)
    return BoundReport("yuen_value_tail", dict(cG=cG, lenA=lenA, eps=eps, n=n), raw)


def delta_multiplayer(n: int, coord_count: int, question_product: float, p_win: float) -> float:
    """(1/n) [|C| log(prod |Q_i|) + log(1/P[W_C])]."""
    _require(n >= 1, "n must be >= 1")
    _require(coord_count >= 0 and question_product >= 1, "need |C| >= 0 and prod |Q_i| >= 1")
    _require(0 < p_win <= 1, "p_win must lie in (0, 1]")
    return (coord_count * math.log2(question_product) + math.log2(1 / p_win)) / n


def epsilon_threshold(delta: float, c: float, N: int, alpha: float) -> float:
    """[delta/c * 1/(40N) * 1/log e * 1/alpha^{20N+1}]^{1/(6N)}."""
    _require(delta >= 0 and c > 0 and N >= 1, "need delta >= 0, c > 0, N >= 1")
    _require(0 < alpha <= 1, "alpha must lie in (0, 1]")
    bracket = delta / c / (40 * N) / LOG2E / alpha ** (20 * N + 1)
    return bracket ** (1 / (6 * N))


def coordinate_budget(N: int, eps: float, p_win: float) -> dict[str, float]:
    """Coordinate-set size ``t`` and minimal repetition count ``n_min``."""
    _require(N >= 1 and eps > 0, "need N >= 1 and eps > 0")
    _require(0 < p_win <= 1, "p_win must lie in (0, 1]")
    t = (3 * N / eps) * math.log2(1.5 * N / (eps * p_win))
    n_min = (6 * N / eps) * math.log2(math.sqrt(6 * N) / (eps * p_win))
    return {"t": t, "n_min": n_min}


def anchoring_threshold(xi: float, eps: float, N: int = 2, answer_product: float | None = None) -> float:
    """xi^2 eps^4 / 14440000 for two players, xi^N eps^{2N} / 20000000 for
    N > 2; divided by log(prod |A_i|) when ``answer_product`` is given."""
    _require(0 < xi <= 1 and eps > 0 and N >= 2, "need xi in (0, 1], eps > 0, N >= 2")
    val = xi**2 * eps**4 / 14440000 if N == 2 else xi**N * eps ** (2 * N) / 20000000
    if answer_product is not None:
        _require(answer_product >= 2, "answer_product must be >= 2")
        val /= math.log2(answer_product)
    return val


FORMULAS: dict[str, Callable[..., Any]] = {
    "anchored_value": anchored_value,
    "two_player_decay": two_player_decay,
    "multiplayer_decay": multiplayer_decay,
    "expanded_decay": expanded_decay,
    "generalized_anchor_exponent": generalized_anchor_exponent,
    "yuen_entangled_bound": yuen_entangled_bound,
    "yuen_value_tail": yuen_value_tail,
    "delta_multiplayer": delta_multiplayer,
    "epsilon_threshold": epsilon_threshold,
    "coordinate_budget": coordinate_budget,
    "anchoring_threshold": anchoring_threshold,
}

# which keyword carries the repetition count for bound_vs_truth
REPETITION_KEY = {
    "two_player_decay": "n",
    "multiplayer_decay": "k",
    "expanded_decay": "n",
    "yuen_entangled_bound": "n",
    "yuen_value_tail": "n",
}


def evaluate(formula: str, **params) -> BoundReport:
    """Evaluate any formula by id; scalar results are wrapped in a report."""
    try:
        fn = FORMULAS[formula]
    except KeyError:
        raise RangeError(f"unknown formula {formula!r}; choose from {sorted(FORMULAS)}") from None
    try:
        out = fn(**params)
    except TypeError as exc:
        raise RangeError(f"bad parameters for {formula}: {exc}") from None
    if isinstance(out, BoundReport):
        return out
    if isinstance(out, dict):
        return BoundReport(formula, params, out["t"], [f"{k}={v!r}" for k, v in out.items()])
    return BoundReport(formula, params, float(out))


BVT_COLUMNS = ["n", "true_value", "raw_bound", "clamped_bound", "consistent"]


def bound_vs_truth(game: Game, n_max: int, bound_choice: str, params: dict | None = None) -> list[dict]:
    """Brute-forced value of repeat(game, n) against a clamped bound, n = 1..n_max."""
    if bound_choice not in REPETITION_KEY:
        raise RangeError(f"{bound_choice!r} is not a repetition bound; choose from {sorted(REPETITION_KEY)}")
    params = dict(params or {})
    rows = []
    for n in range(1, n_max + 1):
        g = game if n == 1 else repeat(game, n)
        value = classical_value(g)
        if n == 1 and bound_choice == "yuen_entangled_bound":
            params.setdefault("val", float(value))
        try:
            rep = FORMULAS[bound_choice](**{**params, REPETITION_KEY[bound_choice]: n})
        except TypeError as exc:
            raise RangeError(f"bad parameters for {bound_choice}: {exc}") from None
        rows.append({"n": n, "true_value": value, "raw_bound": rep.raw,
                     "clamped_bound": rep.clamped, "consistent": bool(value <= rep.clamped)})
    return rows


def bvt_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BVT_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(float(v)) if k != "n" and k != "consistent" else v for k, v in r.items()})
    return buf.getvalue()
