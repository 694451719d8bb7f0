"""Finite multiplayer games and their exact classical values.

A :class:`Game` stores its predicate as a dense boolean tensor indexed by
``(q_1, ..., q_N, a_1, ..., a_N)`` (indices into the per-player alphabets),
so every predicate is total by construction.  Probabilities are kept as
:class:`fractions.Fraction` whenever the inputs allow it, which makes the
brute-force values of small games exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidAlpha, InvalidGame, InvalidProbTable, SearchSpaceTooLarge

ANCHOR = "⊥"
DEFAULT_CAP = 10**8
MAX_EXACT_DENOMINATOR = 2**16
MASS_TOL = 1e-12
# dense win tensors larger than this are refused by repeat()/anchor()
TENSOR_CAP = 10**8
_CHUNK = 1 << 14


def as_number(x: Any) -> Fraction | float:
    """Coerce ``x`` to a Fraction when it is a small-denominator rational.

    Ints, Fractions and strings such as ``"1/3"`` are exact.  Floats are kept
    exact only if their binary expansion has denominator at most 2**16.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        return as_number(Fraction(x)) if "/" in x else as_number(float(x))
    x = float(x)
    if not math.isfinite(x):
        raise InvalidProbTable(f"non-finite mass {x!r}")
    fx = Fraction(x)
    return fx if fx.denominator <= MAX_EXACT_DENOMINATOR else x


def _unify(values: Iterable[Any]) -> list[Fraction | float]:
    vals = [as_number(v) for v in values]
    if all(isinstance(v, Fraction) for v in vals):
        return vals
    return [float(v) for v in vals]


@dataclass(frozen=True)
class ProbTable:
    """A probability distribution over an ordered, finite set of labels."""

    support: tuple[Hashable, ...]
    mass: tuple[Fraction | float, ...]

    def __post_init__(self) -> None:
        if len(self.support) != len(self.mass):
            raise InvalidProbTable("support and mass lengths differ")
        if len(set(self.support)) != len(self.support):
            raise InvalidProbTable("duplicate labels in support")
        masses = _unify(self.mass)
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "mass", tuple(masses))
        if any(m < 0 for m in masses):
            raise InvalidProbTable("negative mass")
        total = sum(masses)
        if abs(float(total) - 1.0) > MASS_TOL:
            raise InvalidProbTable(f"masses sum to {float(total)!r}, not 1")

    @classmethod
    def from_dict(cls, d: Mapping[Hashable, Any]) -> "ProbTable":
        return cls(tuple(d.keys()), tuple(d.values()))

    @classmethod
    def uniform(cls, labels: Sequence[Hashable]) -> "ProbTable":
        n = len(labels)
        return cls(tuple(labels), tuple(Fraction(1, n) for _ in labels))

    @property
    def exact(self) -> bool:
        return all(isinstance(m, Fraction) for m in self.mass)

    def as_dict(self) -> dict[Hashable, Fraction | float]:
        return dict(zip(self.support, self.mass))

    def __getitem__(self, label: Hashable) -> Fraction | float:
        return self.as_dict().get(label, 0)

    def __len__(self) -> int:
        return len(self.support)

    def prob(self, event: Iterable[Hashable]) -> Fraction | float:
        d = self.as_dict()
        return sum((d.get(lab, 0) for lab in set(event)), Fraction(0) if self.exact else 0.0)


def l1(p: ProbTable, q: ProbTable) -> Fraction | float:
    """Unhalved l1 distance; labels missing from one table have mass 0."""
    dp, dq = p.as_dict(), q.as_dict()
    labels = list(dict.fromkeys(list(p.support) + list(q.support)))
    zero = Fraction(0) if (p.exact and q.exact) else 0.0
    return sum((abs(dp.get(lab, 0) - dq.get(lab, 0)) for lab in labels), zero)


def tvd(p: ProbTable, q: ProbTable) -> Fraction | float:
    return l1(p, q) / 2


@dataclass(frozen=True)
class DeterministicStrategy:
    """One answer index per question index, for each player."""

    maps: tuple[tuple[int, ...], ...]

    def labelled(self, game: "Game") -> list[dict[str, str]]:
        return [
            {game.questions[p][q]: game.answers[p][a] for q, a in enumerate(m)}
            for p, m in enumerate(self.maps)
        ]

    def validate(self, game: "Game") -> None:
        if len(self.maps) != game.players:
            raise InvalidGame("strategy has the wrong number of players")
        for p, m in enumerate(self.maps):
            if len(m) != len(game.questions[p]) or not all(
                0 <= a < len(game.answers[p]) for a in m
            ):
                raise InvalidGame(f"strategy map for player {p} is not total")


@dataclass(eq=False)
class Game:
    """A finite N-player nonlocal game.

    ``wins`` is a boolean array of shape ``(|Q_1|, ..., |Q_N|, |A_1|, ...,
    |A_N|)``.  ``structure`` optionally records how the game was built
    (``{"kind": "repeat", "n": ..., "base": Game}`` and similar); it is
    metadata only and never changes the game's semantics.
    """

    players: int
    questions: tuple[tuple[str, ...], ...]
    answers: tuple[tuple[str, ...], ...]
    distribution: ProbTable
    wins: np.ndarray
    name: str = ""
    structure: dict | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.questions = tuple(tuple(str(x) for x in qs) for qs in self.questions)
        self.answers = tuple(tuple(str(x) for x in a) for a in self.answers)
        self.wins = np.asarray(self.wins, dtype=bool)
        self.validate()

    def validate(self) -> None:
        n = self.players
        if n < 1 or len(self.questions) != n or len(self.answers) != n:
            raise InvalidGame("players must match the number of alphabets")
        for alph in self.questions + self.answers:
            if not alph or len(set(alph)) != len(alph):
                raise InvalidGame("alphabets must be non-empty and duplicate-free")
        if self.wins.shape != self.shape:
            raise InvalidGame(f"predicate shape {self.wins.shape} != {self.shape}")
        index = self._question_index()
        for q in self.distribution.support:
            if tuple(q) not in index:
                raise InvalidGame(f"question tuple {q!r} outside the alphabets")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(q) for q in self.questions) + tuple(len(a) for a in self.answers)

    @property
    def exact(self) -> bool:
        return self.distribution.exact

    def _question_index(self) -> dict[tuple[str, ...], tuple[int, ...]]:
        lookup = [{lab: i for i, lab in enumerate(qs)} for qs in self.questions]
        return {
            q: tuple(lookup[p][lab] for p, lab in enumerate(q))
            for q in itertools.product(*self.questions)
        }

    def prob_array(self) -> np.ndarray:
        """Referee distribution as a dense array (object dtype when exact)."""
        qshape = self.shape[: self.players]
        index = self._question_index()
        if self.exact:
            arr = np.full(qshape, Fraction(0), dtype=object)
        else:
            arr = np.zeros(qshape)
        for q, m in zip(self.distribution.support, self.distribution.mass):
            arr[index[tuple(q)]] += m
        return arr

    def win(self, q: Sequence[str], a: Sequence[str]) -> bool:
        qi = [self.questions[p].index(str(x)) for p, x in enumerate(q)]
        ai = [self.answers[p].index(str(x)) for p, x in enumerate(a)]
        return bool(self.wins[tuple(qi + ai)])

    def same_as(self, other: "Game") -> bool:
        """Semantic equality: alphabets, distribution masses and predicate."""
        return (
            self.players == other.players
            and self.questions == other.questions
            and self.answers == other.answers
            and np.array_equal(self.wins, other.wins)
            and np.array_equal(
                np.asarray(self.prob_array(), dtype=float),
                np.asarray(other.prob_array(), dtype=float),
            )
        )


def game_from_predicate(
    questions: Sequence[Sequence[str]],
    answers: Sequence[Sequence[str]],
    distribution: ProbTable,
    predicate: Callable[[tuple[str, ...], tuple[str, ...]], bool],
    name: str = "",
) -> Game:
    """Tabulate a Python predicate over the full product of alphabets."""
    shape = tuple(len(q) for q in questions) + tuple(len(a) for a in answers)
    wins = np.zeros(shape, dtype=bool)
    for qi in itertools.product(*(range(len(q)) for q in questions)):
        qlab = tuple(str(questions[p][i]) for p, i in enumerate(qi))
        for ai in itertools.product(*(range(len(a)) for a in answers)):
            alab = tuple(str(answers[p][i]) for p, i in enumerate(ai))
            wins[qi + ai] = bool(predicate(qlab, alab))
    return Game(len(questions), questions, answers, distribution, wins, name=name)


# --------------------------------------------------------------------------
# builtins


def chsh() -> Game:
    bits = ("0", "1")
    dist = ProbTable.uniform(list(itertools.product(bits, bits)))
    return game_from_predicate(
        [bits, bits], [bits, bits], dist,
        lambda q, a: (int(a[0]) ^ int(a[1])) == (int(q[0]) & int(q[1])),
        name="chsh",
    )


def ffl() -> Game:
    """Fortnow-Feige-Lovasz game: uniform over (0,0),(0,1),(1,0); win iff
    ``(a or x) != (b or y)``."""
    bits = ("0", "1")
    dist = ProbTable.uniform([("0", "0"), ("0", "1"), ("1", "0")])

    def pred(q, a):
        x, y = int(q[0]), int(q[1])
        return (int(a[0]) | x) != (int(a[1]) | y)

    return game_from_predicate([bits, bits], [bits, bits], dist, pred, name="ffl")


def nxor(
    signs: Mapping[tuple[str, ...], int],
    questions: Sequence[Sequence[str]] | None = None,
    distribution: ProbTable | None = None,
) -> Game:
    """N-player XOR game with binary answers.

    ``signs[q] = +1`` means the players win on ``q`` iff the parity of their
    answers is even; ``-1`` means odd parity wins.  Question tuples missing
    from ``signs`` default to +1.  The distribution defaults to uniform over
    the keys of ``signs``.
    """
    keys = [tuple(str(x) for x in k) for k in signs]
    if not keys:
        raise InvalidGame("nxor needs at least one signed question tuple")
    players = len(keys[0])
    if questions is None:
        questions = [sorted({k[p] for k in keys}) for p in range(players)]
    if distribution is None:
        distribution = ProbTable.uniform(keys)
    table = {k: int(s) for k, s in zip(keys, signs.values())}
    if any(s not in (1, -1) for s in table.values()):
        raise InvalidGame("nxor signs must be +1 or -1")
    bits = ("0", "1")

    def pred(q, a):
        parity = sum(int(x) for x in a) % 2
        return (parity == 0) == (table.get(q, 1) == 1)

    return game_from_predicate(questions, [bits] * players, distribution, pred, name="nxor")


def constant_game(win: bool, players: int = 2, nq: int = 2, na: int = 2) -> Game:
    qs = [tuple(str(i) for i in range(nq))] * players
    ans = [tuple(str(i) for i in range(na))] * players
    dist = ProbTable.uniform(list(itertools.product(*qs)))
    wins = np.full(tuple([nq] * players + [na] * players), bool(win))
    return Game(players, qs, ans, dist, wins, name="win" if win else "lose")


# --------------------------------------------------------------------------
# values


def strategy_space_size(game: Game) -> int:
    return math.prod(
        len(a) ** len(q) for q, a in zip(game.questions, game.answers)
    )


def _weights(game: Game) -> tuple[np.ndarray, int | None]:
    """Integer weight tensor ``L*pi(q)*V(q,a)`` with its scale ``L`` in exact
    mode; float tensor and ``None`` otherwise."""
    p = game.prob_array()
    nq = game.players
    expand = (slice(None),) * nq + (None,) * nq
    if game.exact:
        scale = math.lcm(*(m.denominator for m in p.flat))
        if scale < 2**62:
            ints = np.vectorize(lambda m: int(m * scale), otypes=[np.int64])(p)
            return ints[expand] * game.wins, scale
    return np.asarray(p, dtype=float)[expand] * game.wins, None


def _strategy_table(nq: int, na: int) -> np.ndarray:
    """All maps [nq] -> [na] as rows, in lexicographic truth-table order."""
    if nq == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((na,) * nq).reshape(nq, -1).T
    return np.ascontiguousarray(grids, dtype=np.int64)


def _answer_blind(game: Game) -> bool:
    """True when every supported question tuple is won by all answers or by none."""
    N = game.players
    p = np.asarray(game.prob_array() != 0, dtype=bool)
    axes = tuple(range(N, 2 * N))
    all_win = game.wins.all(axis=axes)
    none_win = ~game.wins.any(axis=axes)
    return bool(np.all(all_win | none_win | ~p))


def _optimize(game: Game, maximize: bool, cap: int) -> tuple[Any, DeterministicStrategy]:
    if _answer_blind(game):
        # every strategy scores the same; the all-zero strategy is lexicographically first
        zero = DeterministicStrategy(tuple((0,) * len(q) for q in game.questions))
        return strategy_value(game, zero), zero
    size = strategy_space_size(game)
    if size > cap:
        raise SearchSpaceTooLarge(f"strategy space {size} exceeds cap {cap}")
    W, scale = _weights(game)
    N = game.players
    qs = [len(q) for q in game.questions]
    As = [len(a) for a in game.answers]
    lead_q = qs[:-1]
    lead_a = As[:-1]
    # reorder to (q_lead..., a_lead..., q_last, a_last) and flatten the lead block
    perm = list(range(N - 1)) + list(range(N, 2 * N - 1)) + [N - 1, 2 * N - 1]
    W2 = W.transpose(perm).reshape(
        math.prod(lead_q), math.prod(lead_a), qs[-1], As[-1]
    )
    tables = [_strategy_table(q, a) for q, a in zip(lead_q, lead_a)]
    counts = [len(t) for t in tables]
    n_combos = math.prod(counts)
    # digits of every lead joint question, and radix weights of lead answers
    qdigits = np.array(list(itertools.product(*(range(q) for q in lead_q))), dtype=np.int64)
    qdigits = qdigits.reshape(len(qdigits), N - 1)
    aradix = np.array([math.prod(lead_a[p + 1:]) for p in range(N - 1)], dtype=np.int64)

    best_val = None
    best = None
    for start in range(0, n_combos, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, n_combos))
        ks = np.unravel_index(idx, counts) if N > 1 else ()
        joint = np.zeros((len(idx), len(qdigits)), dtype=np.int64)
        for p in range(N - 1):
            joint += tables[p][ks[p]][:, qdigits[:, p]] * aradix[p]
        M = np.zeros((len(idx), qs[-1], As[-1]), dtype=W2.dtype)
        for qj in range(len(qdigits)):
            M += W2[qj, joint[:, qj]]
        per_q = M.max(axis=2) if maximize else M.min(axis=2)
        totals = per_q.sum(axis=1)
        k = int(np.argmax(totals) if maximize else np.argmin(totals))
        val = totals[k]
        if best_val is None or (val > best_val if maximize else val < best_val):
            best_val = val
            last = (M[k].argmax(axis=1) if maximize else M[k].argmin(axis=1))
            maps = [tuple(int(a) for a in tables[p][ks[p][k]]) for p in range(N - 1)]
            maps.append(tuple(int(a) for a in last))
            best = DeterministicStrategy(tuple(maps))
    value = Fraction(int(best_val), scale) if scale is not None else float(best_val)
    return value, best


def classical_value(game: Game, cap: int = DEFAULT_CAP, return_strategy: bool = False):
    """Maximum winning probability over deterministic strategies.

    The last player best-responds question by question, which is exact and
    lets the search enumerate only the other players' strategies.  Ties are
    resolved towards the lexicographically first strategy tuple.
    """
    value, strat = _optimize(game, True, cap)
    return (value, strat) if return_strategy else value


def worst_case_value(game: Game, cap: int = DEFAULT_CAP, return_strategy: bool = False):
    """Minimum winning probability over deterministic strategies."""
    value, strat = _optimize(game, False, cap)
    return (value, strat) if return_strategy else value


def strategy_value(game: Game, strategy: DeterministicStrategy):
    """Winning probability of one deterministic strategy."""
    strategy.validate(game)
    index = game._question_index()
    zero = Fraction(0) if game.exact else 0.0
    total = zero
    for q, m in zip(game.distribution.support, game.distribution.mass):
        qi = index[tuple(q)]
        ai = tuple(strategy.maps[p][qi[p]] for p in range(game.players))
        if game.wins[qi + ai]:
            total += m
    return total


# --------------------------------------------------------------------------
# transforms


def _digits(count: int, base: int, n: int) -> np.ndarray:
    return np.array(list(itertools.product(range(base), repeat=n)), dtype=np.int64).reshape(
        count, n
    )


def repeat(game: Game, n: int) -> Game:
    """n-fold parallel repetition: tuple alphabets, product distribution,
    and a predicate that wins iff every coordinate wins."""
    if n < 1:
        raise InvalidGame("repetition count must be >= 1")
    N = game.players
    size = math.prod(s**n for s in game.shape)
    if size > TENSOR_CAP:
        raise SearchSpaceTooLarge(f"repeated predicate would have {size} entries")
    join = "|".join
    questions = [tuple(join(t) for t in itertools.product(qs, repeat=n)) for qs in game.questions]
    answers = [tuple(join(t) for t in itertools.product(a, repeat=n)) for a in game.answers]

    support, mass = [], []
    base = list(zip(game.distribution.support, game.distribution.mass))
    for combo in itertools.product(base, repeat=n):
        support.append(tuple(join(c[0][p] for c in combo) for p in range(N)))
        m = 1
        for c in combo:
            m = m * c[1]
        mass.append(m)

    digits = [_digits(s**n, s, n) for s in game.shape]
    wins = np.ones(tuple(s**n for s in game.shape), dtype=bool)
    for k in range(n):
        wins &= game.wins[np.ix_(*(d[:, k] for d in digits))]
    name = f"{game.name}^{n}" if game.name else ""
    return Game(
        N, questions, answers, ProbTable(tuple(support), tuple(mass)), wins, name=name,
        structure={"kind": "repeat", "n": n, "base": game},
    )


def anchor(game: Game, alpha: Any) -> Game:
    """alpha-anchored game: each player's question is independently replaced
    by ⊥ with probability alpha, and any delivered ⊥ is an automatic win."""
    a = as_number(alpha)
    if not 0 < a < 1:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha!r}")
    N = game.players
    if any(ANCHOR in qs for qs in game.questions):
        raise InvalidGame("game already uses the anchor symbol")
    if not game.exact:
        a = float(a)
    questions = [qs + (ANCHOR,) for qs in game.questions]
    mass: dict[tuple[str, ...], Any] = {}
    for q, m in zip(game.distribution.support, game.distribution.mass):
        for mask in itertools.product((False, True), repeat=N):
            k = sum(mask)
            w = m * a**k * (1 - a) ** (N - k)
            key = tuple(ANCHOR if mk else lab for lab, mk in zip(q, mask))
            mass[key] = mass.get(key, 0) + w
    shape = tuple(len(qs) for qs in questions) + tuple(len(x) for x in game.answers)
    if math.prod(shape) > TENSOR_CAP:
        raise SearchSpaceTooLarge("anchored predicate too large")
    wins = np.ones(shape, dtype=bool)
    wins[tuple(slice(0, len(qs)) for qs in game.questions)] = game.wins
    name = f"{game.name}_anchored" if game.name else ""
    return Game(
        N, questions, game.answers, ProbTable.from_dict(mass), wins, name=name,
        structure={"kind": "anchor", "alpha": a, "base": game},
    )
