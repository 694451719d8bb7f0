"""Seeded Monte Carlo over repeated games.

Plays ``n`` parallel coordinates of a game under a fixed classical strategy,
conditions on winning every coordinate in ``C`` and compares the empirical
distributions of the off-coordinate transcript

    Omega = (questions and answers at coordinates outside C + {i}, X_C, Y_C)

conditioned on ``X_i = x``, on ``(X_i, Y_i) = (x, y)`` and on ``Y_i = y``.

Randomness comes from numpy's counter-based Philox generator.  Chunk ``c``
of stream ``s`` is keyed by ``SeedSequence(seed, spawn_key=(s, c))`` with
fixed-size chunks, so results do not depend on how chunks are scheduled.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .errors import AlphaEtaMismatch, NoWinningSamples, RangeError, ValidationError
from .games import ANCHOR, DeterministicStrategy, Game, ProbTable, as_number

CHUNK = 1 << 16
Z95 = 1.959963984540054
LOW_SUPPORT_COUNT = 10

# stream ids for SeedSequence spawn keys
_QUESTIONS = 0
_STRATEGY = 1


def philox(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def wilson_halfwidth(k: np.ndarray | int, m: np.ndarray | int, z: float = Z95) -> np.ndarray:
    """Half-width of the Wilson score interval for k successes in m trials."""
    k = np.asarray(k, dtype=float)
    m = np.asarray(m, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = k / m
        hw = (z / (1 + z * z / m)) * np.sqrt(p * (1 - p) / m + z * z / (4 * m * m))
    return np.where(m > 0, hw, np.inf)


# --------------------------------------------------------------------------
# strategies on the repeated game


class ProductStrategy:
    """The same deterministic base-game strategy on every coordinate."""

    kind = "product"

    def __init__(self, strategy: DeterministicStrategy):
        self.maps = [np.asarray(m, dtype=np.int64) for m in strategy.maps]
        self.base = strategy

    def answers(self, player: int, q: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.maps[player][q]

    def to_json(self) -> dict:
        return {"kind": self.kind, "maps": [list(map(int, m)) for m in self.base.maps]}


class NeighborStrategy:
    """Answer at coordinate k is ``tables[p][q_k, q_{k+1 mod n}]``.

    Coupling each answer to the next coordinate's question makes the
    coordinates dependent once the referee conditions on winning.
    """

    kind = "neighbor"

    def __init__(self, tables: Sequence[np.ndarray]):
        self.tables = [np.asarray(t, dtype=np.int64) for t in tables]

    def answers(self, player: int, q: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.tables[player][q, np.roll(q, -1, axis=1)]

    def to_json(self) -> dict:
        return {"kind": self.kind, "tables": [t.tolist() for t in self.tables]}


class MixtureStrategy:
    """Shared randomness: each sample draws one component for all coordinates."""

    kind = "mixture"

    def __init__(self, weights: Sequence[float], components: Sequence[Any]):
        w = np.asarray(weights, dtype=float)
        if len(w) != len(components) or w.min() < 0 or abs(w.sum() - 1) > 1e-12:
            raise ValidationError("mixture weights must be a distribution over components")
        self.weights = w
        self.components = list(components)
        self._choice: np.ndarray | None = None

    def draw(self, size: int, rng: np.random.Generator) -> "_BoundMixture":
        return _BoundMixture(self, rng.choice(len(self.weights), size=size, p=self.weights))

    def to_json(self) -> dict:
        return {"kind": self.kind, "weights": self.weights.tolist(),
                "components": [c.to_json() for c in self.components]}


class _BoundMixture:
    """A mixture with its per-sample component choice fixed for one chunk."""

    def __init__(self, mix: MixtureStrategy, choice: np.ndarray):
        self.mix, self.choice = mix, choice

    def answers(self, player: int, q: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        out = np.empty_like(q)
        for k, comp in enumerate(self.mix.components):
            sel = self.choice == k
            if sel.any():
                out[sel] = comp.answers(player, q[sel], rng)
        return out


def strategy_from_json(obj: dict):
    kind = obj.get("kind", "product")
    if kind == "product":
        return ProductStrategy(DeterministicStrategy(tuple(tuple(m) for m in obj["maps"])))
    if kind == "neighbor":
        return NeighborStrategy(obj["tables"])
    if kind == "mixture":
        return MixtureStrategy(obj["weights"], [strategy_from_json(c) for c in obj["components"]])
    raise ValidationError(f"unknown strategy kind {kind!r}")


def neighbor_sum_strategy(game: Game) -> NeighborStrategy:
    """Player 0 answers ``(q_k + q_{k+1}) mod |A|`` (by index); the others
    answer ``q_k mod |A|``."""
    tables = []
    for p in range(game.players):
        nq, na = len(game.questions[p]), len(game.answers[p])
        u, v = np.indices((nq, nq))
        tables.append((u + v) % na if p == 0 else u % na)
    return NeighborStrategy(tables)


# --------------------------------------------------------------------------
# simulation


@dataclass
class SimConfig:
    game: Game
    strategy: Any
    n: int
    coords: tuple[int, ...]
    target: int
    samples: int
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        self.coords = tuple(sorted(set(int(c) for c in self.coords)))
        if self.n < 1 or self.samples < 1 or self.workers < 1:
            raise ValidationError("need n >= 1, samples >= 1 and workers >= 1")
        if any(not 0 <= c < self.n for c in self.coords):
            raise ValidationError("conditioning coordinates must lie in [0, n)")
        if not 0 <= self.target < self.n or self.target in self.coords:
            raise ValidationError("target coordinate must lie in [0, n) and outside C")
        if self.game.players < 2:
            raise ValidationError("closeness estimates need at least two players")


@dataclass
class _Draw:
    q: np.ndarray      # (players, samples, n) question indices
    a: np.ndarray      # (players, samples, n) answer indices
    won_c: np.ndarray  # (samples,) bool


def _chunk(cfg: SimConfig, support: np.ndarray, mass: np.ndarray, c: int) -> tuple[np.ndarray, np.ndarray]:
    N, n = cfg.game.players, cfg.n
    m = min(CHUNK, cfg.samples - c * CHUNK)
    q = np.empty((N, m, n), dtype=np.int64)
    for k in range(n):
        draw = philox(cfg.seed, _QUESTIONS, k, c).choice(len(support), size=m, p=mass)
        q[:, :, k] = support[draw].T
    srng = philox(cfg.seed, _STRATEGY, 0, c)
    strat = cfg.strategy
    if isinstance(strat, MixtureStrategy):
        strat = strat.draw(m, srng)
    a = np.stack([strat.answers(p, q[p], srng) for p in range(N)])
    return q, a


def _sample(cfg: SimConfig) -> _Draw:
    g = cfg.game
    N = g.players
    index = g._question_index()
    support = np.array([index[tuple(s)] for s in g.distribution.support], dtype=np.int64)
    mass = np.asarray([float(m) for m in g.distribution.mass])
    mass = mass / mass.sum()
    n_chunks = -(-cfg.samples // CHUNK)
    work = lambda c: _chunk(cfg, support, mass, c)  # noqa: E731
    if cfg.workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(work, range(n_chunks)))
    else:
        parts = [work(c) for c in range(n_chunks)]
    qs = [p[0] for p in parts]
    as_ = [p[1] for p in parts]
    q = np.concatenate(qs, axis=1)
    a = np.concatenate(as_, axis=1)
    won = np.ones(cfg.samples, dtype=bool)
    for k in cfg.coords:
        won &= g.wins[tuple(q[p, :, k] for p in range(N)) + tuple(a[p, :, k] for p in range(N))]
    return _Draw(q, a, won)


def _omega_codes(cfg: SimConfig, d: _Draw) -> tuple[np.ndarray, list[tuple[str, int, int]]]:
    """Integer code of Omega per sample, plus the digit layout for decoding."""
    g = cfg.game
    N = g.players
    layout: list[tuple[str, int, int]] = []
    cols = []
    for k in range(cfg.n):
        if k == cfg.target:
            continue
        for p in range(N):
            layout.append(("q", k, p))
            cols.append((d.q[p, :, k], len(g.questions[p])))
        if k not in cfg.coords:
            for p in range(N):
                layout.append(("a", k, p))
                cols.append((d.a[p, :, k], len(g.answers[p])))
    code = np.zeros(d.q.shape[1], dtype=np.int64)
    radix = 1
    for vals, base in cols:
        code = code * base + vals
        radix *= base
        if radix >= 2**62:
            raise ValidationError("transcript alphabet too large to encode")
    return code, layout


@dataclass
class ClosenessReport:
    samples: int
    n: int
    coords: list[int]
    target: int
    seed: int
    n_win: int
    p_win: float
    win_halfwidth: float
    mean_gap: float
    cells: list[dict] = field(default_factory=list)
    tables: list[dict] = field(default_factory=list, repr=False)
    low_support: bool = False

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _conditional(counts: dict[int, int]) -> tuple[dict[int, float], dict[int, float], int]:
    m = sum(counts.values())
    probs = {w: c / m for w, c in counts.items()}
    hws = {w: float(wilson_halfwidth(c, m)) for w, c in counts.items()}
    return probs, hws, m


def _gap(a: tuple, b: tuple) -> tuple[float, float]:
    pa, ha, ma = a
    pb, hb, mb = b
    keys = set(pa) | set(pb)
    gap = sum(abs(pa.get(w, 0.0) - pb.get(w, 0.0)) for w in keys)
    # cells absent from one table still carry that table's zero-count half-width
    hw = sum(ha.get(w, float(wilson_halfwidth(0, ma))) + hb.get(w, float(wilson_halfwidth(0, mb)))
             for w in keys)
    return gap, hw


def simulate_conditional(cfg: SimConfig) -> ClosenessReport:
    d = _sample(cfg)
    won = d.won_c
    n_win = int(won.sum())
    if n_win == 0:
        raise NoWinningSamples("the conditioning event W_C never occurred")
    code, _ = _omega_codes(cfg, d)
    x = d.q[0, won, cfg.target]
    y = d.q[1, won, cfg.target]
    w = code[won]
    keys, counts = np.unique(np.stack([x, y, w]), axis=1, return_counts=True)
    by_x: dict[int, dict[int, int]] = {}
    by_y: dict[int, dict[int, int]] = {}
    by_xy: dict[tuple[int, int], dict[int, int]] = {}
    for (xi, yi, wi), c in zip(keys.T.tolist(), counts.tolist()):
        by_x.setdefault(xi, {}).setdefault(wi, 0)
        by_x[xi][wi] += c
        by_y.setdefault(yi, {}).setdefault(wi, 0)
        by_y[yi][wi] += c
        by_xy.setdefault((xi, yi), {})[wi] = c
    cx = {k: _conditional(v) for k, v in by_x.items()}
    cy = {k: _conditional(v) for k, v in by_y.items()}
    g = cfg.game
    cells = []
    mean_gap = 0.0
    low = False
    for (xi, yi) in sorted(by_xy):
        cxy = _conditional(by_xy[(xi, yi)])
        g1, h1 = _gap(cx[xi], cxy)
        g2, h2 = _gap(cxy, cy[yi])
        g3, h3 = _gap(cx[xi], cy[yi])
        m = cxy[2]
        flag = m < LOW_SUPPORT_COUNT
        low |= flag
        cells.append({
            "x": g.questions[0][xi], "y": g.questions[1][yi], "count": m,
            "count_x": cx[xi][2], "count_y": cy[yi][2],
            "gap_x_xy": g1, "gap_xy_y": g2, "gap_x_y": g3,
            "halfwidth_x_xy": h1, "halfwidth_xy_y": h2, "halfwidth_x_y": h3,
            "low_support": flag,
        })
        mean_gap += (m / n_win) * (g1 + g2) / 2
    tables = []
    for name, groups in (("x", by_x), ("y", by_y), ("xy", by_xy)):
        for key in sorted(groups):
            probs, hws, m = _conditional(groups[key])
            for wi in sorted(probs):
                tables.append({"conditioning": name, "key": _key_label(g, name, key),
                               "omega": int(wi), "count": groups[key][wi],
                               "prob": probs[wi], "halfwidth": hws[wi]})
    return ClosenessReport(
        samples=cfg.samples, n=cfg.n, coords=list(cfg.coords), target=cfg.target, seed=cfg.seed,
        n_win=n_win, p_win=n_win / cfg.samples,
        win_halfwidth=float(wilson_halfwidth(n_win, cfg.samples)),
        mean_gap=mean_gap, cells=cells, tables=tables, low_support=low,
    )


def _key_label(g: Game, name: str, key) -> str:
    if name == "x":
        return g.questions[0][key]
    if name == "y":
        return g.questions[1][key]
    return f"{g.questions[0][key[0]]},{g.questions[1][key[1]]}"


def decode_omega(cfg: SimConfig, code: int) -> dict[str, str]:
    """Human-readable transcript for an Omega code."""
    d = _Draw(np.zeros((cfg.game.players, 1, cfg.n), dtype=np.int64),
              np.zeros((cfg.game.players, 1, cfg.n), dtype=np.int64), np.ones(1, bool))
    _, layout = _omega_codes(cfg, d)
    g = cfg.game
    out = {}
    for kind, k, p in reversed(layout):
        alph = g.questions[p] if kind == "q" else g.answers[p]
        code, digit = divmod(code, len(alph))
        out[f"{kind}{p}@{k}"] = alph[digit]
    return dict(reversed(list(out.items())))


def report_csv(report: ClosenessReport) -> tuple[str, str]:
    """(cells CSV, conditional tables CSV)."""
    out = []
    for rows in (report.cells, report.tables):
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        out.append(buf.getvalue())
    return out[0], out[1]


def marginal_equality_check(cfg: SimConfig) -> dict:
    """Compare each player's question marginal at the target coordinate,
    given W_C, against the marginal pooled over all players."""
    g = cfg.game
    if len(set(g.questions)) != 1:
        raise ValidationError("marginal equality needs identical question alphabets")
    d = _sample(cfg)
    won = d.won_c
    m = int(won.sum())
    if m == 0:
        raise NoWinningSamples("the conditioning event W_C never occurred")
    nq = len(g.questions[0])
    per = np.stack([np.bincount(d.q[p, won, cfg.target], minlength=nq) for p in range(g.players)])
    pooled_counts = per.sum(axis=0)
    pooled = pooled_counts / pooled_counts.sum()
    hw_pooled = wilson_halfwidth(pooled_counts, pooled_counts.sum())
    players = []
    for p in range(g.players):
        prob = per[p] / m
        gap = float(np.abs(prob - pooled).sum())
        hw = float((wilson_halfwidth(per[p], m) + hw_pooled).sum())
        players.append({"player": p, "gap": gap, "halfwidth": hw, "holds": gap <= 3 * hw,
                        "marginal": dict(zip(g.questions[0], prob.tolist()))})
    return {"n_win": m, "pooled": dict(zip(g.questions[0], pooled.tolist())),
            "players": players, "holds": all(r["holds"] for r in players)}


# --------------------------------------------------------------------------
# anchoring distributions and probabilistic facts


def anchored_question_dist(p: ProbTable, eta: Any) -> ProbTable:
    """P_{M|D}(q) = P[q]/(1 - eta) for q != ⊥ and (alpha - eta)/(1 - eta) at ⊥,
    where alpha = P[⊥] must equal 2 eta."""
    e = as_number(eta)
    if not 0 < e < Fraction(1, 2):
        raise RangeError("eta must lie in (0, 1/2)")
    if ANCHOR not in p.support:
        raise AlphaEtaMismatch("distribution has no anchor label")
    alpha = p[ANCHOR]
    if abs(float(alpha) - 2 * float(e)) > 1e-12:
        raise AlphaEtaMismatch(f"alpha={alpha} but 2*eta={2 * e}")
    if not p.exact:
        e = float(e)
    out = {lab: (alpha - e) / (1 - e) if lab == ANCHOR else m / (1 - e)
           for lab, m in zip(p.support, p.mass)}
    return ProbTable.from_dict(out)


PROBFACT_COLUMNS = ["trial", "check", "lhs", "rhs", "holds"]


def probfact_fuzz(trials: int, dims: int = 8, seed: int = 0, events: int = 100) -> list[dict]:
    """Fuzz the event bound, the coupling bound and the product-measure chain."""
    if not 2 <= dims <= 16:
        raise RangeError("dims must lie in [2, 16]")
    rows = []
    tol = 1e-12
    for t in range(trials):
        rng = philox(seed, t)
        d = int(rng.integers(2, dims + 1))
        joint = rng.dirichlet(np.full(d * d, rng.choice([0.1, 1.0]))).reshape(d, d)
        lam = rng.uniform()
        joint = lam * joint + (1 - lam) * np.diag(rng.dirichlet(np.ones(d))) if t % 3 == 0 else joint
        p, q = joint.sum(axis=1), joint.sum(axis=0)
        dist = float(np.abs(p - q).sum())
        ev = rng.integers(0, 2, size=(events, d)).astype(bool)
        worst = float(np.abs(ev @ (p - q)).max())
        rows.append({"trial": t, "check": "event_half_l1", "lhs": worst, "rhs": dist / 2,
                     "holds": worst <= dist / 2 + tol})
        differ = float(1 - np.trace(joint))
        rows.append({"trial": t, "check": "coupling", "lhs": dist, "rhs": 2 * differ,
                     "holds": dist <= 2 * differ + tol})
        r, s = rng.dirichlet(np.ones(d)), rng.dirichlet(np.ones(d))
        same = float(np.abs(np.outer(p, r) - np.outer(q, r)).sum())
        swapped = float(np.abs(np.outer(p, r) - np.outer(q, s)).sum())
        rows.append({"trial": t, "check": "product_chain", "lhs": dist, "rhs": same,
                     "holds": dist <= same + tol and same <= swapped + tol})
    return rows


def probfact_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=PROBFACT_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()
