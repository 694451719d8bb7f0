import csv
import io
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anchorlab.errors import AlphaEtaMismatch, NoWinningSamples, RangeError, ValidationError
from anchorlab.games import (
    ANCHOR, DeterministicStrategy, ProbTable, anchor, chsh, classical_value, constant_game, ffl,
)
from anchorlab.repetition import (
    CHUNK, PROBFACT_COLUMNS, MixtureStrategy, NeighborStrategy, ProductStrategy, SimConfig,
    anchored_question_dist, decode_omega, marginal_equality_check, neighbor_sum_strategy,
    probfact_csv, probfact_fuzz, report_csv, simulate_conditional, strategy_from_json,
    wilson_halfwidth,
)

ZERO = ProductStrategy(DeterministicStrategy(((0, 0), (0, 0))))


def cfg(**kw):
    base = dict(game=chsh(), strategy=ZERO, n=2, coords=(0,), target=1, samples=20000, seed=1)
    base.update(kw)
    return SimConfig(**base)


# ------------------------------------------------------------------ anchoring distribution


def test_anchored_question_dist_example():
    p = ProbTable.from_dict({"a": Fraction(1, 2), ANCHOR: Fraction(1, 2)})
    out = anchored_question_dist(p, Fraction(1, 4))
    assert out["a"] == Fraction(2, 3) and out[ANCHOR] == Fraction(1, 3)
    out = anchored_question_dist(ProbTable.from_dict({"a": 0.5, ANCHOR: 0.5}), 0.25)
    assert out["a"] == Fraction(2, 3)


def test_anchored_question_dist_errors():
    p = ProbTable.from_dict({"a": 0.5, ANCHOR: 0.5})
    with pytest.raises(AlphaEtaMismatch):
        anchored_question_dist(p, 0.2)
    with pytest.raises(AlphaEtaMismatch):
        anchored_question_dist(ProbTable.from_dict({"a": 1}), 0.25)
    with pytest.raises(RangeError):
        anchored_question_dist(p, 0.5)


@given(st.integers(1, 499), st.lists(st.integers(1, 20), min_size=1, max_size=5))
def test_anchored_question_dist_sums_to_one(eta_milli, weights):
    eta = Fraction(eta_milli, 1000)
    alpha = 2 * eta
    total = sum(weights)
    mass = {f"q{i}": (1 - alpha) * Fraction(w, total) for i, w in enumerate(weights)}
    mass[ANCHOR] = alpha
    out = anchored_question_dist(ProbTable.from_dict(mass), eta)
    assert sum(out.mass) == 1
    assert out.exact


def test_anchored_question_dist_small_eta():
    eta = Fraction(1, 10**9)
    p = ProbTable.from_dict({"a": (1 - 2 * eta) / 3, "b": 2 * (1 - 2 * eta) / 3, ANCHOR: 2 * eta})
    out = anchored_question_dist(p, eta)
    assert float(out["a"]) == pytest.approx(1 / 3) and float(out[ANCHOR]) == pytest.approx(0, abs=1e-8)


# ------------------------------------------------------------------ simulation


def test_config_validation():
    with pytest.raises(ValidationError):
        cfg(target=0)
    with pytest.raises(ValidationError):
        cfg(coords=(5,))
    with pytest.raises(ValidationError):
        cfg(samples=0)
    with pytest.raises(ValidationError):
        cfg(workers=0)


def test_deterministic():
    a = simulate_conditional(cfg(samples=3 * CHUNK + 7)).to_dict()
    b = simulate_conditional(cfg(samples=3 * CHUNK + 7)).to_dict()
    c = simulate_conditional(cfg(samples=3 * CHUNK + 7, seed=2)).to_dict()
    assert a == b and a != c


def test_worker_count_does_not_change_report():
    mix = MixtureStrategy([0.3, 0.7], [ZERO, neighbor_sum_strategy(chsh())])
    one = simulate_conditional(cfg(strategy=mix, samples=4 * CHUNK, workers=1)).to_dict()
    four = simulate_conditional(cfg(strategy=mix, samples=4 * CHUNK, workers=4)).to_dict()
    assert one == four


def test_prefix_stability():
    # chunk c of a longer run is chunk c of a shorter run
    small = simulate_conditional(cfg(coords=(), samples=CHUNK))
    big = simulate_conditional(cfg(coords=(), samples=2 * CHUNK))
    assert small.n_win == CHUNK and big.n_win == 2 * CHUNK
    assert small.tables[0]["count"] <= big.tables[0]["count"]


def test_unconditioned_single_coordinate():
    rep = simulate_conditional(cfg(n=1, coords=(), target=0, samples=50000))
    assert rep.p_win == 1
    for cell in rep.cells:
        # Omega is empty, so all three conditionals are the point mass
        assert cell["gap_x_xy"] == cell["gap_xy_y"] == cell["gap_x_y"] == 0
    counts = {(c["x"], c["y"]): c["count"] for c in rep.cells}
    for k in counts.values():
        assert abs(k / 50000 - 0.25) <= 3 * float(wilson_halfwidth(k, 50000))


@pytest.mark.parametrize("game", [chsh(), ffl()])
def test_product_strategy_closeness_without_conditioning(game):
    rep = simulate_conditional(cfg(game=game, n=3, coords=(), target=1, samples=60000, seed=5))
    for c in rep.cells:
        assert c["gap_x_xy"] <= 3 * c["halfwidth_x_xy"]
        assert c["gap_xy_y"] <= 3 * c["halfwidth_xy_y"]
        assert c["gap_x_y"] <= 3 * c["halfwidth_x_y"]


def test_product_strategy_x_independence_with_conditioning():
    # the product strategy keeps coordinates independent even given W_C
    rep = simulate_conditional(cfg(n=3, coords=(0, 2), target=1, samples=80000, seed=3))
    assert rep.p_win == pytest.approx(0.75**2, abs=0.01)
    x_tables = {}
    for row in rep.tables:
        if row["conditioning"] == "x":
            x_tables.setdefault(row["key"], {})[row["omega"]] = (row["prob"], row["halfwidth"])
    t0, t1 = x_tables["0"], x_tables["1"]
    for w in set(t0) | set(t1):
        p0, h0 = t0.get(w, (0, 0))
        p1, h1 = t1.get(w, (0, 0))
        assert abs(p0 - p1) <= 3 * (h0 + h1)


def test_neighbor_strategy_creates_dependence():
    g = anchor(chsh(), 0.3)
    rep = simulate_conditional(cfg(game=g, strategy=neighbor_sum_strategy(g), n=3, coords=(0, 1),
                                   target=2, samples=200000, seed=7))
    assert rep.mean_gap > 0.1
    # player 0's answer at coordinate 1 reads the target question, so Omega
    # tracks X_i but not Y_i
    assert all(c["gap_x_y"] > 2 * c["halfwidth_x_y"] for c in rep.cells)


def test_gap_decreases_with_alpha():
    gaps = []
    for alpha in (0.3, 0.6):
        g = anchor(chsh(), alpha)
        rep = simulate_conditional(cfg(game=g, strategy=neighbor_sum_strategy(g), n=3, coords=(0, 1),
                                       target=2, samples=300000, seed=7))
        gaps.append(rep.mean_gap)
    assert gaps[1] < gaps[0]


def test_wilson_shrinks_by_sqrt2():
    r1 = simulate_conditional(cfg(coords=(), samples=40000, seed=4))
    r2 = simulate_conditional(cfg(coords=(), samples=80000, seed=4))
    for a, b in zip(r1.tables, r2.tables):
        if a["count"] >= 100:
            assert a["halfwidth"] / b["halfwidth"] == pytest.approx(math.sqrt(2), rel=0.1)


def test_wilson_formula():
    # textbook value: 50 successes out of 100
    assert float(wilson_halfwidth(50, 100)) == pytest.approx(0.0962, abs=1e-4)
    assert float(wilson_halfwidth(0, 100)) == pytest.approx(0.0185, abs=1e-4)
    assert float(wilson_halfwidth(0, 0)) == math.inf


def test_no_winning_samples():
    with pytest.raises(NoWinningSamples):
        simulate_conditional(cfg(game=constant_game(False), coords=(0,), samples=100))


def test_low_support_flag():
    rep = simulate_conditional(cfg(n=2, samples=30))
    assert rep.low_support


def test_report_gaps_nonnegative_and_counts_consistent():
    rep = simulate_conditional(cfg(n=3, coords=(0,), target=2, samples=30000))
    assert sum(c["count"] for c in rep.cells) == rep.n_win
    for c in rep.cells:
        assert min(c["gap_x_xy"], c["gap_xy_y"], c["gap_x_y"]) >= 0
        assert c["gap_x_y"] <= c["gap_x_xy"] + c["gap_xy_y"] + 1e-12
    for cond in ("x", "y", "xy"):
        assert sum(r["count"] for r in rep.tables if r["conditioning"] == cond) == rep.n_win


def test_report_csv_and_decode():
    c = cfg(n=2, coords=(0,), target=1, samples=5000)
    rep = simulate_conditional(c)
    cells, tables = report_csv(rep)
    rows = list(csv.DictReader(io.StringIO(cells)))
    assert len(rows) == len(rep.cells) and "gap_x_xy" in rows[0]
    trows = list(csv.DictReader(io.StringIO(tables)))
    assert len(trows) == len(rep.tables)
    # Omega for n=2, C={0}, target 1 holds only the two questions at coordinate 0
    labels = decode_omega(c, rep.tables[0]["omega"])
    assert set(labels) == {"q0@0", "q1@0"}


def test_strategy_json_round_trip():
    mix = MixtureStrategy([0.5, 0.5], [ZERO, NeighborStrategy([np.eye(2, dtype=int), np.zeros((2, 2), int)])])
    back = strategy_from_json(mix.to_json())
    assert back.to_json() == mix.to_json()
    with pytest.raises(ValidationError):
        strategy_from_json({"kind": "quantum"})
    with pytest.raises(ValidationError):
        MixtureStrategy([0.5, 0.6], [ZERO, ZERO])


# ------------------------------------------------------------------ marginal equality


def test_marginal_equality_unconditioned():
    rep = marginal_equality_check(cfg(coords=(), samples=40000))
    assert rep["holds"]


def test_marginal_equality_symmetric():
    # FFL question distribution is symmetric under swapping the players
    g = ffl()
    s = ProductStrategy(classical_value(g, return_strategy=True)[1])
    rep = marginal_equality_check(cfg(game=g, strategy=s, n=2, coords=(0,), target=1, samples=40000))
    assert rep["holds"]


def test_marginal_equality_reports_asymmetric_conditioning():
    g = anchor(chsh(), 0.3)
    rep = marginal_equality_check(cfg(game=g, strategy=neighbor_sum_strategy(g), n=3, coords=(0, 1),
                                      target=2, samples=50000))
    assert {"gap", "halfwidth", "holds"} <= set(rep["players"][0])
    assert sum(rep["pooled"].values()) == pytest.approx(1)


# ------------------------------------------------------------------ probabilistic facts


def test_probfact_fuzz_zero_failures():
    rows = probfact_fuzz(10**4, dims=8, seed=0)
    assert len(rows) == 3 * 10**4
    assert all(r["holds"] for r in rows)


def test_probfact_csv_and_determinism():
    a = probfact_csv(probfact_fuzz(20, seed=3))
    assert a == probfact_csv(probfact_fuzz(20, seed=3))
    parsed = list(csv.DictReader(io.StringIO(a)))
    assert list(parsed[0]) == PROBFACT_COLUMNS
    with pytest.raises(RangeError):
        probfact_fuzz(1, dims=17)


def test_probfact_trivial_cases():
    # p = q with a diagonal coupling, and point masses at distinct labels
    p = np.array([0.5, 0.5])
    joint = np.diag(p)
    assert np.abs(joint.sum(1) - joint.sum(0)).sum() == 0 == 1 - np.trace(joint)
    joint = np.array([[0, 1], [0, 0]])
    assert np.abs(joint.sum(1) - joint.sum(0)).sum() == 2 <= 2 * (1 - np.trace(joint))


@settings(max_examples=20)
@given(st.integers(0, 2**31))
def test_probfact_random_seeds(seed):
    assert all(r["holds"] for r in probfact_fuzz(50, dims=16, seed=seed))
