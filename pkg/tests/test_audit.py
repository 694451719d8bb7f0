import json
import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anchorlab.audit import (
    AUDIT_FUZZ_COLUMNS, XorStrategy, anticommutator_residual, audit, audit_fuzz, block_identity_check,
    canonical_chsh_strategy, condition_zero_epsilon, equivalence_residuals, expansion_residual,
    majoranas, permutation_error_residual, perturb, polar_residual, polar_unitary, rotate_observable,
    trivial_strategy, wedge_polar_residual,
)
from anchorlab.errors import EmptyPairSet, EvenN, InvalidStrategy, RangeError
from anchorlab.quantum import X, Z, phi_plus, random_pure


def kron_expect(s, a, b):
    """<psi| a (x) b |psi> built from the full Kronecker product."""
    return np.vdot(s.psi, np.kron(a, b) @ s.psi).real


def oracle_m(s):
    tot = 0.0
    pairs = list(combinations(range(s.n), 2))
    for i, j in pairs:
        Ai, Aj = s.A[i], s.A[j]
        tot += kron_expect(s, Ai + Aj, s.B[(i, j)]) + kron_expect(s, Ai - Aj, s.B[(j, i)])
    return tot / (4 * len(pairs))


def oracle_sym_sum(s):
    dA, dB = s.dA, s.dB
    IA, IB = np.eye(dA), np.eye(dB)
    tot = 0.0
    for i, j in combinations(range(s.n), 2):
        for a, b in (((s.A[i] + s.A[j]) / math.sqrt(2), s.B[(i, j)]), ((s.A[i] - s.A[j]) / math.sqrt(2), s.B[(j, i)])):
            v = np.kron(a, IB) @ s.psi - np.kron(IA, b) @ s.psi
            tot += np.vdot(v, v).real
    return tot


# ------------------------------------------------------------------ canonical optimum


@pytest.mark.parametrize("n", [2, 3])
def test_canonical_optimum(n):
    s = canonical_chsh_strategy(n)
    cz = condition_zero_epsilon(s)
    assert cz.m == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert abs(cz.epsilon) <= 1e-9
    eq = equivalence_residuals(s)
    assert max(eq.sym_plus, eq.sym_minus, eq.rev_plus, eq.rev_minus) <= 1e-9
    assert eq.second_characterization.holds and eq.reversed_characterization.holds and eq.exact
    assert anticommutator_residual(s).value <= 1e-10
    assert polar_residual(s).value <= 1e-9


@pytest.mark.parametrize("n", [2, 3, 4])
def test_majoranas_anticommute(n):
    ops = majoranas(n)
    d = ops[0].shape[0]
    assert d == 2 ** math.ceil(n / 2)
    for a in ops:
        assert np.allclose(a @ a, np.eye(d)) and np.allclose(a, a.conj().T)
    for a, b in combinations(ops, 2):
        assert np.allclose(a @ b + b @ a, 0)


def test_trivial_strategy():
    s = trivial_strategy(2)
    cz = condition_zero_epsilon(s)
    # A_i B = I: only the (A_i + A_j) terms survive, m = 2/4
    assert cz.m == pytest.approx(0.5)
    assert cz.epsilon == pytest.approx(1 - math.sqrt(2) / 2)
    eq = equivalence_residuals(s)
    assert eq.sym_plus + eq.sym_minus > 0
    assert eq.to_dict()["second_characterization"]["bound"] == pytest.approx(4 * cz.epsilon)
    psi = random_pure(4, np.random.default_rng(0))
    assert equivalence_residuals(trivial_strategy(2, psi=psi)).bound > 0


def test_commuting_observables_count_pairs():
    for n in (2, 3):
        s = XorStrategy(n, [Z] * n, {(i, j): Z for i in range(n) for j in range(n) if i != j}, phi_plus(2))
        assert anticommutator_residual(s).value == pytest.approx(n * (n - 1) / 2)


def test_condition_zero_matches_kron_oracle():
    rng = np.random.default_rng(3)
    for n in (2, 3):
        s = perturb(canonical_chsh_strategy(n), 0.2, rng)
        assert condition_zero_epsilon(s).m == pytest.approx(oracle_m(s), abs=1e-12)
        eq = equivalence_residuals(s)
        assert eq.sym_plus + eq.sym_minus == pytest.approx(oracle_sym_sum(s), abs=1e-12)


# ------------------------------------------------------------------ perturbations


def test_small_rotation():
    s = rotate_observable(canonical_chsh_strategy(2), 0, 0.01)
    eq = equivalence_residuals(s)
    assert eq.epsilon > 0
    assert eq.sym_plus + eq.sym_minus > 0
    assert eq.second_characterization.holds and eq.reversed_characterization.holds
    ac = anticommutator_residual(s)
    # A_0 rotated toward A_1 no longer anticommutes with A_1
    assert ac.holds and ac.value == pytest.approx(math.sin(0.01) ** 2)


def test_equivalence_sums_equal_bound_for_maximally_entangled():
    # with a maximally entangled state each pair of sums equals 2n(n-1) eps exactly
    s = rotate_observable(canonical_chsh_strategy(3), 1, 0.2)
    eq = equivalence_residuals(s)
    assert eq.sym_plus + eq.sym_minus == pytest.approx(eq.bound, rel=1e-9)


@pytest.mark.parametrize("n", [2, 3])
def test_residuals_continuous(n):
    base = canonical_chsh_strategy(n)
    thetas = [0.2, 0.1, 0.05, 0.02, 0.01, 0.001, 0.0]
    rows = []
    for t in thetas:
        s = perturb(base, t, np.random.default_rng(11))
        eq = equivalence_residuals(s)
        rows.append((abs(eq.epsilon), eq.sym_plus + eq.sym_minus, anticommutator_residual(s).value,
                     polar_residual(s).value))
    for k in range(4):
        col = [r[k] for r in rows]
        assert col[-1] <= 1e-9
        assert col[-2] <= 1e-2
        assert all(b <= a * 1.5 + 1e-12 for a, b in zip(col, col[1:]))


def test_fuzz_never_violates():
    rows = audit_fuzz(200, seed=0)
    assert len(rows) == 200 and list(rows[0]) == AUDIT_FUZZ_COLUMNS
    assert all(r["holds"] for r in rows)
    assert {r["n"] for r in rows} == {2, 3}
    assert audit_fuzz(5, seed=1) == audit_fuzz(5, seed=1)


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.sampled_from([2, 3]), st.floats(0, 0.5))
def test_residual_bounds_random(seed, n, theta):
    s = perturb(canonical_chsh_strategy(n), theta, np.random.default_rng(seed))
    eq = equivalence_residuals(s)
    assert eq.second_characterization.holds
    assert eq.reversed_characterization.holds
    assert anticommutator_residual(s).holds


# ------------------------------------------------------------------ block identity


@pytest.mark.parametrize("n", [1, 3, 5, 7, 9])
def test_block_identity(n):
    rep = block_identity_check(n)
    assert rep.deviation <= 1e-10 and rep.holds
    assert rep.dim == 2 ** math.ceil(n / 2)
    assert rep.anticommutation_deviation <= 1e-12
    # all but possibly the last factor stay Hermitian
    assert all(rep.hermitian[:-1])
    assert rep.hermitian[-1] == (n % 4 == 1)


def test_block_identity_errors():
    with pytest.raises(EvenN):
        block_identity_check(2)
    with pytest.raises(RangeError):
        block_identity_check(11)


# ------------------------------------------------------------------ permutations and polar parts


def test_permutation_identity():
    s = canonical_chsh_strategy(3)
    rep = permutation_error_residual(s, [1, 1, 1])
    assert rep.residual == 0 and rep.holds


def test_permutation_swap_is_two():
    rep = permutation_error_residual(canonical_chsh_strategy(2), [1, 1], j1=0)
    # A1 A2 - A2 A1 = 2 A1 A2 for anticommuting involutions
    assert rep.residual == pytest.approx(2)
    assert rep.signed_residual == pytest.approx(0, abs=1e-12)
    assert rep.holds


def test_permutation_perturbed_and_errors():
    s = perturb(canonical_chsh_strategy(3), 0.1, np.random.default_rng(2))
    rep = permutation_error_residual(s, [1, 0, 1], perm=[2, 1, 0])
    assert rep.bound > 0 and rep.to_dict()["holds"] == rep.holds
    with pytest.raises(InvalidStrategy):
        permutation_error_residual(s, [1, 1])
    with pytest.raises(InvalidStrategy):
        permutation_error_residual(s, [1, 1, 1], perm=[0, 0, 1])
    with pytest.raises(InvalidStrategy):
        permutation_error_residual(s, [1, 1, 1], j1=2)


def test_polar_unitary():
    m = np.array([[2.0, 0], [0, -3]])
    assert np.allclose(polar_unitary(m), np.diag([1, -1]))
    u = polar_unitary(np.random.default_rng(0).normal(size=(3, 3)))
    assert np.allclose(u @ u.T, np.eye(3))


def test_appendix_literal_readings():
    s = canonical_chsh_strategy(2)
    w = (2 + math.sqrt(2)) / 4
    ex = expansion_residual(s, [1, 1])
    assert ex.value == pytest.approx(1 - w)
    assert not ex.holds  # residual stays at 1 - omega while the bound vanishes with eps
    assert expansion_residual(s, [1, 1], omega=1).value == pytest.approx(0, abs=1e-12)
    wp = wedge_polar_residual(s)
    assert wp.value > 1 and not wp.holds
    with pytest.raises(RangeError):
        expansion_residual(s, [1, 1], sign=2)


# ------------------------------------------------------------------ validation and I/O


def test_n1_has_no_pairs():
    s = canonical_chsh_strategy(1)
    with pytest.raises(EmptyPairSet):
        condition_zero_epsilon(s)


def test_invalid_strategies():
    good = canonical_chsh_strategy(2)
    with pytest.raises(InvalidStrategy):
        XorStrategy(2, [X, np.diag([1.0, 0.5])], good.B, good.psi)
    with pytest.raises(InvalidStrategy):
        XorStrategy(2, good.A, {(0, 1): X}, good.psi)
    with pytest.raises(InvalidStrategy):
        XorStrategy(2, good.A, good.B, 2 * good.psi)
    with pytest.raises(InvalidStrategy):
        XorStrategy(2, good.A, good.B, np.ones(8) / math.sqrt(8))
    with pytest.raises(InvalidStrategy):
        XorStrategy.from_json({"n": 2, "A": []})


def test_json_round_trip():
    s = perturb(canonical_chsh_strategy(3), 0.1, np.random.default_rng(5))
    text = json.dumps(s.to_json())
    back = XorStrategy.from_json(json.loads(text))
    assert np.array_equal(back.psi, s.psi)
    assert all(np.array_equal(a, b) for a, b in zip(back.A, s.A))
    assert all(np.array_equal(back.B[k], s.B[k]) for k in s.B)
    obj = json.loads(text)
    obj["dA"] = 3
    with pytest.raises(InvalidStrategy):
        XorStrategy.from_json(obj)


def test_nested_list_format():
    obj = {"n": 2, "A": [[[1, 0], [0, -1]], [[0, 1], [1, 0]]],
           "B": [[None, [[1, 0], [0, 1]]], [[[1, 0], [0, 1]], None]],
           "psi": [[0.7071067811865476, 0], 0, 0, [0.7071067811865476, 0]]}
    s = XorStrategy.from_json(obj)
    assert s.dA == s.dB == 2


def test_audit_report():
    rep = audit(canonical_chsh_strategy(2))
    assert set(rep) >= {"condition_zero", "equivalence", "anticommutator", "permutation", "polar", "appendix"}
    json.dumps(rep)
    only = audit(canonical_chsh_strategy(2), ["anticommutator"])
    assert "equivalence" not in only
    with pytest.raises(RangeError):
        audit(canonical_chsh_strategy(2), ["nope"])
