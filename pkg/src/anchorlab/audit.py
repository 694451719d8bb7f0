"""Numerical audits of near-optimal CHSH(n) strategies.

A CHSH(n) strategy has ``n`` +-1 observables ``A_i`` for the first player,
observables ``B_ij`` for every ordered pair ``i != j`` for the second, and a
shared pure state.  Every residual below is a plain norm computed from the
strategy; the bound it is compared against uses the epsilon measured by
:func:`condition_zero_epsilon` unless one is supplied.

For a bipartite vector ``psi`` with matrix form ``M`` (see
:func:`anchorlab.quantum.matricize`), ``(P (x) Q) psi`` is ``P M Q^T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Sequence

import numpy as np

from .errors import EmptyPairSet, EvenN, InvalidStrategy, RangeError
from .quantum import X, Y, Z, I2, kron, matricize, phi_plus, to_json, from_json

INVOLUTION_TOL = 1e-10
SLACK = 1e-9
EPS_FLOOR = 1e-12
MAX_BLOCK_N = 9


@dataclass
class XorStrategy:
    n: int
    A: list[np.ndarray]
    B: dict[tuple[int, int], np.ndarray]
    psi: np.ndarray

    def __post_init__(self) -> None:
        self.A = [np.asarray(a, dtype=complex) for a in self.A]
        self.B = {k: np.asarray(b, dtype=complex) for k, b in self.B.items()}
        self.psi = np.asarray(self.psi, dtype=complex).ravel()
        self.validate()

    @property
    def dA(self) -> int:
        return self.A[0].shape[0]

    @property
    def dB(self) -> int:
        return next(iter(self.B.values())).shape[0] if self.B else self.psi.size // self.dA

    def validate(self) -> None:
        if self.n < 1 or len(self.A) != self.n:
            raise InvalidStrategy(f"expected {self.n} first-player observables, got {len(self.A)}")
        need = {(i, j) for i in range(self.n) for j in range(self.n) if i != j}
        if set(self.B) != need:
            raise InvalidStrategy("second-player observables must be given for every ordered pair i != j")
        for name, ops, d in (("A", self.A, self.dA), ("B", list(self.B.values()), self.dB)):
            for op in ops:
                if op.shape != (d, d):
                    raise InvalidStrategy(f"{name} observables must all be {d}x{d}")
                if np.abs(op - op.conj().T).max() > INVOLUTION_TOL:
                    raise InvalidStrategy(f"{name} observable is not Hermitian")
                if np.abs(op @ op - np.eye(d)).max() > INVOLUTION_TOL:
                    raise InvalidStrategy(f"{name} observable does not square to the identity")
        if self.psi.size != self.dA * self.dB:
            raise InvalidStrategy(f"state has size {self.psi.size}, expected {self.dA * self.dB}")
        if abs(np.linalg.norm(self.psi) - 1) > INVOLUTION_TOL:
            raise InvalidStrategy("shared state is not normalized")

    @property
    def M(self) -> np.ndarray:
        return matricize(self.psi, self.dA, self.dB)

    def act(self, a: np.ndarray | None = None, b: np.ndarray | None = None) -> np.ndarray:
        """Matrix form of ``(a (x) b) psi``; ``None`` means identity."""
        m = self.M
        if a is not None:
            m = a @ m
        if b is not None:
            m = m @ b.T
        return m

    def to_json(self) -> dict:
        B = [[None if i == j else to_json(self.B[(i, j)]) for j in range(self.n)] for i in range(self.n)]
        return {"n": self.n, "dA": self.dA, "dB": self.dB, "A": [to_json(a) for a in self.A],
                "B": B, "psi": to_json(self.psi)}

    @classmethod
    def from_json(cls, obj: dict) -> "XorStrategy":
        try:
            n = int(obj["n"])
            A = [_matrix(a) for a in obj["A"]]
            B = {(i, j): _matrix(obj["B"][i][j]) for i in range(n) for j in range(n) if i != j}
            psi = _vector(obj["psi"])
        except (KeyError, IndexError, TypeError) as exc:
            raise InvalidStrategy(f"malformed strategy file: {exc}") from None
        s = cls(n, A, B, psi)
        for key, d in (("dA", s.dA), ("dB", s.dB)):
            if key in obj and int(obj[key]) != d:
                raise InvalidStrategy(f"{key}={obj[key]} disagrees with the observables ({d})")
        return s


def _entry(x: Any) -> complex:
    if isinstance(x, (list, tuple)):
        return complex(x[0], x[1])
    return complex(x)


def _matrix(obj: Any) -> np.ndarray:
    if isinstance(obj, dict):
        return from_json(obj)
    return np.array([[_entry(v) for v in row] for row in obj], dtype=complex)


def _vector(obj: Any) -> np.ndarray:
    if isinstance(obj, dict):
        return from_json(obj, vector=True)
    return np.array([_entry(v) for v in obj], dtype=complex)


def _sq(m: np.ndarray) -> float:
    return float(np.vdot(m, m).real)


def _pairs(n: int) -> list[tuple[int, int]]:
    pairs = list(combinations(range(n), 2))
    if not pairs:
        raise EmptyPairSet("CHSH(n) needs n >= 2 (there are no question pairs)")
    return pairs


@dataclass
class Check:
    value: float
    bound: float
    holds: bool

    def to_dict(self) -> dict:
        return {"value": self.value, "bound": self.bound, "holds": self.holds}


def _check(value: float, bound: float, strict: bool = False) -> Check:
    ok = value < bound + SLACK if strict else value <= bound + SLACK
    return Check(float(value), float(bound), bool(ok))


# --------------------------------------------------------------------------
# the CHSH(n) score


@dataclass
class ConditionZero:
    m: float
    epsilon: float

    def to_dict(self) -> dict:
        return {"m": self.m, "epsilon": self.epsilon}


def condition_zero_epsilon(s: XorStrategy) -> ConditionZero:
    """Averaged CHSH(n) correlation ``m`` and ``eps = 1 - sqrt(2) m``."""
    pairs = _pairs(s.n)
    M = s.M
    total = 0.0
    for i, j in pairs:
        for a, b in ((s.A[i] + s.A[j], s.B[(i, j)]), (s.A[i] - s.A[j], s.B[(j, i)])):
            total += float(np.vdot(M, a @ M @ b.T).real)
    m = total / (4 * len(pairs))
    return ConditionZero(m, 1 - math.sqrt(2) * m)


def _eps(s: XorStrategy, eps: float | None) -> float:
    return condition_zero_epsilon(s).epsilon if eps is None else float(eps)


@dataclass
class EquivalenceReport:
    epsilon: float
    bound: float
    sym_plus: float
    sym_minus: float
    rev_plus: float
    rev_minus: float
    notes: list[str] = field(default_factory=list)

    @property
    def second_characterization(self) -> Check:
        return _check(self.sym_plus + self.sym_minus, self.bound)

    @property
    def reversed_characterization(self) -> Check:
        return _check(self.rev_plus + self.rev_minus, self.bound)

    @property
    def exact(self) -> bool:
        """All four sums vanish, as they must for an exactly optimal strategy."""
        return max(self.sym_plus, self.sym_minus, self.rev_plus, self.rev_minus) <= SLACK

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "bound": self.bound,
                "sums": {"sym_plus": self.sym_plus, "sym_minus": self.sym_minus,
                         "rev_plus": self.rev_plus, "rev_minus": self.rev_minus},
                "second_characterization": self.second_characterization.to_dict(),
                "reversed_characterization": self.reversed_characterization.to_dict(),
                "exact": self.exact, "notes": self.notes}


def equivalence_residuals(s: XorStrategy, eps: float | None = None) -> EquivalenceReport:
    """The four squared-norm sums over pairs i < j:

    * ``sym_plus``:  ||((A_i + A_j)/sqrt2 (x) I) psi - (I (x) B_ij) psi||^2
    * ``sym_minus``: ||((A_i - A_j)/sqrt2 (x) I) psi - (I (x) B_ji) psi||^2
    * ``rev_plus``:  ||(A_i (x) I) psi - (I (x) (B_ij + B_ji)/sqrt2) psi||^2
    * ``rev_minus``: ||(A_j (x) I) psi - (I (x) (B_ij - B_ji)/sqrt2) psi||^2

    Each pair of sums is compared against ``2 n (n - 1) eps``.
    """
    pairs = _pairs(s.n)
    e = _eps(s, eps)
    r2 = math.sqrt(2)
    sums = dict(sym_plus=0.0, sym_minus=0.0, rev_plus=0.0, rev_minus=0.0)
    for i, j in pairs:
        Ai, Aj, Bij, Bji = s.A[i], s.A[j], s.B[(i, j)], s.B[(j, i)]
        sums["sym_plus"] += _sq(s.act((Ai + Aj) / r2) - s.act(b=Bij))
        sums["sym_minus"] += _sq(s.act((Ai - Aj) / r2) - s.act(b=Bji))
        sums["rev_plus"] += _sq(s.act(Ai) - s.act(b=(Bij + Bji) / r2))
        sums["rev_minus"] += _sq(s.act(Aj) - s.act(b=(Bij - Bji) / r2))
    return EquivalenceReport(e, 2 * s.n * (s.n - 1) * e, **sums)


def anticommutator_residual(s: XorStrategy, eps: float | None = None) -> Check:
    """sum_{i<j} ||((A_i A_j + A_j A_i)/2 (x) I) psi||^2 against the strict
    bound 2 (7/3)^2 n (n - 1) eps (eps floored at 1e-12)."""
    pairs = _pairs(s.n)
    total = 0.0
    for i, j in pairs:
        ac = (s.A[i] @ s.A[j] + s.A[j] @ s.A[i]) / 2
        total += _sq(s.act(ac))
    e = max(_eps(s, eps), EPS_FLOOR)
    return _check(total, 2 * (7 / 3) ** 2 * s.n * (s.n - 1) * e, strict=True)


# --------------------------------------------------------------------------
# Clifford families


def majoranas(count: int) -> list[np.ndarray]:
    """First ``count`` Jordan-Wigner generators on ceil(count/2) qubits:
    Z..Z X I..I and Z..Z Y I..I.  Pairwise anticommuting Hermitian involutions."""
    if count < 1:
        raise RangeError("count must be >= 1")
    m = (count + 1) // 2
    out = []
    for k in range(m):
        for P in (X, Y):
            out.append(kron(*([Z] * k + [P] + [I2] * (m - k - 1))))
    return out[:count]


@dataclass
class BlockIdentityReport:
    n: int
    dim: int
    deviation: float
    involution_deviation: float
    anticommutation_deviation: float
    hermitian: list[bool]
    factors: list[np.ndarray] = field(repr=False, default_factory=list)

    @property
    def holds(self) -> bool:
        return self.deviation <= INVOLUTION_TOL

    def to_dict(self) -> dict:
        return {"n": self.n, "dim": self.dim, "deviation": self.deviation,
                "involution_deviation": self.involution_deviation,
                "anticommutation_deviation": self.anticommutation_deviation,
                "hermitian": self.hermitian, "holds": self.holds}


def block_identity_check(n: int) -> BlockIdentityReport:
    """Build an anticommuting family whose ordered product is the signed
    block identity (-1)^n diag(I, -I), and measure the deviation.

    The product ``P`` of the first ``n`` Jordan-Wigner generators satisfies
    ``P^2 = (-1)^{n(n-1)/2}``, so ``c P`` is a Hermitian involution for
    ``c = 1`` (n = 1 mod 4) or ``c = i`` (n = 3 mod 4).  Conjugating by an
    eigenbasis of ``c P`` and multiplying the last generator by ``(-1)^n c``
    gives the block form.  For n = 3 mod 4 that last factor is
    anti-Hermitian; no family of Hermitian factors can have a Hermitian
    product there, since reversing the product costs the same sign.
    """
    if n % 2 == 0:
        raise EvenN(f"n={n} is even; the block identity needs odd n")
    if not 1 <= n <= MAX_BLOCK_N:
        raise RangeError(f"n must lie in [1, {MAX_BLOCK_N}]")
    gens = majoranas(n)
    d = gens[0].shape[0]
    P = np.eye(d, dtype=complex)
    for g in gens:
        P = P @ g
    c = 1.0 if n % 4 == 1 else 1j
    H = c * P
    H = (H + H.conj().T) / 2
    w, U = np.linalg.eigh(H)
    U = U[:, ::-1]  # +1 eigenvectors first
    factors = [U.conj().T @ g @ U for g in gens]
    factors[-1] = (-1) ** n * c * factors[-1]
    prod = np.eye(d, dtype=complex)
    for f in factors:
        prod = prod @ f
    half = d // 2
    target = (-1) ** n * np.diag(np.r_[np.ones(half), -np.ones(d - half)]).astype(complex)
    sq = max(float(np.abs(f @ f - (f @ f)[0, 0] * np.eye(d)).max()) for f in factors)
    ac = 0.0
    for a, b in combinations(factors, 2):
        ac = max(ac, float(np.abs(a @ b + b @ a).max()))
    herm = [bool(np.abs(f - f.conj().T).max() <= INVOLUTION_TOL) for f in factors]
    return BlockIdentityReport(n, d, float(np.abs(prod - target).max()), sq, ac, herm, factors)


# --------------------------------------------------------------------------
# permutation and polar residuals


def _ordered_product(ops: Sequence[np.ndarray], exponents: Sequence[int], order: Sequence[int]) -> np.ndarray:
    d = ops[0].shape[0]
    out = np.eye(d, dtype=complex)
    for i in order:
        if exponents[i] % 2:
            out = out @ ops[i]
    return out


@dataclass
class PermutationReport:
    residual: float
    signed_residual: float
    bound: float
    epsilon: float

    @property
    def holds(self) -> bool:
        """The signed residual accounts for the anticommutation sign of the
        swapped pair and is the quantity the bound controls."""
        return self.signed_residual <= self.bound + SLACK

    def to_dict(self) -> dict:
        return {"residual": self.residual, "signed_residual": self.signed_residual,
                "bound": self.bound, "epsilon": self.epsilon, "holds": self.holds}


def permutation_error_residual(s: XorStrategy, exponents: Sequence[int], j1: int | None = None,
                               perm: Sequence[int] | None = None, eps: float | None = None) -> PermutationReport:
    """||((prod_i A_i^{j_i}) - (same product reordered)) (x) I) psi||.

    ``j1`` swaps the factors at positions j1 and j1 + 1; ``perm`` gives a
    full reordering instead.  With neither, the order is unchanged.  The
    bound is (100/9) n^2 sqrt(eps).
    """
    n = s.n
    if len(exponents) != n or any(e not in (0, 1) for e in exponents):
        raise InvalidStrategy("exponents must be n bits")
    order = list(range(n))
    if perm is not None:
        if sorted(perm) != order:
            raise InvalidStrategy(f"{perm} is not a permutation of range({n})")
        order = list(perm)
    elif j1 is not None:
        if not 0 <= j1 < n - 1:
            raise InvalidStrategy(f"j1 must lie in [0, {n - 2}]")
        order[j1], order[j1 + 1] = order[j1 + 1], order[j1]
    base = _ordered_product(s.A, exponents, range(n))
    moved = _ordered_product(s.A, exponents, order)
    # sign picked up by reordering exactly anticommuting factors
    active = [i for i in order if exponents[i] % 2]
    inversions = sum(1 for x in range(len(active)) for y in range(x + 1, len(active)) if active[x] > active[y])
    sign = -1 if inversions % 2 else 1
    e = _eps(s, eps)
    return PermutationReport(
        residual=math.sqrt(_sq(s.act(base - moved))),
        signed_residual=math.sqrt(_sq(s.act(base - sign * moved))),
        bound=100 / 9 * n**2 * math.sqrt(max(e, 0.0)),
        epsilon=e,
    )


def polar_unitary(m: np.ndarray) -> np.ndarray:
    """Unitary factor ``U`` of ``m = U |m|``; zero singular directions map to themselves."""
    W, sv, Vh = np.linalg.svd(m)
    return W @ Vh


def polar_residual(s: XorStrategy, eps: float | None = None) -> Check:
    """max over pairs k != l of ||(A_k (x) I) psi - (I (x) polar(B_kl + B_lk)) psi||
    and ||(A_l (x) I) psi - (I (x) polar(B_kl - B_lk)) psi||, against 17 sqrt(n eps)."""
    worst = 0.0
    for k, l in _pairs(s.n):
        for target, combo in ((s.A[k], s.B[(k, l)] + s.B[(l, k)]), (s.A[l], s.B[(k, l)] - s.B[(l, k)])):
            r = math.sqrt(_sq(s.act(target) - s.act(b=polar_unitary(combo))))
            worst = max(worst, r)
    e = max(_eps(s, eps), 0.0)
    return _check(worst, 17 * math.sqrt(s.n * e), strict=True)


def _bias(s: XorStrategy) -> float:
    return condition_zero_epsilon(s).m


def expansion_residual(s: XorStrategy, exponents: Sequence[int], sign: int = 1,
                       omega: float | None = None, eps: float | None = None) -> Check:
    """||((prod A_i^{j_i}) - omega * sign * (prod A_i^{j_i})) (x) I) psi|| against
    5 (N n^N)^2 sqrt(eps) with N = 2.

    ``omega`` defaults to the winning probability (1 + m)/2 the strategy
    achieves on CHSH(n).  The residual equals |1 - sign omega| times the norm
    of the product applied to psi, so it does not shrink with eps.
    """
    if len(exponents) != s.n or any(e not in (0, 1) for e in exponents):
        raise InvalidStrategy("exponents must be n bits")
    if sign not in (1, -1):
        raise RangeError("sign must be +1 or -1")
    w = (1 + _bias(s)) / 2 if omega is None else omega
    prod = _ordered_product(s.A, exponents, range(s.n))
    r = math.sqrt(_sq(s.act((1 - sign * w) * prod)))
    e = max(_eps(s, eps), 0.0)
    return _check(r, 5 * (2 * s.n**2) ** 2 * math.sqrt(e), strict=True)


def wedge_polar_residual(s: XorStrategy, eps: float | None = None) -> Check:
    """Two-copy polar residual for the tensor-product strategy ``s ^ s``.

    For ordered pairs (k, l) and (k', l') this is
    ||(A_k (x) A_k' (x) I) psi2 - (I (x) polar(B_kl (x) B_k'l' + B_lk (x) B_k'l')) psi2||,
    maximised over pairs, against 20 sqrt(N eps2) with N = 2 and
    ``eps2 = 1 - (1 - eps)^2`` (the product value deficit).
    """
    M2 = np.kron(s.M, s.M)
    worst = 0.0
    pairs = [(k, l) for k in range(s.n) for l in range(s.n) if k != l]
    for k, l in pairs:
        for k2, l2 in pairs:
            left = np.kron(s.A[k], s.A[k2]) @ M2
            combo = np.kron(s.B[(k, l)], s.B[(k2, l2)]) + np.kron(s.B[(l, k)], s.B[(k2, l2)])
            right = M2 @ polar_unitary(combo).T
            worst = max(worst, float(np.linalg.norm(left - right)))
    e = max(_eps(s, eps), 0.0)
    e2 = 1 - (1 - e) ** 2
    return _check(worst, 20 * math.sqrt(2 * e2), strict=True)


# --------------------------------------------------------------------------
# strategy families


def canonical_chsh_strategy(n: int) -> XorStrategy:
    """Optimal CHSH(n) strategy: Jordan-Wigner observables for the first
    player, a maximally entangled state, and ``B_ij = ((A_i + A_j)/sqrt2)^T``,
    ``B_ji = ((A_i - A_j)/sqrt2)^T`` for i < j."""
    if n < 1:
        raise RangeError("n must be >= 1")
    A = majoranas(n)
    d = A[0].shape[0]
    r2 = math.sqrt(2)
    B = {}
    for i, j in combinations(range(n), 2):
        B[(i, j)] = ((A[i] + A[j]) / r2).T
        B[(j, i)] = ((A[i] - A[j]) / r2).T
    if n == 1:
        return XorStrategy(1, A, {}, phi_plus(d))
    return XorStrategy(n, A, B, phi_plus(d))


def _near_identity(d: int, theta: float, rng: np.random.Generator) -> np.ndarray:
    """exp(i theta H) for a random Hermitian H of unit operator norm."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = (g + g.conj().T) / 2
    w, v = np.linalg.eigh(h)
    w = w / np.abs(w).max()
    return (v * np.exp(1j * theta * w)) @ v.conj().T


def perturb(s: XorStrategy, theta: float, rng: np.random.Generator) -> XorStrategy:
    """Conjugate every observable by an independent exp(i theta H) and
    tilt the state by a random vector of norm ~theta."""
    A = [(u := _near_identity(s.dA, theta, rng)) @ a @ u.conj().T for a in s.A]
    B = {k: (u := _near_identity(s.dB, theta, rng)) @ b @ u.conj().T for k, b in s.B.items()}
    noise = rng.normal(size=s.psi.size) + 1j * rng.normal(size=s.psi.size)
    psi = s.psi + theta * noise / np.linalg.norm(noise)
    return XorStrategy(s.n, _hermitize(A), {k: v for k, v in zip(B, _hermitize(list(B.values())))},
                       psi / np.linalg.norm(psi))


def _hermitize(ops: list[np.ndarray]) -> list[np.ndarray]:
    return [(o + o.conj().T) / 2 for o in ops]


def rotate_observable(s: XorStrategy, i: int, theta: float) -> XorStrategy:
    """Replace A_i by cos(theta) A_i + sin(theta) A_{i+1}, which stays an
    involution when the two anticommute."""
    nxt = (i + 1) % s.n
    A = list(s.A)
    A[i] = math.cos(theta) * s.A[i] + math.sin(theta) * s.A[nxt]
    return XorStrategy(s.n, A, dict(s.B), s.psi)


def trivial_strategy(n: int, d: int = 2, psi: np.ndarray | None = None) -> XorStrategy:
    """Every observable is the identity."""
    eye = np.eye(d, dtype=complex)
    B = {(i, j): eye for i in range(n) for j in range(n) if i != j}
    return XorStrategy(n, [eye] * n, B, phi_plus(d) if psi is None else psi)


# --------------------------------------------------------------------------
# full audit and fuzzing


def audit(s: XorStrategy, checks: Sequence[str] = ("all",), eps: float | None = None) -> dict:
    names = {"condition_zero", "equivalence", "anticommutator", "permutation", "polar", "appendix"}
    want = names if "all" in checks else set(checks)
    unknown = want - names
    if unknown:
        raise RangeError(f"unknown checks {sorted(unknown)}; choose from {sorted(names)} or 'all'")
    out: dict[str, Any] = {"n": s.n, "dA": s.dA, "dB": s.dB}
    cz = condition_zero_epsilon(s)
    e = cz.epsilon if eps is None else eps
    if "condition_zero" in want:
        out["condition_zero"] = cz.to_dict()
    if "equivalence" in want:
        out["equivalence"] = equivalence_residuals(s, e).to_dict()
    if "anticommutator" in want:
        out["anticommutator"] = anticommutator_residual(s, e).to_dict()
    if "permutation" in want:
        out["permutation"] = [
            {"j1": j, **permutation_error_residual(s, [1] * s.n, j1=j, eps=e).to_dict()}
            for j in range(s.n - 1)
        ]
    if "polar" in want:
        out["polar"] = polar_residual(s, e).to_dict()
    if "appendix" in want:
        out["appendix"] = {
            "expansion": expansion_residual(s, [1] * s.n, eps=e).to_dict(),
            "wedge_polar": wedge_polar_residual(s, e).to_dict() if s.n >= 2 else None,
        }
    return out


AUDIT_FUZZ_COLUMNS = ["instance", "n", "theta", "epsilon", "second", "reversed", "equivalence_bound",
                      "anticommutator", "anticommutator_bound", "polar", "polar_bound",
                      "permutation", "permutation_bound", "expansion", "expansion_bound",
                      "wedge_polar", "wedge_polar_bound", "holds"]


def audit_fuzz(instances: int = 200, seed: int = 0, n_values: Sequence[int] = (2, 3),
               max_theta: float = 0.3) -> list[dict]:
    """Random perturbations of the canonical optimum; each row records
    whether every residual bound held.  Permutation, expansion and wedge
    residuals are recorded for reference and do not enter ``holds``."""
    rows = []
    for t in range(instances):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(t,))))
        n = int(n_values[t % len(n_values)])
        theta = float(rng.uniform(0, max_theta))
        s = perturb(canonical_chsh_strategy(n), theta, rng)
        eq = equivalence_residuals(s)
        ac = anticommutator_residual(s, eq.epsilon)
        po = polar_residual(s, eq.epsilon)
        pe = permutation_error_residual(s, [1] * n, j1=0, eps=eq.epsilon)
        ex = expansion_residual(s, [1] * n, eps=eq.epsilon)
        wp = wedge_polar_residual(s, eq.epsilon)
        sec, rev = eq.second_characterization, eq.reversed_characterization
        rows.append({
            "instance": t, "n": n, "theta": theta, "epsilon": eq.epsilon,
            "second": sec.value, "reversed": rev.value, "equivalence_bound": eq.bound,
            "anticommutator": ac.value, "anticommutator_bound": ac.bound,
            "polar": po.value, "polar_bound": po.bound,
            "permutation": pe.signed_residual, "permutation_bound": pe.bound,
            "expansion": ex.value, "expansion_bound": ex.bound,
            "wedge_polar": wp.value, "wedge_polar_bound": wp.bound,
            "holds": bool(sec.holds and rev.holds and ac.holds and po.holds),
        })
    return rows
