"""Entropies (base 2) and numerical checks of quantum-information inequalities."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BadRegisterIndex, DimMismatch, HypothesisViolated, InvalidState
from .quantum import (
    STATE_TOL,
    Channel,
    apply_channel,
    eigh_clipped,
    fidelity,
    random_channel,
    random_density,
    trace_norm,
    validate_density,
)

SUPPORT_TOL = 1e-10
SLACK = 1e-9
PINSKER_CONST = 1 / (2 * math.log(2))


def _pair(rho, sigma):
    rho, sigma = validate_density(rho), validate_density(sigma)
    if rho.shape != sigma.shape:
        raise DimMismatch(f"{rho.shape} vs {sigma.shape}")
    return rho, sigma


def von_neumann_entropy(rho: np.ndarray) -> float:
    w, _ = eigh_clipped(rho)
    w = w[w > 0]
    return float(-(w * np.log2(w)).sum())


def shannon_entropy(p: Iterable[float]) -> float:
    p = np.asarray(list(p), dtype=float)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _off_support_weight(rho: np.ndarray, sigma: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    w, v = eigh_clipped(sigma)
    null = v[:, w <= SUPPORT_TOL]
    weight = float(np.trace(null.conj().T @ rho @ null).real) if null.size else 0.0
    return weight, w, v


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """D(rho||sigma) = Tr rho (log rho - log sigma), +inf off the support."""
    rho, sigma = _pair(rho, sigma)
    weight, w, v = _off_support_weight(rho, sigma)
    if weight > SUPPORT_TOL:
        return math.inf
    sup = w > SUPPORT_TOL
    log_sigma = (v[:, sup] * np.log2(w[sup])) @ v[:, sup].conj().T
    cross = float(np.trace(rho @ log_sigma).real)
    return max(0.0, -von_neumann_entropy(rho) - cross)


def relative_min_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """S_inf(rho||sigma) = min{lam : rho <= 2^lam sigma}."""
    rho, sigma = _pair(rho, sigma)
    weight, w, v = _off_support_weight(rho, sigma)
    if weight > SUPPORT_TOL:
        return math.inf
    sup = w > SUPPORT_TOL
    inv_sqrt = v[:, sup] / np.sqrt(w[sup])
    m = inv_sqrt.conj().T @ rho @ inv_sqrt
    lam = np.linalg.eigvalsh((m + m.conj().T) / 2).max()
    return float(np.log2(lam))


@dataclass
class CQState:
    """Classical-quantum state sum_x p(x) |x><x| (x) rho_x.

    ``probs`` has shape ``(d_1, ..., d_m)`` and ``states`` shape
    ``(d_1, ..., d_m, dA, dA)``.
    """

    probs: np.ndarray
    states: np.ndarray

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=float)
        self.states = np.asarray(self.states, dtype=complex)
        if self.states.shape[: self.probs.ndim] != self.probs.shape:
            raise DimMismatch("states must be indexed like probs")
        if self.probs.min() < 0 or abs(self.probs.sum() - 1) > 1e-12:
            raise InvalidState("classical table must be a distribution")
        for idx in np.ndindex(*self.probs.shape):
            validate_density(self.states[idx])

    @property
    def registers(self) -> int:
        return self.probs.ndim

    @property
    def dim_a(self) -> int:
        return self.states.shape[-1]

    def marginal(self, i: int) -> np.ndarray:
        self._check(i)
        axes = tuple(k for k in range(self.registers) if k != i)
        return self.probs.sum(axis=axes)

    def quantum_marginal(self) -> np.ndarray:
        return np.tensordot(self.probs, self.states, axes=self.registers)

    def conditional_on(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Marginal p(x_i) and averaged states rho_{x_i}."""
        p_i = self.marginal(i)
        moved = np.moveaxis(self.probs, i, 0)
        st = np.moveaxis(self.states, i, 0)
        k = self.registers - 1
        cond = np.array([
            np.tensordot(moved[x], st[x], axes=k) / p_i[x] if p_i[x] > 0
            else np.eye(self.dim_a) / self.dim_a
            for x in range(len(p_i))
        ])
        return p_i, cond

    def _check(self, i: int) -> None:
        if not 0 <= i < self.registers:
            raise BadRegisterIndex(f"register {i} not in [0, {self.registers})")

    def full_matrix(self) -> np.ndarray:
        """Block-diagonal matrix on X_1...X_m A."""
        blocks = [p * s for p, s in zip(self.probs.ravel(), self.states.reshape(-1, self.dim_a, self.dim_a))]
        d = len(blocks) * self.dim_a
        out = np.zeros((d, d), dtype=complex)
        for k, b in enumerate(blocks):
            out[k * self.dim_a:(k + 1) * self.dim_a, k * self.dim_a:(k + 1) * self.dim_a] = b
        return out


def _block_diag(p: np.ndarray, states: np.ndarray) -> np.ndarray:
    dA = states.shape[-1]
    out = np.zeros((len(p) * dA, len(p) * dA), dtype=complex)
    for x in range(len(p)):
        out[x * dA:(x + 1) * dA, x * dA:(x + 1) * dA] = p[x] * states[x]
    return out


def mutual_information(state: CQState, which: int) -> float:
    """I(X_which : A) = S(X) + S(A) - S(XA) on the induced c-q state."""
    p, cond = state.conditional_on(which)
    joint = _block_diag(p, cond)
    return max(0.0, shannon_entropy(p) + von_neumann_entropy(state.quantum_marginal())
               - von_neumann_entropy(joint))


def cq_relative_entropy(rho: CQState, sigma: CQState) -> float:
    """D(rho^{XA} || sigma^{XA}) for c-q states, using the block structure."""
    if rho.probs.shape != sigma.probs.shape or rho.dim_a != sigma.dim_a:
        raise DimMismatch("c-q states have different shapes")
    total = 0.0
    for idx in np.ndindex(*rho.probs.shape):
        p, q = rho.probs[idx], sigma.probs[idx]
        if p == 0:
            continue
        if q == 0:
            return math.inf
        total += p * math.log2(p / q) + p * relative_entropy(rho.states[idx], sigma.states[idx])
    return max(0.0, total)


def _is_product(probs: np.ndarray, tol: float = 1e-10) -> bool:
    prod = np.ones(())
    for i in range(probs.ndim):
        axes = tuple(k for k in range(probs.ndim) if k != i)
        prod = np.multiply.outer(prod, probs.sum(axis=axes))
    return bool(np.max(np.abs(prod - probs)) <= tol)


@dataclass
class InequalityReport:
    lhs: float
    rhs: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def _holds(lhs: float, rhs: float, slack: float = SLACK) -> bool:
    return bool(lhs <= rhs + slack)


def pinsker_check(rho, sigma) -> InequalityReport:
    """Squared Pinsker: ||rho - sigma||_1^2 / (2 ln 2) <= D(rho||sigma)."""
    rho, sigma = _pair(rho, sigma)
    lhs = PINSKER_CONST * trace_norm(rho - sigma) ** 2
    rhs = relative_entropy(rho, sigma)
    return InequalityReport(lhs, rhs, _holds(lhs, rhs))


def raz_check(rho: CQState, sigma: CQState) -> InequalityReport:
    """sum_i I(X_i:A)_rho <= D(rho^{XA} || sigma^{XA}) for product-form sigma.

    Raises HypothesisViolated unless sigma's classical part is a product of
    its marginals, sigma's quantum part does not depend on X, and rho's
    classical part is itself a product distribution.
    """
    if not _is_product(sigma.probs):
        raise HypothesisViolated("sigma's classical registers are not a product")
    flat = sigma.states.reshape(-1, sigma.dim_a, sigma.dim_a)
    if np.max(np.abs(flat - flat[0])) > STATE_TOL:
        raise HypothesisViolated("sigma's A register depends on X")
    if not _is_product(rho.probs):
        raise HypothesisViolated("rho's classical registers are not a product")
    lhs = sum(mutual_information(rho, i) for i in range(rho.registers))
    rhs = cq_relative_entropy(rho, sigma)
    return InequalityReport(lhs, rhs, _holds(lhs, rhs))


# --------------------------------------------------------------------------
# fuzz suite

FUZZ_COLUMNS = ["check", "instance_seed", "lhs", "rhs", "slack", "holds"]


def _instance_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=(index,))))


def random_product_cq(rng: np.random.Generator, dims: Sequence[int], dA: int,
                      correlated: bool = True) -> CQState:
    probs = np.ones(())
    for d in dims:
        probs = np.multiply.outer(probs, rng.dirichlet(np.ones(d)))
    if correlated:
        states = np.array([random_density(dA, rng) for _ in range(int(np.prod(dims)))])
    else:
        states = np.array([random_density(dA, rng)] * int(np.prod(dims)))
    return CQState(probs, states.reshape(tuple(dims) + (dA, dA)))


def product_reference(rho: CQState, rng: np.random.Generator | None = None) -> CQState:
    """Product-form sigma: either rho's own marginals or random ones."""
    probs = np.ones(())
    for i in range(rho.registers):
        m = rho.marginal(i) if rng is None else rng.dirichlet(np.ones(rho.probs.shape[i]))
        probs = np.multiply.outer(probs, m)
    a = rho.quantum_marginal() if rng is None else random_density(rho.dim_a, rng)
    states = np.broadcast_to(a, rho.probs.shape + a.shape).copy()
    return CQState(probs, states)


def entropy_fuzz(pairs: int = 1000, channels: int = 200, raz: int = 500,
                 master_seed: int = 0, max_dim: int = 4) -> list[dict]:
    """Run every inequality on seeded random instances; one row per check."""
    rows: list[dict] = []

    def add(check, seed, lhs, rhs):
        rows.append({"check": check, "instance_seed": seed, "lhs": lhs, "rhs": rhs,
                     "slack": rhs - lhs, "holds": _holds(lhs, rhs)})

    chans: dict[int, list[Channel]] = {}
    crng = _instance_rng(master_seed, 10**6)
    for k in range(channels):
        d = 2 + k % (max_dim - 1)
        chans.setdefault(d, []).append(random_channel(d, crng, n_kraus=1 + k % 3))

    for k in range(pairs):
        rng = _instance_rng(master_seed, k)
        d = int(rng.integers(2, max_dim + 1))
        rank = int(rng.integers(1, d + 1)) if k % 5 == 0 else d
        rho = random_density(d, rng, rank)
        sigma = random_density(d, rng)
        ch = chans[d][k % len(chans[d])]
        D = relative_entropy(rho, sigma)
        S = relative_min_entropy(rho, sigma)
        tn = trace_norm(rho - sigma)
        F = fidelity(rho, sigma)
        r2, s2 = apply_channel(ch, rho), apply_channel(ch, sigma)
        add("pinsker_squared", k, PINSKER_CONST * tn**2, D)
        add("d_le_s_inf", k, D, S)
        add("dpi_trace_norm", k, trace_norm(r2 - s2), tn)
        add("dpi_fidelity", k, F, fidelity(r2, s2))
        add("dpi_relative_entropy", k, relative_entropy(r2, s2), D)
        add("fvdg_lower", k, 2 * (1 - F), tn)
        add("fvdg_upper", k, tn, 2 * math.sqrt(max(0.0, 1 - F**2)))

    for k in range(raz):
        rng = _instance_rng(master_seed, 2 * 10**6 + k)
        m = 1 + k % 3
        rho = random_product_cq(rng, [2] * m, 2)
        sigma = product_reference(rho, rng if k % 2 else None)
        rep = raz_check(rho, sigma)
        add("raz", k, rep.lhs, rep.rhs)
    return rows


def rows_to_csv(rows: list[dict], columns: Sequence[str] = FUZZ_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: (repr(float(r[c])) if isinstance(r[c], float) else r[c]) for c in columns})
    return buf.getvalue()
