"""Dense complex linear algebra and quantum-state primitives.

Matrices and states are plain numpy arrays.  Every spectral quantity (square
roots, logarithms, trace norms of Hermitian matrices) goes through
:func:`eigh_clipped`, which zeroes eigenvalues below ``EIG_TOL``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DimMismatch, InvalidState, NonSquare, NonTracePreserving, NotAPOVM
from .games import ProbTable

EIG_TOL = 1e-12
STATE_TOL = 1e-10
NORM_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron(*ops: np.ndarray) -> np.ndarray:
    return reduce(np.kron, ops)


def ket(bits: str) -> np.ndarray:
    """Computational basis state from a bit string, e.g. ``ket("01")``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def phi_plus(d: int = 2) -> np.ndarray:
    """Maximally entangled state sum_j |jj> / sqrt(d)."""
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1 / np.sqrt(d)
    return v


def _square(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {x.shape}")
    return x


def is_hermitian(x: np.ndarray, tol: float = STATE_TOL) -> bool:
    return bool(np.max(np.abs(x - x.conj().T), initial=0.0) <= tol)


def eigh_clipped(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the Hermitian part of ``h`` with eigenvalues of
    magnitude below EIG_TOL set to exactly zero."""
    h = _square(h)
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    w = np.where(np.abs(w) < EIG_TOL, 0.0, w)
    return w, v


def psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = eigh_clipped(rho)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def validate_density(rho: np.ndarray, tol: float = STATE_TOL) -> np.ndarray:
    rho = _square(rho)
    if not is_hermitian(rho, tol):
        raise InvalidState("density matrix is not Hermitian")
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if w.min() < -tol:
        raise InvalidState(f"density matrix has eigenvalue {w.min():.3g} < 0")
    if abs(np.trace(rho).real - 1) > tol:
        raise InvalidState(f"trace {np.trace(rho).real!r} != 1")
    return rho


def validate_pure(psi: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    if abs(np.vdot(psi, psi).real - 1) > tol:
        raise InvalidState("state vector is not normalized")
    return psi


def trace_norm(x: np.ndarray) -> float:
    """Sum of singular values of a square matrix."""
    x = _square(x)
    if is_hermitian(x, 1e-14):
        w, _ = eigh_clipped(x)
        return float(np.abs(w).sum())
    return float(np.linalg.svd(x, compute_uv=False).sum())


def frobenius_norm(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=complex)
    return float(np.sqrt(np.sum(np.abs(x) ** 2)))


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Root fidelity ``||sqrt(rho) sqrt(sigma)||_1`` (1 for equal states)."""
    rho, sigma = _square(rho), _square(sigma)
    if rho.shape != sigma.shape:
        raise DimMismatch(f"{rho.shape} vs {sigma.shape}")
    s = np.linalg.svd(psd_sqrt(rho) @ psd_sqrt(sigma), compute_uv=False)
    return float(min(1.0, s.sum()))


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduce ``rho`` on subsystems of the given ``dims`` to those in ``keep``."""
    rho = _square(rho)
    dims = list(dims)
    if int(np.prod(dims)) != rho.shape[0]:
        raise DimMismatch(f"dims {dims} do not multiply to {rho.shape[0]}")
    n = len(dims)
    keep = sorted(keep)
    t = rho.reshape(dims + dims)
    # contract traced subsystems from the highest index down so axis numbers stay valid
    for k in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=k, axis2=k + t.ndim // 2)
    d = int(np.prod([dims[k] for k in keep]))
    return t.reshape(d, d)


@dataclass
class Channel:
    """A CPTP map given by Kraus operators."""

    kraus: list[np.ndarray]

    def __post_init__(self) -> None:
        self.kraus = [np.asarray(k, dtype=complex) for k in self.kraus]
        if not self.kraus:
            raise NonTracePreserving("channel needs at least one Kraus operator")
        shape = self.kraus[0].shape
        if any(k.shape != shape for k in self.kraus):
            raise DimMismatch("Kraus operators must share a shape")
        s = sum(k.conj().T @ k for k in self.kraus)
        if np.max(np.abs(s - np.eye(shape[1]))) > STATE_TOL:
            raise NonTracePreserving("sum of K^dag K is not the identity")

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    @classmethod
    def identity(cls, d: int) -> "Channel":
        return cls([np.eye(d)])

    @classmethod
    def depolarizing_qubit(cls) -> "Channel":
        return cls([P / 2 for P in (I2, X, Y, Z)])

    @classmethod
    def partial_trace(cls, dims: Sequence[int], keep: int) -> "Channel":
        """Trace out everything except subsystem ``keep``, as Kraus operators."""
        dims = list(dims)
        dk = dims[keep]
        others = [d for i, d in enumerate(dims) if i != keep]
        kraus = []
        for idx in np.ndindex(*others):
            vecs = []
            it = iter(idx)
            for i, d in enumerate(dims):
                if i == keep:
                    vecs.append(np.eye(dk))
                else:
                    e = np.zeros((1, d))
                    e[0, next(it)] = 1
                    vecs.append(e)
            kraus.append(kron(*vecs))
        return cls(kraus)


def apply_channel(ch: Channel, rho: np.ndarray) -> np.ndarray:
    rho = _square(rho)
    if rho.shape[0] != ch.dim_in:
        raise DimMismatch(f"channel input dim {ch.dim_in} vs state dim {rho.shape[0]}")
    return sum(k @ rho @ k.conj().T for k in ch.kraus)


def pauli_operator(label: str) -> np.ndarray:
    """Product of single-qubit Paulis, applied right to left: ``"XZ"`` is
    sigma_x sigma_z."""
    return reduce(np.matmul, (PAULI[c] for c in label.upper()), I2)


def bell_action(pauli_pair: Sequence[str], state: np.ndarray) -> np.ndarray:
    """Apply ``P_A (x) P_B`` to a two-qubit pure state.

    >>> np.allclose(bell_action(("X", "I"), phi_plus()), (ket("10") + ket("01")) / np.sqrt(2))
    True
    """
    psi = np.asarray(state, dtype=complex).ravel()
    if psi.shape != (4,) or len(pauli_pair) != 2:
        raise DimMismatch("bell_action acts on a two-qubit state with two labels")
    return kron(pauli_operator(pauli_pair[0]), pauli_operator(pauli_pair[1])) @ psi


def born_probability(
    state: np.ndarray, effects: Sequence[np.ndarray], labels: Sequence[str] | None = None
) -> ProbTable:
    """Outcome distribution ``Tr[E_k rho]`` of a POVM."""
    rho = validate_density(state)
    effects = [np.asarray(e, dtype=complex) for e in effects]
    for e in effects:
        if e.shape != rho.shape:
            raise DimMismatch("effect and state dimensions differ")
        if not is_hermitian(e) or np.linalg.eigvalsh((e + e.conj().T) / 2).min() < -STATE_TOL:
            raise NotAPOVM("effects must be positive semidefinite")
    if np.max(np.abs(sum(effects) - np.eye(rho.shape[0]))) > STATE_TOL:
        raise NotAPOVM("effects do not sum to the identity")
    p = np.clip(np.array([np.trace(e @ rho).real for e in effects]), 0, None)
    drift = abs(p.sum() - 1)
    if drift > 0 and drift <= STATE_TOL:
        p = p / p.sum()
    labels = labels or [str(k) for k in range(len(effects))]
    return ProbTable(tuple(labels), tuple(float(x) for x in p))


def observable_effects(obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the +1 and -1 eigenspaces of a +-1 observable."""
    d = obs.shape[0]
    return (np.eye(d) + obs) / 2, (np.eye(d) - obs) / 2


def _fix_phase(psi: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(psi)))
    return psi * (abs(psi[k]) / psi[k])


def purify(rho: np.ndarray) -> np.ndarray:
    """Pure state on ``d*d`` dims whose first-subsystem marginal is ``rho``.

    Built as ``sum_k sqrt(p_k) |v_k> (x) |k>`` with eigenvalues in decreasing order;
    the global phase makes the largest-magnitude amplitude real positive.
    """
    rho = validate_density(rho)
    w, v = eigh_clipped(rho)
    d = rho.shape[0]
    psi = np.zeros(d * d, dtype=complex)
    # largest eigenvalue pairs with ancilla |0>, so pure inputs give |v>|0>
    for j, k in enumerate(np.argsort(-w, kind="stable")):
        if w[k] > 0:
            psi += np.sqrt(w[k]) * np.kron(v[:, k], np.eye(d)[j])
    psi /= np.linalg.norm(psi)
    return _fix_phase(psi)


def matricize(state: np.ndarray, dA: int, dB: int) -> np.ndarray:
    """Linear bijection C^{dA*dB} -> dA x dB matrices with ``|u>|w> -> u w^T``."""
    v = np.asarray(state, dtype=complex).ravel()
    if v.size != dA * dB:
        raise DimMismatch(f"state of size {v.size} is not {dA}x{dB}")
    return v.reshape(dA, dB).copy()


def unmatricize(m: np.ndarray) -> np.ndarray:
    return np.asarray(m, dtype=complex).reshape(-1).copy()


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-ensemble density matrix."""
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel(
    d_in: int, rng: np.random.Generator, n_kraus: int = 2, d_out: int | None = None
) -> Channel:
    """Random channel from a Haar isometry cut into Kraus blocks."""
    d_out = d_out or d_in
    u = random_unitary(d_out * n_kraus, rng)[:, :d_in]
    return Channel([u[k * d_out:(k + 1) * d_out] for k in range(n_kraus)])


def to_json(m: np.ndarray) -> dict:
    """Serialize a matrix or vector as ``{rows, cols, re, im}`` (row-major)."""
    m = np.asarray(m, dtype=complex)
    rows, cols = (m.shape[0], 1) if m.ndim == 1 else m.shape
    flat = m.reshape(-1)
    return {"rows": rows, "cols": cols, "re": flat.real.tolist(), "im": flat.imag.tolist()}


def from_json(obj: dict, vector: bool = False) -> np.ndarray:
    flat = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj.get("im", [0.0] * len(obj["re"])))
    if vector:
        return flat
    return flat.reshape(int(obj["rows"]), int(obj["cols"]))
