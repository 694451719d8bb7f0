"""Quantum values of two-player XOR games via the Tsirelson SDP.

The bias of an XOR game with signed matrix ``G`` is

    max over unit vectors u_s, v_t of  sum_st G_st <u_s, v_t>,

which equals half the optimum of ``max <G_sym, Z>`` subject to ``Z >= 0``
and ``diag(Z) = 1``, with ``G_sym = [[0, G^T], [G, 0]]``.  The dual is
``min sum(y)`` subject to ``diag(y) >= G_sym``, again halved.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NotXorGame, SolverDiverged
from .games import Game

log = logging.getLogger(__name__)

FEAS_TOL = 1e-8
TARGET_GAP = 1e-10


@dataclass
class XorGameMatrix:
    """``G_st = pi(s, t) * c_st`` with ``c_st = +1`` when even parity wins."""

    matrix: np.ndarray
    signs: np.ndarray
    probs: np.ndarray
    source: str = ""

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def kron(self, other: "XorGameMatrix") -> "XorGameMatrix":
        return XorGameMatrix(
            np.kron(self.matrix, other.matrix),
            np.kron(self.signs, other.signs),
            np.kron(self.probs, other.probs),
            f"{self.source}*{other.source}",
        )


@dataclass
class SdpSolution:
    Z: np.ndarray
    y: np.ndarray
    primal: float
    dual: float
    iterations: int
    method: str = "interior-point"
    residuals: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.dual - self.primal

    @property
    def bias(self) -> float:
        return self.primal

    @property
    def value(self) -> float:
        return (1 + self.bias) / 2


def xor_matrix(game: Game) -> XorGameMatrix:
    """Signed, probability-weighted game matrix of a two-player XOR game.

    A parallel repetition of an XOR game is read as its XOR composition:
    the sign of a question tuple is the product of the coordinate signs.
    This is the game whose matrix is the tensor power of the base matrix.
    """
    st = game.structure
    if st and st.get("kind") == "repeat":
        base = xor_matrix(st["base"])
        out = base
        for _ in range(st["n"] - 1):
            out = out.kron(base)
        out.source = game.name
        return out
    if game.players != 2 or any(len(a) != 2 for a in game.answers):
        raise NotXorGame("XOR games have two players with binary answers")
    w = game.wins
    even = w[:, :, 0, 0]
    odd = w[:, :, 0, 1]
    if not (np.array_equal(even, w[:, :, 1, 1]) and np.array_equal(odd, w[:, :, 1, 0])):
        raise NotXorGame("predicate depends on more than the answer parity")
    probs = np.asarray(game.prob_array(), dtype=float)
    ambiguous = (even == odd) & (probs > 0)
    if ambiguous.any():
        raise NotXorGame("some question pair is won by both or neither parity")
    signs = np.where(even | ~odd, 1, -1)
    return XorGameMatrix(probs * signs, signs, probs, game.name)


def symmetrize(g: XorGameMatrix | np.ndarray) -> np.ndarray:
    G = np.asarray(g.matrix if isinstance(g, XorGameMatrix) else g, dtype=float)
    r, c = G.shape
    out = np.zeros((r + c, r + c))
    out[:c, c:] = G.T
    out[c:, :c] = G
    return out


def classical_bias(g: XorGameMatrix) -> float:
    """max over sign vectors a, b of a^T G b, by enumerating the smaller side."""
    G = g.matrix if g.shape[0] <= g.shape[1] else g.matrix.T
    if G.shape[0] > 22:
        raise ValueError("classical bias enumeration is limited to 22 questions")
    best = -np.inf
    for a in itertools.product((1.0, -1.0), repeat=G.shape[0]):
        best = max(best, float(np.abs(np.asarray(a) @ G).sum()))
    return best


def _is_pd(m: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(m)
        return True
    except np.linalg.LinAlgError:
        return False


def _step(m: np.ndarray, dm: np.ndarray) -> float:
    alpha = 1.0
    while not _is_pd(m + alpha * dm):
        alpha *= 0.8
        if alpha < 1e-12:
            return 0.0
    return alpha if alpha == 1.0 else 0.95 * alpha


def _interior_point(C: np.ndarray, tol: float, max_iter: int):
    """Primal-dual path following for max <C, X>, diag(X) = 1, X >= 0.

    X stays on the affine set diag(X) = 1 because the Newton direction is
    solved on the eliminated (Schur complement) system for dy only.
    """
    n = C.shape[0]
    e = np.ones(n)
    X = np.eye(n)
    y = np.abs(C).sum(axis=1) * 1.1 + 1.0
    Z = np.diag(y) - C
    mu = np.sum(Z * X) / (2 * n)
    it = 0
    for it in range(1, max_iter + 1):
        try:
            Zi = scipy.linalg.cho_solve(scipy.linalg.cho_factor(Z), np.eye(n))
            Zi = (Zi + Zi.T) / 2
            schur = Zi * X
            dy = scipy.linalg.cho_solve(scipy.linalg.cho_factor(schur), mu * np.diag(Zi) - e)
        except np.linalg.LinAlgError:
            # numerically singular near the optimum: keep the last iterate
            if it == 1:
                raise
            break
        dX = mu * Zi - X - Zi @ np.diag(dy) @ X
        dX = (dX + dX.T) / 2
        dZ = np.diag(dy)
        ap = _step(X, dX)
        ad = _step(Z, dZ)
        X = X + ap * dX
        y = y + ad * dy
        Z = np.diag(y) - C
        mu = np.sum(Z * X) / (2 * n)
        if ap + ad > 1.6:
            mu *= 0.5
        if ap + ad > 1.9:
            mu /= 5
        gap = e @ y - np.sum(C * X)
        if gap <= tol:
            break
        if ap == 0.0 and ad == 0.0:
            break
    return X, y, it


def _rank(C: np.ndarray) -> int:
    return int(np.ceil(np.sqrt(2 * C.shape[0]))) + 1


def _gram_ascent(C: np.ndarray, tol: float, max_iter: int, seed: int = 0):
    """Row-by-row projected ascent on a Gram factorization; a dual
    certificate is recovered by shifting y until diag(y) - C is PSD."""
    n = C.shape[0]
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(n, _rank(C)))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    it = 0
    for it in range(1, max_iter + 1):
        for i in range(n):
            g = C[i] @ V - C[i, i] * V[i]
            nrm = np.linalg.norm(g)
            if nrm > 0:
                V[i] = g / nrm
        X = V @ V.T
        y = np.einsum("ij,ij->i", C, X)
        shift = np.linalg.eigvalsh(np.diag(y) - C).min()
        if shift < 0:
            y = y - shift / 1.0
        if y.sum() - np.sum(C * X) <= tol:
            break
    return V @ V.T, y, it


def feasibility_residuals(Z: np.ndarray, y: np.ndarray, C: np.ndarray) -> dict:
    return {
        "min_eig_Z": float(np.linalg.eigvalsh(Z).min()),
        "max_diag_dev": float(np.max(np.abs(np.diag(Z) - 1))),
        "min_eig_dual_slack": float(np.linalg.eigvalsh(np.diag(y) - C).min()),
    }


def quantum_bias(g: XorGameMatrix | np.ndarray, tol: float = 1e-8, max_iter: int = 200,
                 method: str = "auto") -> SdpSolution:
    """Solve the XOR-game SDP; ``tol`` bounds the duality gap in bias units.

    ``method`` is ``"interior-point"``, ``"gram"`` or ``"auto"`` (interior
    point with the Gram-factor ascent as fallback).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    C = symmetrize(g)
    if not np.any(C):
        n = C.shape[0]
        return SdpSolution(np.eye(n), np.zeros(n), 0.0, 0.0, 0, "trivial",
                           feasibility_residuals(np.eye(n), np.zeros(n), C))
    # objective and gap are both twice their bias-unit counterparts; the
    # iteration aims below tol so the reported primal is accurate to ~TARGET
    sdp_tol = 2 * tol
    target = 2 * min(tol, TARGET_GAP)
    used = method
    try:
        if method == "gram":
            raise np.linalg.LinAlgError("gram requested")
        Z, y, it = _interior_point(C, target, max_iter)
        used = "interior-point"
        if y.sum() - np.sum(C * Z) > sdp_tol and method == "auto":
            raise np.linalg.LinAlgError("interior point did not converge")
    except np.linalg.LinAlgError as exc:
        if method == "interior-point":
            raise SolverDiverged(str(exc)) from exc
        log.info("falling back to Gram-factor ascent: %s", exc)
        Z, y, it = _gram_ascent(C, target, max_iter * 50)
        used = "gram"
    sol = SdpSolution(Z, y, float(np.sum(C * Z)) / 2, float(y.sum()) / 2, it, used,
                      feasibility_residuals(Z, y, C))
    if sol.gap > tol:
        raise SolverDiverged(f"duality gap {sol.gap:.3g} > tol {tol:.3g} after {it} iterations")
    return sol


def quantum_value(g: XorGameMatrix | np.ndarray, tol: float = 1e-8) -> float:
    return quantum_bias(g, tol).value
