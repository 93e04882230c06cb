"""Dicke states D(n, k) and the Pascal-triangle family built from them.

Bitstrings are read left to right as qubits 0..n-1.  D(2, 1) is the Bell-type
state B, D(n, 1) is W+(n), D(n, n-1) is W-(n) and D(4, 2) is the Z state.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionMismatch, EdgeState, InvalidParameters, InvalidWeight
from .nonlocal_algebra import MultiParticleState

MAX_TRIANGLE_N = 8
EIGEN_FLOOR = 1e-15


@dataclass(frozen=True)
class QubitState:
    n: int
    amplitudes: Mapping[str, complex]

    def __post_init__(self):
        for bits in self.amplitudes:
            if len(bits) != self.n or set(bits) - {"0", "1"}:
                raise InvalidParameters(f"bad bitstring {bits!r} for {self.n} qubits")

    def norm(self) -> float:
        return math.sqrt(sum(abs(v) ** 2 for v in self.amplitudes.values()))

    def support(self) -> set[str]:
        return {b for b, v in self.amplitudes.items() if v != 0}

    def weights(self) -> set[int]:
        return {b.count("1") for b in self.support()}

    def vector(self) -> np.ndarray:
        out = np.zeros(2**self.n, dtype=complex)
        for bits, v in self.amplitudes.items():
            out[int(bits, 2)] = v
        return out

    def distribution(self) -> dict[str, float]:
        total = self.norm() ** 2
        return {b: abs(v) ** 2 / total for b, v in sorted(self.amplitudes.items()) if v != 0}

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "terms": {b: [float(v.real), float(v.imag)] for b, v in sorted(self.amplitudes.items())},
        }


@dataclass(frozen=True)
class DickeState(QubitState):
    k: int = 0

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "terms": super().to_json()["terms"]}

    @property
    def label(self) -> str:
        return label(self.n, self.k)


@dataclass(frozen=True)
class Bipartition:
    n: int
    side_a: frozenset[int]

    def __post_init__(self):
        side = frozenset(int(q) for q in self.side_a)
        object.__setattr__(self, "side_a", side)
        if not side or len(side) >= self.n or any(not 0 <= q < self.n for q in side):
            raise InvalidParameters(f"cut {sorted(side)} is not a nonempty proper subset of {self.n} qubits")

    @property
    def side_b(self) -> frozenset[int]:
        return frozenset(range(self.n)) - self.side_a

    def complement(self) -> Bipartition:
        return Bipartition(self.n, self.side_b)


def basis_state(bits: str) -> QubitState:
    return QubitState(len(bits), {bits: 1 + 0j})


def raw_terms(n: int, k: int) -> set[str]:
    """Support of D(n, k): every n-bit string with k ones."""
    return {"".join("1" if i in ones else "0" for i in range(n)) for ones in itertools.combinations(range(n), k)}


def generate(n: int, k: int) -> DickeState:
    if n < 1 or not 0 <= k <= n:
        raise InvalidWeight(f"need n >= 1 and 0 <= k <= n, got n={n}, k={k}")
    amp = 1 / math.sqrt(math.comb(n, k))
    return DickeState(n, {b: complex(amp) for b in sorted(raw_terms(n, k))}, k)


def label(n: int, k: int) -> str:
    if k == 0 or k == n:
        return "|" + str(int(k == n)) * n + ">"
    if n == 2:
        return "B"
    if n == 4 and k == 2:
        return "Z"
    if k == 1:
        return f"W+({n})"
    if k == n - 1:
        return f"W-({n})"
    return f"D({n},{k})"


def shoulder_decompose(state: DickeState) -> tuple[DickeState, DickeState, tuple[float, float]]:
    """``D(n,k) = w1 |1> D(n-1,k-1) + w0 |0> D(n-1,k)`` with the weights returned."""
    n, k = state.n, state.k
    if n < 2:
        raise InvalidParameters("shoulders need n >= 2")
    if k == 0 or k == n:
        raise EdgeState(f"D({n},{k}) sits on the triangle edge and has one shoulder")
    return generate(n - 1, k - 1), generate(n - 1, k), (math.sqrt(k / n), math.sqrt((n - k) / n))


def recombine(left: QubitState, right: QubitState, weights: tuple[float, float]) -> QubitState:
    if left.n != right.n:
        raise DimensionMismatch("shoulders must have the same qubit count")
    w1, w0 = weights
    amps = {"1" + b: w1 * v for b, v in left.amplitudes.items()}
    amps.update({"0" + b: w0 * v for b, v in right.amplitudes.items()})
    return QubitState(left.n + 1, amps)


def measure_qubit(state: QubitState, qubit: int, outcome: int) -> tuple[float, QubitState]:
    """Born probability of ``outcome`` on ``qubit`` and the renormalised remainder."""
    if not 0 <= qubit < state.n:
        raise InvalidParameters(f"qubit {qubit} out of range")
    total = state.norm() ** 2
    kept = {b[:qubit] + b[qubit + 1 :]: v for b, v in state.amplitudes.items() if b[qubit] == str(outcome)}
    weight = sum(abs(v) ** 2 for v in kept.values())
    if weight == 0:
        return 0.0, QubitState(state.n - 1, {})
    scale = 1 / math.sqrt(weight)
    return weight / total, QubitState(state.n - 1, {b: v * scale for b, v in kept.items()})


def _sort_sign(wells: list[int]) -> int:
    inversions = sum(1 for i in range(len(wells)) for j in range(i + 1, len(wells)) if wells[i] > wells[j])
    return -1 if inversions % 2 else 1


def as_qubit_state(state: MultiParticleState) -> QubitState:
    """Map a one-particle-per-well state to qubits, one per well.

    Each configuration's amplitude is the signed sum over its slot orderings
    (sign of the permutation that sorts the slots by well), so a fully
    antisymmetric state maps norm-preservingly.  The result is renormalised.
    """
    if state.n_particles != state.n_wells:
        raise DimensionMismatch("need exactly one particle per well")
    if not state.levels() <= {0, 1}:
        raise DimensionMismatch("only levels 0 and 1 map to qubits")
    position = {w: i for i, w in enumerate(state.wells)}
    acc: dict[str, complex] = {}
    for key, val in state.amplitudes.items():
        wells = [w for w, _ in key]
        if len(set(wells)) < len(wells):
            continue
        bits = ["0"] * state.n_wells
        for w, lvl in key:
            bits[position[w]] = str(lvl)
        b = "".join(bits)
        acc[b] = acc.get(b, 0j) + _sort_sign(wells) * val
    norm = math.sqrt(sum(abs(v) ** 2 for v in acc.values()))
    if norm == 0:
        raise InvalidParameters("state has no one-per-well configuration")
    return QubitState(state.n_wells, {b: v / norm for b, v in acc.items()})


def schmidt_coefficients(state: QubitState, cut: Bipartition) -> np.ndarray:
    """Squared Schmidt coefficients across ``cut`` (descending)."""
    psi = state.vector().reshape([2] * state.n)
    a, b = sorted(cut.side_a), sorted(cut.side_b)
    mat = np.transpose(psi, a + b).reshape(2 ** len(a), 2 ** len(b))
    s = np.linalg.svd(mat, compute_uv=False)
    p = s**2
    return p / p.sum()


def bipartite_entropy(state: QubitState | MultiParticleState, cut: Bipartition | Iterable[int]) -> float:
    """Von Neumann entropy (bits) of the reduced state on the A side of ``cut``."""
    if isinstance(state, MultiParticleState):
        state = as_qubit_state(state)
    if not isinstance(cut, Bipartition):
        cut = Bipartition(state.n, frozenset(cut))
    if cut.n != state.n:
        raise DimensionMismatch(f"cut is for {cut.n} qubits, state has {state.n}")
    p = schmidt_coefficients(state, cut)
    p = p[p > EIGEN_FLOOR]
    return float(-np.sum(p * np.log2(p)) + 0.0)


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def triangle_table(max_n: int) -> list[list[dict]]:
    if not 1 <= max_n <= MAX_TRIANGLE_N:
        raise InvalidParameters(f"max_n must lie in 1..{MAX_TRIANGLE_N}")
    return [
        [{"n": n, "k": k, "label": label(n, k), "terms": math.comb(n, k)} for k in range(n + 1)]
        for n in range(1, max_n + 1)
    ]


def degeneracy_partner_check(first: QubitState, second: QubitState) -> bool:
    """True when both supports sit at one shared Hamming weight."""
    if first.n != second.n:
        raise DimensionMismatch(f"{first.n} vs {second.n} qubits")
    w1, w2 = first.weights(), second.weights()
    return len(w1) == 1 and w1 == w2
