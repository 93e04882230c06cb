"""Local/nonlocal single-particle bases and their Slater determinants.

A single-particle state is a vector over the local well basis at one level
(0 for the lower level psi, 1 for the excited level phi).  A nonlocal basis is
the set of rows of a unitary ``C``: state ``j`` has amplitude ``C[j, i]`` on
well ``i``.

Many-particle states are stored as a sparse map from ordered slot
assignments ``((well, level), ...)`` to complex amplitudes.  Wells and slots
are 0-based.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import unitary_group

from .errors import (
    InvalidKindForN,
    InvalidParameters,
    LinearlyDependentInputs,
    NotPhaseOnly,
    NotUnitary,
    PhaseEquivalenceViolation,
)

UNITARY_TOL = 1e-12
GRAM_TOL = 1e-10
PHASE_TOL = 1e-10
MAX_PARTICLES = 8
# full-storage limit on wells**particles; larger enumerations prune roundoff
FULL_STORAGE_LIMIT = 50_000
DEFAULT_PRUNE = 1e-14

IDENTITY = "I"
NOT = "NOT"

Slot = tuple[int, int]
Key = tuple[Slot, ...]


def _check_unitary(u: np.ndarray) -> None:
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NotUnitary(f"expected a square matrix, got shape {u.shape}")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(len(u))))
    if dev >= UNITARY_TOL:
        raise NotUnitary(f"max |C^dag C - I| = {dev:.3e}")


@dataclass(frozen=True)
class GeneralUnitary:
    entries: np.ndarray

    def __post_init__(self):
        u = np.array(self.entries, dtype=complex)
        u.setflags(write=False)
        object.__setattr__(self, "entries", u)
        _check_unitary(u)

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def det_phase(self) -> float:
        return float(np.angle(np.linalg.det(self.entries)))

    def to_json(self) -> list:
        return matrix_to_json(self.entries)


@dataclass(frozen=True)
class PhaseUnitary(GeneralUnitary):
    """Unitary whose entries all have modulus ``1/sqrt(n)``."""

    def __post_init__(self):
        super().__post_init__()
        dev = np.max(np.abs(np.abs(self.entries) - 1 / math.sqrt(self.n)))
        if dev >= UNITARY_TOL:
            raise NotPhaseOnly(f"max ||C_ij| - 1/sqrt(n)| = {dev:.3e}")

    @classmethod
    def from_phases(cls, theta) -> PhaseUnitary:
        theta = np.asarray(theta, dtype=float)
        return cls(np.exp(1j * theta) / math.sqrt(len(theta)))

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.entries)


@dataclass(frozen=True)
class SingleParticleState:
    amplitudes: np.ndarray
    level: int = 0

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex)
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)
        if amp.ndim != 1:
            raise InvalidParameters("amplitudes must be a 1-D vector")
        norm = np.linalg.norm(amp)
        if abs(norm - 1) >= 1e-12:
            raise InvalidParameters(f"state norm {norm!r} differs from 1")
        if self.level < 0:
            raise InvalidParameters("level labels are non-negative integers")

    @property
    def n_wells(self) -> int:
        return len(self.amplitudes)


@dataclass(frozen=True)
class ExcitationSpec:
    """Per-slot operator tags, ``"I"`` or ``"NOT"``; at least one NOT."""

    tags: tuple[str, ...]

    def __post_init__(self):
        tags = tuple(self.tags)
        object.__setattr__(self, "tags", tags)
        if any(t not in (IDENTITY, NOT) for t in tags):
            raise InvalidParameters(f"unknown operator tag in {tags}")
        if NOT not in tags:
            raise InvalidParameters("an excitation needs at least one NOT slot")

    @classmethod
    def on(cls, n_slots: int, *slots: int) -> ExcitationSpec:
        if any(not 0 <= s < n_slots for s in slots):
            raise InvalidParameters(f"slots {slots} out of range for {n_slots}")
        return cls(tuple(NOT if i in slots else IDENTITY for i in range(n_slots)))

    @property
    def n_slots(self) -> int:
        return len(self.tags)

    @property
    def n_excited(self) -> int:
        return self.tags.count(NOT)


@dataclass(frozen=True)
class MultiParticleState:
    """Amplitudes over ordered slot assignments.

    ``wells`` lists the well labels still in play (collapse removes them).
    ``discarded_max`` bounds the magnitude of every computed amplitude that
    was not stored.
    """

    n_particles: int
    wells: tuple[int, ...]
    amplitudes: Mapping[Key, complex]
    discarded_max: float = 0.0

    @property
    def n_wells(self) -> int:
        return len(self.wells)

    def amplitude(self, key: Key) -> complex:
        return self.amplitudes.get(tuple(key), 0j)

    def norm(self) -> float:
        return math.sqrt(sum(abs(v) ** 2 for v in self.amplitudes.values()))

    def levels(self) -> set[int]:
        return {lvl for key in self.amplitudes for _, lvl in key}

    def antisymmetry_defect(self) -> float:
        """Max of ``|amp(t) + amp(tau t)|`` over stored t and slot transpositions tau."""
        worst = 0.0
        pairs = list(itertools.combinations(range(self.n_particles), 2))
        for key, val in self.amplitudes.items():
            for i, j in pairs:
                swapped = list(key)
                swapped[i], swapped[j] = swapped[j], swapped[i]
                worst = max(worst, abs(val + self.amplitude(tuple(swapped))))
        return worst

    def pin_levels(self, pattern: Sequence[int]) -> MultiParticleState:
        """Keep only tuples whose per-slot levels equal ``pattern``; renormalise.

        This is the fixed-slot form in which one chosen particle carries the
        excitation.
        """
        pattern = tuple(pattern)
        kept = {k: v for k, v in self.amplitudes.items() if tuple(l for _, l in k) == pattern}
        norm = math.sqrt(sum(abs(v) ** 2 for v in kept.values()))
        if norm == 0:
            raise InvalidParameters(f"no amplitude with level pattern {pattern}")
        return MultiParticleState(self.n_particles, self.wells, {k: v / norm for k, v in kept.items()})

    def to_json(self) -> dict:
        terms = [
            {"slots": [list(s) for s in key], "re": float(v.real), "im": float(v.imag)}
            for key, v in sorted(self.amplitudes.items())
        ]
        return {
            "n_particles": self.n_particles,
            "n_wells": self.n_wells,
            "wells": list(self.wells),
            "terms": terms,
        }

    @classmethod
    def from_json(cls, data: dict) -> MultiParticleState:
        amps = {
            tuple((int(w), int(l)) for w, l in t["slots"]): complex(t["re"], t["im"]) for t in data["terms"]
        }
        wells = tuple(data.get("wells", range(data["n_wells"])))
        return cls(int(data["n_particles"]), wells, amps)


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def matrix_from_json(rows: list) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


# ---------------------------------------------------------------------------
# bases


def standard_phase_unitary(n: int, kind: str = "dft") -> PhaseUnitary:
    """``paper2``: rows (1, -1)/sqrt2 and (1, 1)/sqrt2.  ``dft``: exp(2 pi i jk/n)/sqrt(n)."""
    if n < 2:
        raise InvalidParameters("n must be >= 2")
    if kind == "paper2":
        if n != 2:
            raise InvalidKindForN("kind 'paper2' exists only for n = 2")
        return PhaseUnitary(np.array([[1, -1], [1, 1]]) / math.sqrt(2))
    if kind == "dft":
        jk = np.outer(np.arange(n), np.arange(n))
        return PhaseUnitary(np.exp(2j * np.pi * jk / n) / math.sqrt(n))
    raise InvalidKindForN(f"unknown kind {kind!r}")


def random_unitary(n: int, rng: np.random.Generator) -> GeneralUnitary:
    """Haar-random unitary."""
    return GeneralUnitary(unitary_group.rvs(n, random_state=rng) if n > 1 else np.array([[1.0]]))


def random_phase_unitary(n: int, rng: np.random.Generator) -> PhaseUnitary:
    """``D1 P F D2`` with random diagonal phases, random permutation and the DFT."""
    f = standard_phase_unitary(n, "dft").entries
    d1 = np.exp(2j * np.pi * rng.random(n))
    d2 = np.exp(2j * np.pi * rng.random(n))
    perm = rng.permutation(n)
    return PhaseUnitary(d1[:, None] * f[perm] * d2[None, :])


def to_nonlocal_basis(c: GeneralUnitary, level: int = 0) -> list[SingleParticleState]:
    return [SingleParticleState(row, level) for row in c.entries]


def local_basis(n: int, level: int = 0) -> list[SingleParticleState]:
    return [SingleParticleState(row, level) for row in np.eye(n)]


# ---------------------------------------------------------------------------
# determinants


def _apply(op: str, level: int) -> int:
    if op == IDENTITY:
        return level
    if level not in (0, 1):
        raise InvalidParameters(f"NOT is defined on levels 0 and 1, got {level}")
    return 1 - level


@lru_cache(maxsize=16)
def _well_tuples(n_wells: int, m: int) -> np.ndarray:
    out = np.array(list(itertools.product(range(n_wells), repeat=m)), dtype=np.int64)
    out.setflags(write=False)
    return out.reshape(-1, m)


def _placements(ops: Sequence[str]) -> list[tuple[str, ...]]:
    return sorted(set(itertools.permutations(ops)))


def _check_inputs(states: Sequence[SingleParticleState]) -> tuple[int, int]:
    m = len(states)
    if m == 0:
        raise InvalidParameters("need at least one state")
    if m > MAX_PARTICLES:
        raise InvalidParameters(f"at most {MAX_PARTICLES} particles are supported")
    n = states[0].n_wells
    if any(s.n_wells != n for s in states):
        raise InvalidParameters("all states must live on the same wells")
    if m > n:
        raise InvalidParameters(f"{m} particles cannot be antisymmetrised over {n} wells")
    gram = np.array(
        [[np.vdot(a.amplitudes, b.amplitudes) if a.level == b.level else 0 for b in states] for a in states]
    )
    if abs(np.linalg.det(gram)) < GRAM_TOL:
        raise LinearlyDependentInputs("input states are linearly dependent; the determinant vanishes")
    return m, n


def _amplitude_blocks(
    states: Sequence[SingleParticleState],
    ops: Sequence[str],
    symmetrize_slots: bool,
    chunk: int = 1 << 16,
) -> dict[tuple[int, ...], np.ndarray]:
    """Determinant amplitudes for every well tuple, grouped by level pattern.

    Row ``s`` of the determinant is operator ``ops[s]`` applied to each input
    state and read off at slot ``s``'s (well, level).  With
    ``symmetrize_slots`` the operator column is additionally summed over all
    its distinct orderings, which antisymmetrises the result under full slot
    exchange.
    """
    m = len(states)
    n = states[0].n_wells
    coeff = np.stack([s.amplitudes for s in states], axis=1)  # (well, state)
    in_levels = [s.level for s in states]
    placements = _placements(ops) if symmetrize_slots else [tuple(ops)]
    reachable = sorted({_apply(op, l) for op in ops for l in in_levels})
    tuples = _well_tuples(n, m)
    scale = 1 / math.sqrt(math.factorial(m) * len(placements))

    dets: dict[bytes, np.ndarray] = {}

    def det_for(mask: np.ndarray) -> np.ndarray:
        key = mask.tobytes()
        if key not in dets:
            out = np.empty(len(tuples), dtype=complex)
            for start in range(0, len(tuples), chunk):
                rows = coeff[tuples[start : start + chunk]]  # (chunk, slot, state)
                out[start : start + chunk] = np.linalg.det(rows * mask)
            dets[key] = out
        return dets[key]

    blocks: dict[tuple[int, ...], np.ndarray] = {}
    for pattern in itertools.product(reachable, repeat=m):
        amp = None
        for placement in placements:
            mask = np.array(
                [[_apply(placement[s], in_levels[j]) == pattern[s] for j in range(m)] for s in range(m)]
            )
            if not (mask.any(axis=0).all() and mask.any(axis=1).all()):
                continue
            amp = det_for(mask) if amp is None else amp + det_for(mask)
        if amp is not None:
            blocks[pattern] = amp * scale
    return blocks


def _blocks_to_state(blocks, n_wells: int, m: int, prune: float | None) -> MultiParticleState:
    tuples = _well_tuples(n_wells, m)
    if prune is None:
        prune = 0.0 if len(tuples) <= FULL_STORAGE_LIMIT else DEFAULT_PRUNE
    amps: dict[Key, complex] = {}
    discarded = 0.0
    for pattern, block in blocks.items():
        mag = np.abs(block)
        keep = mag > prune
        if (~keep).any():
            discarded = max(discarded, float(mag[~keep].max()))
        for idx in np.flatnonzero(keep):
            amps[tuple(zip(tuples[idx].tolist(), pattern))] = complex(block[idx])
    return MultiParticleState(m, tuple(range(n_wells)), amps, discarded)


def antisymmetrize(states: Sequence[SingleParticleState], *, prune: float | None = None) -> MultiParticleState:
    """Slater determinant ``(1/sqrt(m!)) sum_sigma sign(sigma) (x)_s state_sigma(s)``.

    Every well tuple is enumerated, so same-well amplitudes are computed
    rather than assumed to vanish.  ``prune`` drops stored amplitudes of at
    most that magnitude (default: keep everything up to 50 000 well tuples).
    """
    m, n = _check_inputs(states)
    blocks = _amplitude_blocks(states, [IDENTITY] * m, symmetrize_slots=False)
    return _blocks_to_state(blocks, n, m, prune)


def excite(
    states: Sequence[SingleParticleState],
    spec: ExcitationSpec,
    *,
    symmetrize_slots: bool = True,
    prune: float | None = None,
) -> MultiParticleState:
    """Determinant whose tagged rows carry NOT instead of the identity.

    With ``symmetrize_slots=False`` this is the fixed-slot form in which the
    tagged particles are the excited ones; the default sums over which slots
    carry the excitation so that the result is antisymmetric under any slot
    exchange.  The two agree on every measurement statistic.
    """
    m, n = _check_inputs(states)
    if spec.n_slots != m:
        raise InvalidParameters(f"excitation has {spec.n_slots} slots, state has {m} particles")
    blocks = _amplitude_blocks(states, spec.tags, symmetrize_slots)
    return _blocks_to_state(blocks, n, m, prune)


def product_state(slots: Iterable[Slot], n_wells: int) -> MultiParticleState:
    """Single product term, for diagnostics; not antisymmetric."""
    key = tuple((int(w), int(l)) for w, l in slots)
    return MultiParticleState(len(key), tuple(range(n_wells)), {key: 1 + 0j})


def exclusion_spectrum(state: MultiParticleState) -> float:
    """Largest amplitude on any tuple that puts two particles in one well."""
    worst = state.discarded_max
    for key, val in state.amplitudes.items():
        wells = [w for w, _ in key]
        if len(set(wells)) < len(wells):
            worst = max(worst, abs(val))
    return worst


@dataclass(frozen=True)
class PhaseCheck:
    max_deviation: float
    global_phase: float
    det_phase: float
    phase_error: float


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def verify_phase_equivalence(
    c: GeneralUnitary,
    excitation: ExcitationSpec | None = None,
    *,
    tol: float = PHASE_TOL,
    symmetrize_slots: bool = True,
) -> PhaseCheck:
    """Compare the determinant built from the rows of ``c`` with the local one.

    Both sides are aligned on the phase of the local side's largest
    amplitude.  The recovered phase must equal ``arg det c`` (mod 2 pi).
    """
    if not isinstance(c, GeneralUnitary):
        c = GeneralUnitary(c)
    n = c.n
    ops = excitation.tags if excitation is not None else (IDENTITY,) * n
    if len(ops) != n:
        raise InvalidParameters("excitation must tag exactly n slots")
    sym = symmetrize_slots and excitation is not None
    lhs = _amplitude_blocks(to_nonlocal_basis(c), ops, sym)
    rhs = _amplitude_blocks(local_basis(n), ops, sym)
    if lhs.keys() != rhs.keys():
        raise PhaseEquivalenceViolation("level patterns differ between the two constructions")

    ref_pattern, ref_idx, ref_mag = None, None, -1.0
    for pattern, block in rhs.items():
        i = int(np.argmax(np.abs(block)))
        if abs(block[i]) > ref_mag:
            ref_pattern, ref_idx, ref_mag = pattern, i, abs(block[i])
    phase = float(np.angle(lhs[ref_pattern][ref_idx] / rhs[ref_pattern][ref_idx]))
    rot = np.exp(1j * phase)

    worst, worst_key = 0.0, None
    tuples = _well_tuples(n, n)
    for pattern in rhs:
        dev = np.abs(lhs[pattern] - rot * rhs[pattern])
        i = int(np.argmax(dev))
        if dev[i] > worst:
            worst, worst_key = float(dev[i]), tuple(zip(tuples[i].tolist(), pattern))
    det_phase = c.det_phase
    phase_error = abs(_wrap(phase - det_phase))
    if worst > tol:
        raise PhaseEquivalenceViolation(
            f"deviation {worst:.3e} at {worst_key} exceeds {tol:g}", worst_key, worst
        )
    if phase_error > tol:
        raise PhaseEquivalenceViolation(f"recovered phase differs from arg det C by {phase_error:.3e}")
    return PhaseCheck(worst, phase, det_phase, phase_error)
