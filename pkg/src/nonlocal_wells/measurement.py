"""Per-well measurements on antisymmetrised states.

Measuring a well returns a (well, level) pair.  The remaining particles are
described by the algebraic cofactor of the measured entry: every stored tuple
whose slot ``s`` sits in the well contributes ``(-1)**s * amp`` to the tuple
with that slot deleted.  Slot labels never appear in reported outcomes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dicke import QubitState
from .errors import DimensionMismatch, EmptyWell, InvalidParameters, ZeroProbabilityOutcome
from .nonlocal_algebra import MultiParticleState

PRUNE_TOL = 1e-14
SUM_TOL = 1e-12
EQUIVALENCE_TOL = 1e-10
MULTI_OCCUPANCY_TOL = 1e-10
# Level label reported when the measured well turns out to hold no particle.
EMPTY = -1


@dataclass(frozen=True, order=True)
class WellOutcome:
    well: int
    level: int

    def __str__(self):
        return f"({self.well},{self.level})"


@dataclass(frozen=True)
class OutcomeDistribution:
    well: int
    probabilities: Mapping[int, float]

    def __post_init__(self):
        if any(p < 0 for p in self.probabilities.values()):
            raise InvalidParameters("negative probability")
        total = sum(self.probabilities.values())
        if abs(total - 1) > SUM_TOL:
            raise InvalidParameters(f"probabilities sum to {total!r}")

    def __getitem__(self, level: int) -> float:
        return self.probabilities.get(level, 0.0)

    def sampling_table(self) -> tuple[list[int], np.ndarray]:
        """Levels in canonical (ascending) order with their cumulative weights.

        Outcomes below the pruning threshold are left out so sampling can
        never select a branch that collapse would reject.
        """
        levels = [lvl for lvl in sorted(self.probabilities) if self.probabilities[lvl] >= PRUNE_TOL]
        cum = np.cumsum([self.probabilities[lvl] for lvl in levels])
        return levels, cum / cum[-1]


def _format_outcomes(outcomes: Sequence[tuple[int, int]]) -> str:
    return "[" + ",".join(f"({w},{lvl})" for w, lvl in outcomes) + "]"


@dataclass(frozen=True)
class ShotRecord:
    seed: int
    order: tuple[int, ...]
    levels: np.ndarray = field(repr=False)  # (shots, len(order)) observed levels
    shards: int = 1

    @property
    def shots(self) -> int:
        return int(self.levels.shape[0])

    def shot(self, i: int) -> tuple[WellOutcome, ...]:
        return tuple(WellOutcome(w, int(lvl)) for w, lvl in zip(self.order, self.levels[i]))

    @property
    def counts(self) -> dict[str, int]:
        rows, freq = np.unique(self.levels, axis=0, return_counts=True)
        out = {}
        for row, c in zip(rows, freq):
            key = _format_outcomes(sorted(zip(self.order, (int(v) for v in row))))
            out[key] = out.get(key, 0) + int(c)
        return dict(sorted(out.items()))

    def frequencies(self) -> dict[str, float]:
        return {k: c / self.shots for k, c in self.counts.items()}

    def to_json(self) -> dict:
        return {"seed": self.seed, "shots": self.shots, "order": list(self.order), "counts": self.counts}


def _occupancy_weights(state: MultiParticleState, well: int) -> tuple[dict[int, float], float, float]:
    if well not in state.wells:
        raise InvalidParameters(f"well {well} is not in play (wells {state.wells})")
    weights: dict[int, float] = {}
    multi = 0.0
    total = 0.0
    for key, val in state.amplitudes.items():
        p = abs(val) ** 2
        total += p
        hits = [lvl for w, lvl in key if w == well]
        if len(hits) == 1:
            weights[hits[0]] = weights.get(hits[0], 0.0) + p
        elif not hits:
            weights[EMPTY] = weights.get(EMPTY, 0.0) + p
        else:
            multi += p
    return weights, multi, total


def outcome_distribution(state: MultiParticleState, well: int) -> OutcomeDistribution:
    """Born probabilities of each level found in ``well``.

    Probabilities are relative to the state's total weight.  A tuple with no
    particle in the well counts towards the ``EMPTY`` label, which only occurs
    for states with fewer particles than wells.
    """
    weights, multi, total = _occupancy_weights(state, well)
    if total == 0 or weights.get(EMPTY, 0.0) >= total * (1 - MULTI_OCCUPANCY_TOL):
        raise EmptyWell(f"no particle can be found in well {well}")
    if multi > MULTI_OCCUPANCY_TOL * total:
        raise InvalidParameters(f"well {well} holds two particles with weight {multi / total:.3g}")
    probs = {lvl: w / total for lvl, w in sorted(weights.items()) if w > 0}
    norm = sum(probs.values())
    return OutcomeDistribution(well, {lvl: p / norm for lvl, p in probs.items()})


def collapse(state: MultiParticleState, outcome: WellOutcome) -> MultiParticleState:
    """Cofactor state of the particles left after ``outcome``."""
    well, level = outcome.well, outcome.level
    dist = outcome_distribution(state, well)
    if dist[level] < PRUNE_TOL:
        raise ZeroProbabilityOutcome(f"outcome {outcome} has probability {dist[level]:.3g}")
    acc: dict[tuple, complex] = {}
    for key, val in state.amplitudes.items():
        hits = [s for s, (w, _) in enumerate(key) if w == well]
        if level == EMPTY:
            if not hits:
                acc[key] = acc.get(key, 0j) + val
            continue
        if len(hits) != 1 or key[hits[0]][1] != level:
            continue
        s = hits[0]
        reduced = key[:s] + key[s + 1 :]
        acc[reduced] = acc.get(reduced, 0j) + (-val if s % 2 else val)
    total = sum(abs(v) ** 2 for v in acc.values())
    scale = 1 / math.sqrt(total)
    kept = {}
    discarded = 0.0
    for key, val in acc.items():
        if abs(val) ** 2 < PRUNE_TOL * total:
            discarded = max(discarded, abs(val) * scale)
        else:
            kept[key] = val
    scale = 1 / math.sqrt(sum(abs(v) ** 2 for v in kept.values()))
    n_left = state.n_particles - (level != EMPTY)
    wells = tuple(w for w in state.wells if w != well)
    return MultiParticleState(n_left, wells, {k: v * scale for k, v in kept.items()}, discarded)


def check_order(state: MultiParticleState, order: Sequence[int] | None) -> tuple[int, ...]:
    order = tuple(state.wells) if order is None else tuple(int(w) for w in order)
    if not order:
        raise InvalidParameters("order must name at least one well")
    if len(set(order)) != len(order):
        raise InvalidParameters(f"order {order} repeats a well")
    missing = set(order) - set(state.wells)
    if missing:
        raise InvalidParameters(f"wells {sorted(missing)} are not in the state")
    return order


def joint_distribution(state: MultiParticleState, order: Sequence[int] | None = None) -> dict[tuple[int, ...], float]:
    """Exact probability of every level sequence along ``order`` (chain rule)."""
    order = check_order(state, order)
    out: dict[tuple[int, ...], float] = {}

    def walk(current, depth, prefix, prob):
        if depth == len(order):
            out[prefix] = prob
            return
        dist = outcome_distribution(current, order[depth])
        for lvl, p in dist.probabilities.items():
            if p < PRUNE_TOL:
                continue
            nxt = collapse(current, WellOutcome(order[depth], lvl)) if depth + 1 < len(order) else current
            walk(nxt, depth + 1, prefix + (lvl,), prob * p)

    walk(state, 0, (), 1.0)
    return dict(sorted(out.items()))


def multiset_distribution(joint: Mapping[tuple[int, ...], float], order: Sequence[int]) -> dict[str, float]:
    """Re-key a joint distribution by the sorted multiset of (well, level) pairs."""
    out: dict[str, float] = {}
    for seq, p in joint.items():
        key = _format_outcomes(sorted(zip(order, seq)))
        out[key] = out.get(key, 0.0) + p
    return dict(sorted(out.items()))


def sequence_distribution_json(joint: Mapping[tuple[int, ...], float], order: Sequence[int]) -> dict[str, float]:
    return {_format_outcomes(list(zip(order, seq))): p for seq, p in joint.items()}


class _Node:
    __slots__ = ("state", "levels", "cum", "children")

    def __init__(self, state):
        self.state = state
        self.levels = None
        self.cum = None
        self.children = {}


def _sample(root: _Node, order: tuple[int, ...], u: np.ndarray) -> np.ndarray:
    """Walk the outcome tree for every row of uniforms ``u`` at once."""
    out = np.empty(u.shape, dtype=np.int64)

    def descend(node, depth, rows):
        if depth == len(order) or rows.size == 0:
            return
        if node.levels is None:
            node.levels, node.cum = outcome_distribution(node.state, order[depth]).sampling_table()
        picks = np.minimum(np.searchsorted(node.cum, u[rows, depth], side="right"), len(node.levels) - 1)
        for i, lvl in enumerate(node.levels):
            chosen = rows[picks == i]
            if chosen.size == 0:
                continue
            out[chosen, depth] = lvl
            if depth + 1 < len(order):
                if lvl not in node.children:
                    node.children[lvl] = _Node(collapse(node.state, WellOutcome(order[depth], lvl)))
                descend(node.children[lvl], depth + 1, chosen)

    descend(root, 0, np.arange(u.shape[0]))
    return out


def _shard_seeds(seed: int, shards: int) -> list:
    if shards == 1:
        return [seed]
    return np.random.SeedSequence(seed).spawn(shards)


def _run_shard(state, order, shots, seed_source):
    rng = np.random.Generator(np.random.PCG64(seed_source))
    u = rng.random((shots, len(order)))
    return _sample(_Node(state), order, u)


def run_protocol(
    state: MultiParticleState,
    order: Sequence[int] | None,
    shots: int,
    seed: int,
    *,
    shards: int = 1,
    workers: int = 1,
) -> ShotRecord:
    """Sample ``shots`` sequential measurements along ``order``.

    Each shot draws one uniform per step from PCG64 and picks a level by
    inverse CDF over the ascending level list.  With ``shards > 1`` the shot
    range is split into contiguous blocks seeded by ``SeedSequence(seed).spawn``;
    ``workers`` only changes where the shards run, never the result.
    """
    order = check_order(state, order)
    if shots < 1:
        raise InvalidParameters("shots must be at least 1")
    if not 0 <= seed < 2**64:
        raise InvalidParameters("seed must be a 64-bit unsigned integer")
    if shards < 1 or shards > shots:
        raise InvalidParameters("shards must lie in 1..shots")
    sizes = [len(block) for block in np.array_split(np.arange(shots), shards)]
    seeds = _shard_seeds(seed, shards)
    if workers > 1 and shards > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_shard, [state] * shards, [order] * shards, sizes, seeds))
    else:
        parts = [_run_shard(state, order, n, s) for n, s in zip(sizes, seeds)]
    return ShotRecord(seed, order, np.concatenate(parts, axis=0), shards)


def well_pattern_distribution(state: MultiParticleState) -> dict[str, float]:
    """Probability of each bitstring of levels read over ``state.wells``."""
    if state.n_particles != state.n_wells:
        raise DimensionMismatch(f"{state.n_particles} particles in {state.n_wells} wells")
    if not state.levels() <= {0, 1}:
        raise DimensionMismatch("only levels 0 and 1 have a bitstring reading")
    position = {w: i for i, w in enumerate(state.wells)}
    out: dict[str, float] = {}
    total = 0.0
    for key, val in state.amplitudes.items():
        p = abs(val) ** 2
        total += p
        if len({w for w, _ in key}) < len(key):
            continue
        bits = ["0"] * state.n_wells
        for w, lvl in key:
            bits[position[w]] = str(lvl)
        b = "".join(bits)
        out[b] = out.get(b, 0.0) + p
    return {b: p / total for b, p in sorted(out.items())}


def measurement_equivalent(
    state: MultiParticleState, qubit_state: QubitState, tol: float = EQUIVALENCE_TOL
) -> tuple[bool, float]:
    """Compare which-wells-are-excited statistics with a qubit state's bitstrings."""
    if qubit_state.n != state.n_wells:
        raise DimensionMismatch(f"{state.n_wells} wells vs {qubit_state.n} qubits")
    ours = well_pattern_distribution(state)
    theirs = qubit_state.distribution()
    deviation = max(abs(ours.get(b, 0.0) - theirs.get(b, 0.0)) for b in set(ours) | set(theirs))
    return deviation <= tol, float(deviation)
