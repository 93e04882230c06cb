"""Acceptance criteria, each at its stated tolerance.

Every criterion records a one-line verdict in ``RESULTS``; conftest prints
them in the terminal summary.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from nonlocal_wells.dicke import as_qubit_state, basis_state, binary_entropy, bipartite_entropy, generate, measure_qubit
from nonlocal_wells.measurement import WellOutcome, collapse, measurement_equivalent, run_protocol
from nonlocal_wells.nonlocal_algebra import (
    ExcitationSpec,
    antisymmetrize,
    excite,
    exclusion_spectrum,
    local_basis,
    random_phase_unitary,
    random_unitary,
    standard_phase_unitary,
    to_nonlocal_basis,
    verify_phase_equivalence,
)
from nonlocal_wells.well_solver import (
    DoubleWellSpec,
    fit_log_splitting,
    local_reference,
    oracle_energies,
    segment_overlap,
    solve,
    solve_parity,
    splitting_scan,
)
from tests.test_dicke import dense_entropy

RESULTS: dict[int, str] = {}
R2 = 1 / math.sqrt(2)


def record(number, passed, detail):
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    assert passed, line


def criterion_1():
    a_values = np.linspace(1.0, 4.0, 13)
    start = time.perf_counter()
    points = splitting_scan(2.0, 50.0, a_values, dps=60)
    elapsed = time.perf_counter() - start
    deltas = [p.delta_e for p in points]
    decreasing = all(d is not None for d in deltas) and all(b < a for a, b in zip(deltas, deltas[1:]))
    slope, _, r2 = fit_log_splitting(points)
    e_ground = oracle_energies(DoubleWellSpec(4.0, 6.0, 50.0), 1)[0]
    target = -2 * math.sqrt(-2 * e_ground)
    rel = abs(slope - target) / abs(target)
    ok = decreasing and r2 > 0.999 and rel < 0.10 and elapsed < 10
    return ok, f"slope {slope:.4f} vs -2kappa {target:.4f} (rel {rel:.1e}), R^2 {r2:.6f}, {elapsed:.2f}s"


def criterion_2():
    residuals = {}
    scales = {}
    for a in (2.0, 3.0, 4.0):
        spec = DoubleWellSpec(a, a + 2.0, 50.0)
        even = solve_parity(spec, "even", 1)[0]
        scales[a], residuals[a] = segment_overlap(even, local_reference(spec))
    rel = abs(abs(scales[4.0]) - R2) / R2
    monotone = residuals[2.0] > residuals[3.0] > residuals[4.0]
    ok = rel < 0.02 and residuals[4.0] < 1e-2 and monotone
    res = ", ".join(f"{r:.1e}" for r in residuals.values())
    return ok, f"scale {scales[4.0]:.10f} (rel {rel:.1e}), residuals a=2,3,4: {res}"


def criterion_3():
    rng = np.random.Generator(np.random.PCG64(3))
    worst_ratio = 0.0
    count = 0
    for _ in range(10):
        # parameters on a 0.01 lattice so the potential steps fall on grid nodes
        a = rng.integers(50, 301) / 100
        width = rng.integers(100, 301) / 100
        v0 = rng.integers(1000, 10001) / 100
        spec = DoubleWellSpec(a, a + width, v0)
        analytic = [s.energy for s in solve(spec, 10**6, n_points=3)]
        oracle = oracle_energies(spec, len(analytic))
        tol = max(1e-6, 1e-8 * v0)
        worst_ratio = max(worst_ratio, float(np.max(np.abs(np.array(analytic) - oracle))) / tol)
        count += len(analytic)
    return worst_ratio < 1, f"{count} energies, worst |dE| / tolerance = {worst_ratio:.3f}"


def criterion_4():
    start = time.perf_counter()
    worst_dev = worst_phase = 0.0
    for n in range(2, 7):
        rng = np.random.Generator(np.random.PCG64(400 + n))
        for trial in range(20):
            c = random_unitary(n, rng) if trial % 2 == 0 else random_phase_unitary(n, rng)
            for excitation in (None, ExcitationSpec.on(n, int(rng.integers(n)))):
                check = verify_phase_equivalence(c, excitation)
                worst_dev = max(worst_dev, check.max_deviation)
                worst_phase = max(worst_phase, check.phase_error)
    elapsed = time.perf_counter() - start
    ok = worst_dev < 1e-10 and worst_phase < 1e-10 and elapsed < 30
    return ok, f"max deviation {worst_dev:.1e}, max theta error {worst_phase:.1e}, {elapsed:.1f}s"


def criterion_5():
    worst = 0.0
    for n in range(2, 7):
        rng = np.random.Generator(np.random.PCG64(500 + n))
        for c in (standard_phase_unitary(n), random_unitary(n, rng), random_phase_unitary(n, rng)):
            basis = to_nonlocal_basis(c)
            worst = max(worst, exclusion_spectrum(antisymmetrize(basis)))
            for k in range(1, n + 1):
                worst = max(worst, exclusion_spectrum(excite(basis, ExcitationSpec.on(n, *range(k)))))
    return worst < 1e-12, f"max same-well amplitude {worst:.1e}"


def criterion_6():
    state = excite(to_nonlocal_basis(standard_phase_unitary(2, "paper2")), ExcitationSpec.on(2, 1))
    freq = run_protocol(state, (0, 1), 100_000, 6).frequencies()
    branches = [freq.get("[(0,0),(1,1)]", 0.0), freq.get("[(0,1),(1,0)]", 0.0)]
    ok = all(abs(f - 0.5) <= 0.005 for f in branches)
    return ok, "branch frequencies " + ", ".join(f"{f:.5f}" for f in branches)


def criterion_7():
    expected = {((1, 1), (2, 0)): R2, ((2, 1), (1, 0)): -R2}
    local = excite(local_basis(3), ExcitationSpec.on(3, 0), symmetrize_slots=False)
    rest = collapse(local, WellOutcome(0, 0))
    dev_local = max(abs(rest.amplitude(k) - expected.get(k, 0)) for k in set(rest.amplitudes) | set(expected))
    c = standard_phase_unitary(3)
    rot = np.exp(-1j * c.det_phase)
    pinned = collapse(excite(to_nonlocal_basis(c), ExcitationSpec.on(3, 0)), WellOutcome(0, 0)).pin_levels((1, 0))
    dev_nonlocal = max(
        abs(rot * pinned.amplitude(k) - expected.get(k, 0)) for k in set(pinned.amplitudes) | set(expected)
    )
    excited = collapse(local, WellOutcome(0, 1))
    equivalent, dev_00 = measurement_equivalent(excited, basis_state("00"))
    ok = dev_local < 1e-12 and dev_nonlocal < 1e-12 and equivalent
    return ok, f"cofactor deviation {dev_local:.1e} (local), {dev_nonlocal:.1e} (dft); |00> deviation {dev_00:.1e}"


def _descent_error(qubits, target):
    if qubits.support() != target.support():
        return math.inf
    ref = next(iter(target.support()))
    phase = qubits.amplitudes[ref] / target.amplitudes[ref]
    return max(abs(qubits.amplitudes[b] - phase * v) for b, v in target.amplitudes.items())


def criterion_8():
    worst_eq = 0.0
    worst_descent = 0.0
    all_equivalent = True
    for n in range(2, 7):
        basis = to_nonlocal_basis(standard_phase_unitary(n))
        for k in range(1, n):
            state = excite(basis, ExcitationSpec.on(n, *range(k)))
            ok, dev = measurement_equivalent(state, generate(n, k))
            all_equivalent &= ok
            worst_eq = max(worst_eq, dev)
            if n >= 3:
                for lvl, kk in ((0, k), (1, k - 1)):
                    omega_rest = as_qubit_state(collapse(state, WellOutcome(0, lvl)))
                    _, qubit_rest = measure_qubit(generate(n, k), 0, lvl)
                    worst_descent = max(
                        worst_descent,
                        _descent_error(omega_rest, generate(n - 1, kk)),
                        _descent_error(qubit_rest, generate(n - 1, kk)),
                    )
    ok = all_equivalent and worst_eq < 1e-10 and worst_descent < 1e-12
    return ok, f"max distribution deviation {worst_eq:.1e}, shoulder descent deviation {worst_descent:.1e}"


def criterion_9():
    worst_single = 0.0
    for n in range(2, 9):
        for k in range(n + 1):
            for q in range(n):
                worst_single = max(worst_single, abs(bipartite_entropy(generate(n, k), [q]) - binary_entropy(k / n)))
    z = generate(4, 2)
    dev_z = abs(bipartite_entropy(z, [0, 1]) - dense_entropy(z, [0, 1]))
    two_two = [bipartite_entropy(generate(4, k), [0, 1]) for k in range(5)]
    z_max = all(two_two[2] >= v for v in two_two)
    ok = worst_single < 1e-12 and dev_z < 1e-12 and z_max
    return ok, f"H2 deviation {worst_single:.1e}, Z vs dense oracle {dev_z:.1e}, 2-2 cut entropies {[round(v, 6) for v in two_two]}"


SEEDED_COMMANDS = [
    ["simulate", "--wells", "3", "--excitations", "1", "--shots", "20000", "--seed", "10"],
    ["simulate", "--wells", "4", "--excitations", "2", "--shots", "5000", "--seed", "11", "--shards", "4"],
    ["verify-phase", "--n", "4", "--trials", "10", "--seed", "7", "--excite-slot", "2"],
    ["verify-phase", "--n", "3", "--trials", "10", "--seed", "8", "--kind", "phase"],
]


def criterion_10():
    identical = 0
    for argv in SEEDED_COMMANDS:
        runs = [
            subprocess.run([sys.executable, "-m", "nonlocal_wells.cli", *argv], capture_output=True, check=True).stdout
            for _ in range(2)
        ]
        identical += runs[0] == runs[1] and len(runs[0]) > 0
    return identical == len(SEEDED_COMMANDS), f"{identical}/{len(SEEDED_COMMANDS)} seeded commands byte-identical"


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    passed, detail = CRITERIA[number]()
    record(number, passed, detail)


if __name__ == "__main__":
    for number, func in CRITERIA.items():
        passed, detail = func()
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
