import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_wells.dicke import basis_state, generate
from nonlocal_wells.errors import DimensionMismatch, EmptyWell, InvalidParameters, ZeroProbabilityOutcome
from nonlocal_wells.measurement import (
    EMPTY,
    OutcomeDistribution,
    WellOutcome,
    collapse,
    joint_distribution,
    measurement_equivalent,
    multiset_distribution,
    outcome_distribution,
    run_protocol,
    sequence_distribution_json,
    well_pattern_distribution,
)
from nonlocal_wells.nonlocal_algebra import (
    ExcitationSpec,
    MultiParticleState,
    antisymmetrize,
    excite,
    local_basis,
    random_unitary,
    standard_phase_unitary,
    to_nonlocal_basis,
)

R2 = 1 / math.sqrt(2)


def omega(n, k, basis="dft", **kwargs):
    states = local_basis(n) if basis == "local" else to_nonlocal_basis(standard_phase_unitary(n, basis))
    if k == 0:
        return antisymmetrize(states)
    return excite(states, ExcitationSpec.on(n, *range(k)), **kwargs)


def test_two_particle_marginals():
    state = omega(2, 1, "paper2")
    dist = outcome_distribution(state, 0)
    assert dist[0] == pytest.approx(0.5, abs=1e-15)
    assert dist[1] == pytest.approx(0.5, abs=1e-15)
    assert outcome_distribution(omega(2, 0), 0).probabilities == {0: pytest.approx(1.0)}


def test_three_particle_marginal():
    dist = outcome_distribution(omega(3, 1), 0)
    assert dist[1] == pytest.approx(1 / 3, abs=1e-14)
    assert dist[0] == pytest.approx(2 / 3, abs=1e-14)


def test_distribution_invariants():
    with pytest.raises(InvalidParameters):
        OutcomeDistribution(0, {0: 0.7, 1: 0.2})
    with pytest.raises(InvalidParameters):
        OutcomeDistribution(0, {0: 1.1, 1: -0.1})
    levels, cum = OutcomeDistribution(0, {1: 0.25, 0: 0.75}).sampling_table()
    assert levels == [0, 1]
    np.testing.assert_allclose(cum, [0.75, 1.0])


def test_unknown_well():
    with pytest.raises(InvalidParameters):
        outcome_distribution(omega(2, 1), 5)


def test_empty_well():
    state = MultiParticleState(1, (0, 1), {((0, 0),): 1 + 0j})
    with pytest.raises(EmptyWell):
        outcome_distribution(state, 1)


def test_single_particle_in_two_wells():
    # a lone nonlocal particle: finding it in one well empties the other
    state = antisymmetrize(to_nonlocal_basis(standard_phase_unitary(2, "paper2"))[:1])
    dist = outcome_distribution(state, 0)
    assert dist[0] == pytest.approx(0.5) and dist[EMPTY] == pytest.approx(0.5)
    after = collapse(state, WellOutcome(0, EMPTY))
    assert after.wells == (1,)
    assert outcome_distribution(after, 1)[0] == pytest.approx(1.0)


def test_two_particle_collapse_pins_partner():
    state = omega(2, 1, "paper2")
    rest = collapse(state, WellOutcome(0, 0))
    assert rest.n_particles == 1 and rest.wells == (1,)
    assert list(rest.amplitudes) == [((1, 1),)]
    assert abs(rest.amplitude(((1, 1),))) == pytest.approx(1.0)


def test_fig5_cofactor_local_basis():
    state = omega(3, 1, "local", symmetrize_slots=False)
    rest = collapse(state, WellOutcome(0, 0))
    expected = {((1, 1), (2, 0)): R2, ((2, 1), (1, 0)): -R2}
    assert set(rest.amplitudes) == set(expected)
    for key, value in expected.items():
        assert rest.amplitude(key) == pytest.approx(value, abs=1e-12)


def test_fig5_cofactor_nonlocal_basis():
    c = standard_phase_unitary(3)
    rest = collapse(omega(3, 1), WellOutcome(0, 0)).pin_levels((1, 0))
    rot = np.exp(1j * c.det_phase)
    assert rest.amplitude(((1, 1), (2, 0))) == pytest.approx(rot * R2, abs=1e-12)
    assert rest.amplitude(((2, 1), (1, 0))) == pytest.approx(-rot * R2, abs=1e-12)


def test_fig5_excited_branch_is_product_like():
    rest = collapse(omega(3, 1), WellOutcome(0, 1))
    assert rest.levels() == {0}
    ok, dev = measurement_equivalent(rest, basis_state("00"))
    assert ok and dev < 1e-12
    assert rest.antisymmetry_defect() < 1e-12


def test_collapse_zero_probability():
    with pytest.raises(ZeroProbabilityOutcome):
        collapse(omega(2, 0), WellOutcome(0, 1))


def test_joint_distribution_examples():
    assert joint_distribution(omega(2, 1, "paper2"), (0, 1)) == {
        (0, 1): pytest.approx(0.5),
        (1, 0): pytest.approx(0.5),
    }
    assert joint_distribution(omega(2, 0)) == {(0, 0): pytest.approx(1.0)}
    z = joint_distribution(omega(4, 2), (3, 1, 0, 2))
    assert len(z) == 6
    assert all(seq.count(1) == 2 for seq in z)
    np.testing.assert_allclose(list(z.values()), 1 / 6, atol=1e-13)


def test_order_validation():
    state = omega(3, 1)
    with pytest.raises(InvalidParameters):
        joint_distribution(state, (0, 0))
    with pytest.raises(InvalidParameters):
        joint_distribution(state, (0, 7))
    with pytest.raises(InvalidParameters):
        run_protocol(state, (0, 1), 0, 1)
    with pytest.raises(InvalidParameters):
        run_protocol(state, (0, 1), 10, -1)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_chain_rule(n):
    rng = np.random.Generator(np.random.PCG64(n))
    state = excite(to_nonlocal_basis(random_unitary(n, rng)), ExcitationSpec.on(n, 0))
    order = tuple(int(w) for w in rng.permutation(n))
    joint = joint_distribution(state, order)
    assert sum(joint.values()) == pytest.approx(1.0, abs=1e-12)
    # direct Born weights of each well pattern, no sequential collapse
    direct = well_pattern_distribution(state)
    for seq, p in joint.items():
        bits = ["0"] * n
        for w, lvl in zip(order, seq):
            bits[w] = str(lvl)
        assert p == pytest.approx(direct["".join(bits)], abs=1e-12)
    for seq, p in joint.items():
        current, product = state, 1.0
        for w, lvl in zip(order, seq):
            product *= outcome_distribution(current, w)[lvl]
            if current.n_particles > 1:
                current = collapse(current, WellOutcome(w, lvl))
        assert product == pytest.approx(p, abs=1e-12)


@pytest.mark.parametrize("n,k", [(3, 1), (4, 2), (5, 2)])
def test_order_invariance(n, k):
    state = omega(n, k)
    reference = None
    for order in itertools.permutations(range(n)):
        dist = multiset_distribution(joint_distribution(state, order), order)
        if reference is None:
            reference = dist
        assert dist.keys() == reference.keys()
        for key in dist:
            assert dist[key] == pytest.approx(reference[key], abs=1e-12)


def test_protocol_fig4_frequencies():
    record = run_protocol(omega(2, 1, "paper2"), (0, 1), 100_000, 20240601)
    freq = record.frequencies()
    assert sum(record.counts.values()) == 100_000
    assert freq["[(0,0),(1,1)]"] == pytest.approx(0.5, abs=0.005)
    assert freq["[(0,1),(1,0)]"] == pytest.approx(0.5, abs=0.005)


def test_protocol_three_wells():
    shots = 30_000
    record = run_protocol(omega(3, 1), (0, 1, 2), shots, 5)
    sigma = math.sqrt((1 / 3) * (2 / 3) / shots)
    assert len(record.counts) == 3
    for f in record.frequencies().values():
        assert abs(f - 1 / 3) < 3 * sigma


def test_protocol_exclusion_each_shot():
    record = run_protocol(omega(4, 2), (2, 0, 3, 1), 2000, 11)
    for i in range(record.shots):
        shot = record.shot(i)
        assert sorted(o.well for o in shot) == [0, 1, 2, 3]
        assert sum(o.level for o in shot) == 2


def test_protocol_determinism():
    state = omega(3, 1)
    a = run_protocol(state, None, 1, 42)
    b = run_protocol(state, None, 1, 42)
    assert a.to_json() == b.to_json()
    assert np.array_equal(a.levels, b.levels)
    big_a = run_protocol(state, (2, 0, 1), 5000, 9)
    big_b = run_protocol(state, (2, 0, 1), 5000, 9)
    assert np.array_equal(big_a.levels, big_b.levels)


def test_protocol_inverse_cdf_matches_per_shot_walk():
    state = omega(3, 1)
    order = (1, 2, 0)
    record = run_protocol(state, order, 200, 77)
    u = np.random.Generator(np.random.PCG64(77)).random((200, 3))
    for i in range(200):
        current = state
        for j, w in enumerate(order):
            levels, cum = outcome_distribution(current, w).sampling_table()
            lvl = levels[min(int(np.searchsorted(cum, u[i, j], side="right")), len(levels) - 1)]
            assert record.levels[i, j] == lvl
            if j + 1 < len(order):
                current = collapse(current, WellOutcome(w, lvl))


def test_sharding_independent_of_workers():
    state = omega(3, 1)
    serial = run_protocol(state, None, 3001, 8, shards=3)
    parallel = run_protocol(state, None, 3001, 8, shards=3, workers=3)
    assert np.array_equal(serial.levels, parallel.levels)
    assert serial.counts == parallel.counts
    assert sum(serial.counts.values()) == 3001


def test_record_json():
    record = run_protocol(omega(2, 1), (0, 1), 10, 3)
    data = record.to_json()
    assert list(data) == ["seed", "shots", "order", "counts"]
    assert data["shots"] == 10 and data["order"] == [0, 1]


def test_sequence_json_keys():
    joint = joint_distribution(omega(2, 1), (1, 0))
    assert set(sequence_distribution_json(joint, (1, 0))) == {"[(1,0),(0,1)]", "[(1,1),(0,0)]"}


def test_measurement_equivalence_examples():
    assert measurement_equivalent(omega(3, 1), generate(3, 1))[0]
    assert measurement_equivalent(omega(4, 2), generate(4, 2))[0]
    ok, dev = measurement_equivalent(omega(3, 1), generate(3, 2))
    assert not ok
    assert dev == pytest.approx(1 / 3, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        measurement_equivalent(omega(3, 1), generate(4, 1))


@settings(max_examples=20)
@given(st.integers(2, 5), st.data())
def test_distributions_sum_to_one(n, data):
    k = data.draw(st.integers(0, n))
    state = omega(n, k)
    for well in range(n):
        dist = outcome_distribution(state, well)
        assert sum(dist.probabilities.values()) == pytest.approx(1.0, abs=1e-12)
        assert all(p >= 0 for p in dist.probabilities.values())
        assert dist[1] == pytest.approx(k / n, abs=1e-12)
