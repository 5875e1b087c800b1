import numpy as np
import pytest
from hypothesis import given, strategies as st

from ftqlab.circuits import Circuit, CircuitBuilder
from ftqlab.frames import BatchFaults, FaultPath, RandomNoise, location_paulis, run_frames, run_tableau
from ftqlab.tableau import Tableau

N = 4
gate = st.one_of(
    st.tuples(st.sampled_from(["H", "S", "X", "Z"]), st.integers(0, N - 1)),
    st.tuples(st.sampled_from(["CNOT", "CZ"]), st.integers(0, N - 1), st.integers(0, N - 1)).filter(lambda g: g[1] != g[2]),
)


def mirror_circuit(gates, xmeas):
    """prep |0>, gates, their inverse, then measure; every ideal outcome is deterministic."""
    b = CircuitBuilder()
    qs = b.alloc(N)
    for q in qs:
        b.op("prep_0", q)
    for g in gates:
        b.op(g[0], *g[1:])
    for g in reversed(gates):
        reps = 3 if g[0] == "S" else 1
        for _ in range(reps):
            b.op(g[0], *g[1:])
    for q in qs:
        if q in xmeas:
            b.op("H", q)
            b.op("measure_X", q)
        else:
            b.op("measure_Z", q)
    return b.build()


def tableau_record(circuit, path):
    run = run_tableau(circuit, Tableau(circuit.n_qubits), np.random.default_rng(0), path)
    return run.ctx.rec[:, 0].copy()


@given(st.lists(gate, max_size=12), st.sets(st.integers(0, N - 1)), st.data())
def test_frames_match_tableau(gates, xmeas, data):
    c = mirror_circuit(gates, xmeas)
    clean = tableau_record(c, None)
    paths = []
    for _ in range(8):
        locs = data.draw(st.lists(st.integers(0, c.size - 1), max_size=3, unique=True))
        mapping = {}
        for loc in locs:
            k = len(c.locations[loc].qubits)
            mapping[loc] = data.draw(st.sampled_from(location_paulis(k)))
        paths.append(FaultPath.of(mapping))
    res = run_frames(c, len(paths), faults=BatchFaults.from_paths(paths).compiled())
    for shot, p in enumerate(paths):
        assert np.array_equal(res.ctx.rec[:, shot], tableau_record(c, p) ^ clean)


def test_x_fault_before_z_measurement_flips_outcome():
    b = CircuitBuilder()
    (q,) = b.alloc(1)
    b.op("prep_0", q)
    b.op("measure_Z", q)
    c = b.build()
    meas = [loc.index for loc in c.locations if loc.kind == "measure_Z"][0]
    for letter, flipped in (("X", True), ("Y", True), ("Z", False)):
        f = BatchFaults.from_paths([FaultPath.of({meas: letter})]).compiled()
        assert bool(run_frames(c, 1, faults=f).ctx.rec[0, 0]) == flipped
        assert bool(tableau_record(c, FaultPath.of({meas: letter}))[0]) == flipped


def test_input_errors_and_classical_control():
    b = CircuitBuilder(inputs=(0,))
    (a,) = b.alloc(1)
    b.op("prep_0", a)
    b.op("CNOT", 0, a)
    b.op("measure_Z", a)

    def fn(ctx):
        ctx.flags["fix"] = ctx.rec[0].copy()

    b.hook("fix", fn)
    b.op("classical_control", 0, control=("fix", None))
    c = b.build()
    flips = np.array([True, False, True])
    res = run_frames(c, 3, init_x={0: flips})
    assert np.array_equal(res.ctx.rec[0], flips)
    assert not res.x[0].any()  # the controlled X cancelled the input error


def test_idles_fill_layers():
    b = CircuitBuilder()
    qs = b.alloc(3)
    for q in qs:
        b.op("prep_0", q)
    b.op("CNOT", 0, 1)
    b.op("H", 0)
    c = b.build()
    assert c.depth == 3
    assert c.count("idle") == 3  # qubit 2 in layers 1-2, qubit 1 in layer 2
    assert c.size == 3 + 2 + 3
    for layer in c.layers:
        used = [q for i in layer for q in c.locations[i].qubits]
        assert sorted(used) == [0, 1, 2]


def test_builder_errors():
    b = CircuitBuilder()
    with pytest.raises(ValueError):
        b.op("T", 0)
    with pytest.raises(ValueError):
        b.op("CNOT", 0)
    with pytest.raises(ValueError):
        b.op("CZ", 1, 1)
    b2 = CircuitBuilder()
    b2.op("H", 0)
    with pytest.raises(ValueError, match="before preparation"):
        b2.build()


def test_validate_catches_double_use():
    c = Circuit(1, [], [], {}, 0, (), ())
    c.validate()
    b = CircuitBuilder()
    b.op("prep_0", 0)
    good = b.build()
    bad = Circuit(good.n_qubits, good.locations, [good.layers[0] + good.layers[0]], {}, 0, (), (0,))
    with pytest.raises(ValueError, match="twice"):
        bad.validate()


def test_fault_path_checks():
    b = CircuitBuilder()
    b.op("prep_0", 0)
    c = b.build()
    FaultPath.of({0: "X"}).check(c)
    with pytest.raises(ValueError):
        FaultPath.of({5: "X"}).check(c)
    with pytest.raises(ValueError):
        FaultPath.of({0: "XX"}).check(c)
    assert len(location_paulis(1)) == 3 and len(location_paulis(2)) == 15


def test_random_noise_rates_and_tally():
    b = CircuitBuilder()
    qs = b.alloc(2)
    for q in qs:
        b.op("prep_0", q)
    for _ in range(10):
        b.op("CNOT", *qs)
    for q in qs:
        b.op("measure_Z", q)
    c = b.build()
    assert not run_frames(c, 50, noise=RandomNoise(0.0, np.random.default_rng(0))).ctx.rec.any()
    counts = np.zeros(20_000, dtype=np.int64)
    run_frames(c, 20_000, noise=RandomNoise(0.05, np.random.default_rng(1), counts=counts))
    expected = 0.05 * c.size
    assert abs(counts.mean() - expected) < 5 * np.sqrt(expected / 20_000)


def test_frames_deterministic():
    c = mirror_circuit([("H", 0), ("CNOT", 0, 1), ("S", 2)], {1})
    runs = [run_frames(c, 500, noise=RandomNoise(0.1, np.random.default_rng(9))).ctx.rec for _ in range(2)]
    assert np.array_equal(*runs)
