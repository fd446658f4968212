import math

import numpy as np
import pytest

from metanoise.circuit import CZ, Circuit, Layer, Rotation, build_hea
from metanoise.errors import (
    DimensionError,
    DomainError,
    PreconditionError,
    ResourceLimitError,
    UnsupportedBasisError,
)
from metanoise.liouvillian import Liouvillian, PauliChannel, build_superoperator, channel_generator
from metanoise.pauli import CliffordTableau, PauliString, PauliVector
from metanoise.resilience import (
    StabilizerGroup,
    StabilizerState,
    algorithm1_bound,
    algorithm1_trace,
    analog_bound,
    circuit_bound,
    hea_min_multiplicity,
    lambda_m_exact,
    lambda_m_general,
    layer_transfer_matrix,
    per_qubit_to_weighted,
    sm_recurrence,
)

from conftest import random_density
from oracles import brute_force_lambda, layer_unitary, random_pauli_instance, strings_without_adjacent_x, dense_paulis


def zero_dense(n):
    rho = np.zeros((2**n, 2**n))
    rho[0, 0] = 1
    return rho


def same_extended(a, b, atol=1e-9):
    return a == b or abs(a - b) <= atol


# ---------------------------------------------------------------- exact index


def test_single_qubit_example():
    c = Circuit(1, (Layer((), PauliChannel.local(1, 0.5, 0.0, 0.5)),))
    r = lambda_m_exact(c, zero_dense(1))
    assert r.lambda_m == pytest.approx(math.log(0.5))
    assert r.multiplicity == 1
    assert brute_force_lambda(c, zero_dense(1)) == (pytest.approx(math.log(0.5)), 1)


def test_identity_channels_give_zero():
    c = Circuit(2, (Layer((CZ(0, 1),), PauliChannel.noiseless(2)),) * 2)
    r = lambda_m_exact(c, zero_dense(2))
    assert r.lambda_m == 0.0
    # support of |00> is {II, IZ, ZI, ZZ}; the CZ layers only map it to itself
    assert r.multiplicity == 4


def test_transfer_matrix_matches_dense(rng):
    n = 2
    layer = Layer((Rotation("y", 0, 0.7), CZ(0, 1), Rotation("x", 1, 1.3)), PauliChannel.noiseless(n))
    u = layer_unitary(layer, n)
    paulis = dense_paulis(n)
    want = np.array([[np.trace(pj @ u @ pi @ u.conj().T).real / 4 for pi in paulis] for pj in paulis])
    np.testing.assert_allclose(layer_transfer_matrix(layer, n).toarray(), want, atol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_dp_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    for _ in range(15):
        n, L = int(rng.integers(1, 3)), int(rng.integers(1, 4))
        c = random_pauli_instance(rng, n, L)
        rho = zero_dense(n) if rng.random() < 0.5 else random_density(rng, n)
        r = lambda_m_exact(c, rho)
        lo, mult = brute_force_lambda(c, rho)
        assert same_extended(r.lambda_m, lo)
        assert r.multiplicity == mult
        assert r.lambda_m <= 0 and r.multiplicity >= 1


def test_pauli_vector_input(rng):
    c = random_pauli_instance(rng, 2, 2)
    rho = random_density(rng, 2)
    a = lambda_m_exact(c, rho)
    b = lambda_m_exact(c, PauliVector.from_dense(rho))
    assert same_extended(a.lambda_m, b.lambda_m) and a.multiplicity == b.multiplicity


def test_general_generators_match_pauli_dp(rng):
    for _ in range(5):
        c = random_pauli_instance(rng, 1, 3, allow_zero=False)
        c = Circuit(1, tuple(Layer(l.gates, PauliChannel.local(1, *rng.uniform(0.1, 0.9, 3))) for l in c.layers))
        rho = random_density(rng, 1)
        want = lambda_m_exact(c, rho)
        got = lambda_m_general(
            [layer_unitary(l, 1) for l in c.layers], [channel_generator(l.noise) for l in c.layers], rho
        )
        assert got.lambda_m == pytest.approx(want.lambda_m, abs=1e-9)
        assert got.multiplicity == want.multiplicity


def test_general_dephasing_generator():
    # the field splits the coherences into two eigenvectors with equal decay
    gen = build_superoperator(Liouvillian.from_paulis(1, {"Z": 0.5}, [("Z", 0.25)]))
    plus = np.full((2, 2), 0.5)
    r = lambda_m_general([np.eye(2)], [gen], plus)
    assert r.lambda_m == pytest.approx(-0.5)
    assert r.multiplicity == 2


def test_exact_errors():
    big = build_hea(6, 1, "y", np.zeros((1, 6)), PauliChannel.noiseless(6))
    with pytest.raises(ResourceLimitError):
        lambda_m_exact(big, PauliVector.zero_state(6))
    class Opaque:
        n = 1

    c = Circuit(1, (Layer((), Opaque()),))
    with pytest.raises(UnsupportedBasisError):
        lambda_m_exact(c, zero_dense(1))
    with pytest.raises(ResourceLimitError):
        lambda_m_general([np.eye(8)], [np.eye(64)], np.eye(8) / 8)


@pytest.mark.parametrize("axis", ["x", "y"])
def test_hea_index_is_minus_infinity(rng, axis):
    n = 4
    th = rng.uniform(0, 2 * np.pi, (2, n))
    c = build_hea(n, 2, axis, th, PauliChannel.local(n, 0.5, 0.0, 0.5))
    assert lambda_m_exact(c, PauliVector.zero_state(n)).lambda_m == -math.inf


@pytest.mark.parametrize("n", [3, 4, 5])
def test_hea_y_multiplicity_from_dp(rng, n):
    th = rng.uniform(0, 2 * np.pi, (1, n))
    c = build_hea(n, 1, "y", th, PauliChannel.local(n, 0.5, 0.0, 0.5))
    r = lambda_m_exact(c, PauliVector.zero_state(n))
    assert r.multiplicity == hea_min_multiplicity(n, "y")


# ---------------------------------------------------------------- combinatorics


def test_recurrence_values():
    assert [sm_recurrence(k) for k in (1, 2, 3)] == [3, 8, 22]
    assert sm_recurrence(8) == 3344
    assert hea_min_multiplicity(8, "y") == 3217
    assert hea_min_multiplicity(8, "x") == 3344
    assert hea_min_multiplicity(3, "y") == 5


@pytest.mark.parametrize("n", range(1, 13))
def test_recurrence_matches_enumeration(n):
    assert sm_recurrence(n) == strings_without_adjacent_x(n)
    if n >= 2:
        assert hea_min_multiplicity(n, "y") + sm_recurrence(n) == 3**n


def test_combinatorics_errors():
    with pytest.raises(DomainError):
        sm_recurrence(0)
    with pytest.raises(DomainError):
        hea_min_multiplicity(1, "y")
    with pytest.raises(ValueError):
        hea_min_multiplicity(3, "z")


# ---------------------------------------------------------------- stabilizer support


def test_stabilizer_state_round_trip():
    s = StabilizerState.from_generators(["XX", "ZZ"])
    rho = s.to_dense()
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    np.testing.assert_allclose(rho, np.outer(bell, bell), atol=1e-12)
    back = StabilizerState.from_dense(rho)
    assert back.support() == s.support()
    assert StabilizerState.from_bitstring("01").to_dense()[1, 1] == pytest.approx(1.0)


def test_stabilizer_validation():
    with pytest.raises(PreconditionError):
        StabilizerState.from_generators(["X", "Z"][:1] + ["Z"])
    with pytest.raises(PreconditionError):
        StabilizerGroup((PauliString.from_label("X"), PauliString.from_label("Z")))
    with pytest.raises(PreconditionError):
        StabilizerState.from_generators(["XI"])
    with pytest.raises(PreconditionError):
        StabilizerState.from_dense(np.eye(2) / 2)


def test_group_membership():
    g = StabilizerGroup((PauliString.from_label("XX"), PauliString.from_label("ZZ")))
    assert g.contains(PauliString.from_label("YY"))
    assert g.contains(PauliString.from_label("-YY"))
    assert not g.contains(PauliString.from_label("XI"))
    assert g.size == 4


def test_bound_empty_noise():
    rho = StabilizerState.from_bitstring("0")
    assert algorithm1_bound(rho, [CliffordTableau.identity(1)], [PauliChannel.noiseless(1)]) == 0.0


def test_bound_hand_trace():
    rho = StabilizerState.from_bitstring("0")
    noise = PauliChannel.from_weights(1, [("X", 0.1), ("Z", 0.05)])
    for mode in ("explicit", "group"):
        trace = algorithm1_trace(rho, [CliffordTableau.identity(1)], [noise], mode=mode)
        assert trace.minima == (pytest.approx(math.log(0.9)),)
    trace = algorithm1_trace(rho, [CliffordTableau.identity(1)], [noise])
    assert {p.letters for p in trace.layers[1]} == {"I", "Z"}
    assert trace.layers[0] == rho.support()


def test_bound_two_layers_is_sum_of_minima():
    rho = StabilizerState.from_bitstring("00")
    noise = PauliChannel.from_weights(2, [("XI", 0.1), ("ZI", 0.05)])
    chain = CliffordTableau.cz_chain(2)
    trace = algorithm1_trace(rho, [chain, chain], [noise, noise])
    assert algorithm1_bound(rho, [chain, chain], [noise, noise]) == sum(trace.minima)


def test_bound_minus_infinity():
    rho = StabilizerState.from_bitstring("0")
    noise = PauliChannel.from_weights(1, [("X", 0.6), ("Y", 0.4)])
    assert algorithm1_bound(rho, [CliffordTableau.identity(1)], [noise]) == -math.inf


def test_group_mode_matches_explicit(rng):
    labels = ["XI", "IZ", "ZZ", "YX", "XY", "ZI", "YY"]
    for _ in range(30):
        n = 2
        rho = StabilizerState.from_bitstring("".join(rng.choice(["0", "1"], n)))
        cliffords, noise = [], []
        for _ in range(3):
            tab = CliffordTableau.identity(n)
            for g in rng.choice(["cz", "h0", "h1", "s0", "s1"], size=3):
                step = {"cz": CliffordTableau.cz(0, 1, n), "h0": CliffordTableau.h(0, n), "h1": CliffordTableau.h(1, n),
                        "s0": CliffordTableau.s(0, n), "s1": CliffordTableau.s(1, n)}[str(g)]
                tab = tab.then(step)
            cliffords.append(tab)
            picks = rng.choice(len(labels), size=3, replace=False)
            w = rng.dirichlet(np.ones(3)) * 0.4
            noise.append(PauliChannel.from_weights(n, [(labels[i], float(x)) for i, x in zip(picks, w)]))
        a = algorithm1_bound(rho, cliffords, noise)
        b = algorithm1_bound(rho, cliffords, noise, mode="group")
        assert a == pytest.approx(b, abs=1e-14)


def test_bound_rejects_bad_input():
    with pytest.raises(PreconditionError):
        algorithm1_bound(np.eye(2) / 2, [CliffordTableau.identity(1)], [PauliChannel.noiseless(1)])
    rho = StabilizerState.from_bitstring("0")
    with pytest.raises(PreconditionError):
        algorithm1_bound(rho, [CliffordTableau.identity(1)], [PauliChannel.local(1, 0.5, 0.5, 0.5)])
    with pytest.raises(DimensionError):
        algorithm1_bound(rho, [CliffordTableau.identity(2)], [PauliChannel.noiseless(2)])
    with pytest.raises(ValueError):
        algorithm1_bound(rho, [CliffordTableau.identity(1)], [PauliChannel.noiseless(1)], mode="bogus")


def test_per_qubit_to_weighted_is_same_channel(rng):
    ch = PauliChannel.local(2, 0.6, 0.2, 0.4)
    np.testing.assert_allclose(per_qubit_to_weighted(ch).eigenvalues(), ch.eigenvalues(), atol=1e-12)


def test_bound_invariant_under_rotation_angles(rng):
    n = 3
    noise = PauliChannel.local(n, 0.8, 0.6, 0.7)
    rho = StabilizerState.from_bitstring("000")
    values = set()
    for _ in range(100):
        th = rng.uniform(0, 2 * np.pi, (4, n))
        values.add(circuit_bound(build_hea(n, 4, "y", th, noise), rho))
    assert len(values) == 1


def test_bound_versus_exact_relation(rng, note):
    counts = {"<": 0, ">": 0, "=": 0}
    for _ in range(40):
        n = int(rng.integers(1, 4))
        L = int(rng.integers(1, 4))
        p = rng.dirichlet(np.ones(4), size=n)[:, 1:] * 0.6
        px, py, pz = p.T
        q = np.stack([1 - 2 * (py + pz), 1 - 2 * (px + pz), 1 - 2 * (px + py)], axis=1)
        noise = PauliChannel(n, per_qubit=tuple(map(tuple, q)))
        th = rng.uniform(0, 2 * np.pi, (L, n))
        axis = str(rng.choice(["x", "y"]))
        c = build_hea(n, L, axis, th, noise) if n > 1 else Circuit(
            1, tuple(Layer((Rotation(axis, 0, t[0]),), noise) for t in th))
        exact = lambda_m_exact(c, PauliVector.zero_state(n)).lambda_m
        bound = circuit_bound(c, StabilizerState.from_bitstring("0" * n))
        assert math.isfinite(exact) and math.isfinite(bound)
        key = "=" if abs(exact - bound) < 1e-12 else ("<" if bound < exact else ">")
        counts[key] += 1
    note(f"bound vs exact index on 40 finite instances: "
         f"bound<exact {counts['<']}, bound>exact {counts['>']}, equal {counts['=']}")


# ---------------------------------------------------------------- analog bound


def test_analog_bound_examples():
    T = 10.0
    assert analog_bound([lambda t: 0.0], [lambda t: -0.3], T, 0.01) == 0.0
    assert analog_bound([lambda t: 1.0], [lambda t: -0.3], T, 0.01) == pytest.approx(-3.0, abs=1e-10)
    val = analog_bound([lambda t: 1.0, lambda t: 1.0], [lambda t: -t / T, lambda t: -0.5], T, 0.001)
    assert val == pytest.approx(-0.375 * T, abs=1e-5)


def test_analog_bound_vectorised_and_sign():
    T = 2.0
    f = lambda t: np.vstack([np.ones_like(t), np.ones_like(t)])
    p = lambda t: np.vstack([-t / T, np.full_like(t, -0.5)])
    assert analog_bound(f, p, T, 1e-3) == pytest.approx(-0.375 * T, abs=1e-6)
    assert analog_bound(f, p, T, 1e-3, sign=-1.0) == pytest.approx(0.625 * T, abs=1e-6)


def test_analog_bound_errors():
    with pytest.raises(DomainError):
        analog_bound([lambda t: 1.0], [lambda t: 0.0], 1.0, 0.0)
    with pytest.raises(DomainError):
        analog_bound([lambda t: 1.0], [lambda t: 0.0], 1.0, 2.0)
    with pytest.raises(DomainError):
        analog_bound([lambda t: 1.0], [lambda t: 0.0], -1.0, 0.1)
