import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluctuator_qaoa.executor import evaluate_landscape, noiseless_model
from fluctuator_qaoa.hybrid import init_plus_state
from fluctuator_qaoa.sk import (
    Params,
    RXLayer,
    SkInstance,
    ZZLayer,
    brute_force_optimum,
    build_swap_network,
    cost,
    cost_diagonal,
    hamiltonian,
    parse_instance,
)

from oracles import dense_ansatz_value

TYPICAL = "+-++-+-++-----+"


# -- parsing -----------------------------------------------------------------


def test_parse_typical_instance():
    inst = parse_instance(TYPICAL)
    assert inst.n == 6
    assert len(inst.weights) == 15
    assert inst.text() == TYPICAL


def test_parse_small_and_prefixes():
    assert parse_instance("+++").n == 3
    assert parse_instance("w=+++").weights == (1, 1, 1)
    assert parse_instance("=+-+").weights == (1, -1, 1)
    assert parse_instance("+\u2212+").weights == (1, -1, 1)


def test_parse_rejects_bad_input():
    with pytest.raises(ValueError):
        parse_instance("++")  # no integer n
    with pytest.raises(ValueError):
        parse_instance("+0+")
    with pytest.raises(ValueError):
        parse_instance("")


def test_weight_lookup_row_major():
    inst = parse_instance(TYPICAL)
    # first row of the paper instance: w_01..w_05 = + - + + -
    assert [inst.weight(0, j) for j in range(1, 6)] == [1, -1, 1, 1, -1]
    assert inst.weight(4, 5) == 1
    assert inst.weight(5, 4) == 1  # order-free
    with pytest.raises(ValueError):
        inst.weight(2, 2)


# -- cost and brute force ----------------------------------------------------


def test_cost_example():
    inst = parse_instance("+++")
    assert cost(inst, (1, 1, -1)) == -1


@given(st.integers(0, 2**6 - 1))
@settings(max_examples=64, deadline=None)
def test_cost_negation_symmetry(code):
    inst = parse_instance(TYPICAL)
    z = tuple(1 - 2 * ((code >> k) & 1) for k in range(6))
    z_bar = tuple(-v for v in z)
    assert cost(inst, z) == cost(inst, z_bar)


def test_uniform_average_cost_is_zero():
    diag = cost_diagonal(parse_instance(TYPICAL))
    assert diag.mean() == 0.0
    assert diag.sum() == 0.0


def test_brute_force_typical_instance():
    c_star, minimizers = brute_force_optimum(parse_instance(TYPICAL))
    assert c_star == -7  # frozen from the exhaustive scan over 64 assignments
    assert len(minimizers) == 4
    as_sets = {m for m in minimizers}
    for z in minimizers:  # closed under global spin flip
        assert tuple(-v for v in z) in as_sets
    for z in minimizers:
        assert cost(parse_instance(TYPICAL), z) == -7


def test_brute_force_triangle():
    c_star, minimizers = brute_force_optimum(parse_instance("+++"))
    assert c_star == -1
    assert len(minimizers) == 6


def test_brute_force_guard():
    with pytest.raises(ValueError):
        brute_force_optimum(SkInstance(25, tuple([1] * (25 * 24 // 2))))


# -- Hamiltonian diagonal ----------------------------------------------------


def test_hamiltonian_identity_permutation():
    h = hamiltonian(parse_instance("+++"))
    assert h.diag[0] == 3  # |000> -> all spins +1, three + edges


def test_hamiltonian_symmetric_instance_reversal():
    inst = parse_instance("+" * 15)
    np.testing.assert_array_equal(
        hamiltonian(inst).diag, hamiltonian(inst, (5, 4, 3, 2, 1, 0)).diag
    )


def test_hamiltonian_permutation_roundtrip():
    inst = parse_instance(TYPICAL)
    perm = (3, 1, 4, 0, 5, 2)
    inverse = tuple(np.argsort(perm))
    composed = tuple(perm[inverse[i]] for i in range(6))
    np.testing.assert_array_equal(
        hamiltonian(inst, composed).diag, hamiltonian(inst).diag
    )


def test_hamiltonian_diag_invariants():
    diag = cost_diagonal(parse_instance(TYPICAL))
    assert diag.sum() == 0.0
    flipped = diag[::-1]  # bitwise negation mirrors the index
    np.testing.assert_array_equal(diag, flipped)
    with pytest.raises(ValueError):
        cost_diagonal(parse_instance(TYPICAL), (0, 1, 2, 3, 4, 4))


# -- SWAP network construction -------------------------------------------------


def test_swap_network_layer_count():
    circ = build_swap_network(parse_instance(TYPICAL), 3)
    assert circ.m == 21
    assert sum(isinstance(l, RXLayer) for l in circ.layers) == 3


def test_swap_network_pair_coverage_per_cycle():
    inst = parse_instance(TYPICAL)
    circ = build_swap_network(inst, 1)
    zz = [l for l in circ.layers if isinstance(l, ZZLayer)]
    assert sum(len(l.pairs) for l in zz) == 15
    # reconstruct effective label pairs from the permutation walk
    labels = list(range(6))
    seen = set()
    for layer in circ.layers:
        if isinstance(layer, RXLayer):
            continue
        for i, j, w in layer.pairs:
            a, b = labels[i], labels[j]
            pair = (min(a, b), max(a, b))
            assert pair not in seen
            seen.add(pair)
            assert w == inst.weight(*pair)
            labels[i], labels[j] = labels[j], labels[i]
    assert len(seen) == 15
    assert tuple(labels) == circ.permutation


@pytest.mark.parametrize("n,r", [(2, 2), (4, 2), (6, 2), (6, 3)])
def test_swap_network_permutation_parity(n, r):
    inst = SkInstance.random(n, np.random.default_rng(1))
    circ = build_swap_network(inst, r)
    if r % 2 == 0:
        assert circ.permutation == tuple(range(n))
    else:
        assert circ.permutation == tuple(reversed(range(n)))


def test_swap_network_rejects_odd_n():
    with pytest.raises(ValueError):
        build_swap_network(parse_instance("+++"), 1)
    with pytest.raises(ValueError):
        build_swap_network(parse_instance(TYPICAL), 0)


def test_brickwork_phases():
    circ = build_swap_network(parse_instance(TYPICAL), 1)
    zz = [l for l in circ.layers if isinstance(l, ZZLayer)]
    assert [(i, j) for i, j, _ in zz[0].pairs] == [(0, 1), (2, 3), (4, 5)]
    assert [(i, j) for i, j, _ in zz[1].pairs] == [(1, 2), (3, 4)]
    assert zz[1].active_qubits == (1, 2, 3, 4)  # boundary qubits idle


# -- Params ---------------------------------------------------------------------


def test_params_roundtrip():
    params = Params((0.1, 0.2), (0.3, 0.4))
    assert params.r == 2
    back = Params.from_array(params.to_array())
    assert back == params
    with pytest.raises(ValueError):
        Params((0.1,), (0.2, 0.3))
    with pytest.raises(ValueError):
        Params.from_array(np.array([1.0, 2.0, 3.0]))


# -- the master ansatz oracle -----------------------------------------------


def _hybrid_gate_value(instance, circuit, params):
    """Evaluate the SWAP-network circuit gate by gate through HybridState."""
    state = init_plus_state(circuit.n)
    for gate in circuit.gates(params):
        state.apply_unitary(gate)
    return state.expectation(hamiltonian(instance, circuit.permutation).diag)


@pytest.mark.parametrize("n", [2, 4, 6])
@pytest.mark.parametrize("r", [1, 2, 3])
def test_swap_network_matches_dense_ansatz(n, r):
    """SWAP network + block simulator == direct operator-product evaluation."""
    rng = np.random.default_rng(100 * n + r)
    inst = SkInstance.random(n, rng)
    circ = build_swap_network(inst, r)
    draws = 20 if n < 6 else 5  # the full 20-draw n=6 sweep runs in acceptance
    for _ in range(draws):
        params = Params.from_array(rng.uniform(-np.pi, np.pi, 2 * r))
        expected = dense_ansatz_value(inst, r, params)
        via_gates = _hybrid_gate_value(inst, circ, params)
        via_landscape = evaluate_landscape(inst, circ, params, noiseless_model())
        assert via_gates == pytest.approx(expected, abs=1e-10)
        assert via_landscape == pytest.approx(expected, abs=1e-10)


def test_noiseless_landscape_periodicity_and_origin():
    inst = parse_instance(TYPICAL)
    circ = build_swap_network(inst, 2)
    rng = np.random.default_rng(7)
    params = Params.from_array(rng.uniform(-1, 1, 4))
    shifted = Params(params.betas, (params.gammas[0] + 2 * np.pi, params.gammas[1]))
    a = evaluate_landscape(inst, circ, params, noiseless_model())
    b = evaluate_landscape(inst, circ, shifted, noiseless_model())
    assert a == pytest.approx(b, abs=1e-10)
    zero = Params((0.0, 0.0), (0.0, 0.0))
    assert evaluate_landscape(inst, circ, zero, noiseless_model()) == pytest.approx(
        0.0, abs=1e-12
    )