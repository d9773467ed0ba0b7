import pickle

import numpy as np
import pytest

from fluctuator_qaoa.executor import (
    Landscape,
    NoiseModel,
    build_slot_grid,
    evaluate_given_realization,
    evaluate_landscape,
    grid_realizations,
    landscape_gradient,
    noiseless_model,
)
from fluctuator_qaoa.hybrid import ry
from fluctuator_qaoa.markov import FluctuatorChain
from fluctuator_qaoa.optimize import central_difference_gradient
from fluctuator_qaoa.sk import (
    AnsatzCircuit,
    Params,
    RXLayer,
    SkInstance,
    ZZLayer,
    build_swap_network,
    cost_diagonal,
    parse_instance,
)

TYPICAL = "+-++-+-++-----+"


def three_qubit_circuit():
    """Hand-built odd-n brickwork: 3 RZZ' layers + 1 RX layer (m=4)."""
    inst = parse_instance("+-+")  # w01=+1, w02=-1, w12=+1
    layers = (
        ZZLayer(cycle=0, pairs=((0, 1, inst.weight(0, 1)),)),
        ZZLayer(cycle=0, pairs=((1, 2, inst.weight(0, 2)),)),  # labels (0,2) now adjacent
        ZZLayer(cycle=0, pairs=((0, 1, inst.weight(1, 2)),)),
        RXLayer(cycle=0),
    )
    # walk: (0,1,2) -swap01-> (1,0,2) -swap12-> (1,2,0) -swap01-> (2,1,0)
    circuit = AnsatzCircuit(n=3, r=1, layers=layers, permutation=(2, 1, 0))
    return inst, circuit


# -- noise model and grids -----------------------------------------------------


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(mode="weird")
    with pytest.raises(ValueError):
        NoiseModel(mode="temporal", p=1.5)
    with pytest.raises(ValueError):
        NoiseModel(mode="temporal", schedule="sometimes")
    with pytest.raises(ValueError):
        NoiseModel(mode="temporal", error_op="Q")


def test_slot_grid_counts_paper_scale():
    circ = build_swap_network(parse_instance(TYPICAL), 3)
    all_slots = build_slot_grid(
        circ, NoiseModel(mode="temporal", schedule="all-slots", include_boundary_slot=True)
    )
    assert len(all_slots.slots) == 6 * 22  # n (m+1) with the boundary slot
    active = build_slot_grid(circ, NoiseModel(mode="temporal"))
    assert len(active.slots) == 6 * 15  # 5 RZZ' touches per qubit per cycle
    none = build_slot_grid(circ, noiseless_model())
    assert not none.chains


def test_slot_grid_chain_orientations():
    inst, circ = three_qubit_circuit()
    temporal = build_slot_grid(circ, NoiseModel(mode="temporal"))
    assert {c.key: c.positions for c in temporal.chains} == {
        0: ((0, 1), (0, 3)),
        1: ((1, 1), (1, 2), (1, 3)),
        2: ((2, 2),),
    }
    spatial = build_slot_grid(circ, NoiseModel(mode="spatial"))
    assert {c.key: c.positions for c in spatial.chains} == {
        1: ((0, 1), (1, 1)),
        2: ((1, 2), (2, 2)),
        3: ((0, 3), (1, 3)),
    }
    # boundary slot: temporal gets a t=0 slot per qubit, spatial a silent lead
    temporal_b = build_slot_grid(
        circ, NoiseModel(mode="temporal", include_boundary_slot=True)
    )
    assert temporal_b.chains[0].positions[0] == (0, 0)
    spatial_b = build_slot_grid(
        circ, NoiseModel(mode="spatial", include_boundary_slot=True)
    )
    assert spatial_b.chains[0].positions[0] is None


def test_all_slots_grid_includes_rx_layers():
    inst, circ = three_qubit_circuit()
    grid = build_slot_grid(circ, NoiseModel(mode="temporal", schedule="all-slots"))
    assert {c.key: len(c.positions) for c in grid.chains} == {0: 4, 1: 4, 2: 4}


# -- landscape evaluation ------------------------------------------------------


def test_p_zero_equals_noiseless():
    inst = parse_instance(TYPICAL)
    circ = build_swap_network(inst, 2)
    rng = np.random.default_rng(2)
    params = Params.from_array(rng.uniform(-2, 2, 4))
    base = evaluate_landscape(inst, circ, params, noiseless_model())
    for mode in ("temporal", "spatial"):
        for kappa in (0.0, 0.7):
            noisy = evaluate_landscape(
                inst, circ, params, NoiseModel(mode=mode, p=0.0, kappa=kappa)
            )
            assert noisy == pytest.approx(base, abs=1e-12)


def test_kappa_zero_temporal_equals_spatial():
    inst = parse_instance(TYPICAL)
    circ = build_swap_network(inst, 2)
    rng = np.random.default_rng(3)
    params = Params.from_array(rng.uniform(-2, 2, 4))
    for p in (0.05, 0.4):
        a = evaluate_landscape(inst, circ, params, NoiseModel(mode="temporal", p=p))
        b = evaluate_landscape(inst, circ, params, NoiseModel(mode="spatial", p=p))
        assert a == pytest.approx(b, abs=1e-12)


def test_two_qubit_fully_correlated_hand_mixture():
    """n=2, r=1, p=0.5, kappa=1: four equally structured realizations.

    With kappa=1 each fluctuator keeps its initial draw, so the mixture has
    one term per initial configuration, weighted by p^k (1-p)^(2-k), with Y
    inserted after every slot of the excited qubits.
    """
    inst = parse_instance("+")
    circ = build_swap_network(inst, 1)
    params = Params((0.43,), (1.21,))
    p = 0.5
    model = NoiseModel(mode="temporal", p=p, kappa=1.0)
    grid = build_slot_grid(circ, model)
    chains = {c.key: c.positions for c in grid.chains}
    mixture = 0.0
    for bits in ((0, 0), (0, 1), (1, 0), (1, 1)):
        weight = np.prod([p if b else 1 - p for b in bits])
        excited = [pos for q, b in enumerate(bits) if b for pos in chains[q]]
        mixture += weight * evaluate_given_realization(
            inst, circ, params, model, excited
        )
    direct = evaluate_landscape(inst, circ, params, model)
    assert direct == pytest.approx(mixture, abs=1e-13)


@pytest.mark.parametrize("mode", ["temporal", "spatial"])
@pytest.mark.parametrize("kappa", [0.0, 0.5, 1.0])
@pytest.mark.parametrize("schedule", ["active-gates", "all-slots"])
def test_mixture_identity_three_qubits(mode, kappa, schedule):
    """evaluate_landscape == sum_b p_b <H>_b over the full realization set."""
    inst, circ = three_qubit_circuit()
    rng = np.random.default_rng(11)
    params = Params.from_array(rng.uniform(-2, 2, 2))
    for p in (0.1, 0.7):
        model = NoiseModel(mode=mode, p=p, kappa=kappa, schedule=schedule)
        grid = build_slot_grid(circ, model)
        chain = FluctuatorChain(p, kappa)
        mixture = sum(
            prob * evaluate_given_realization(inst, circ, params, model, excited)
            for excited, prob in grid_realizations(grid, chain)
        )
        direct = evaluate_landscape(inst, circ, params, model)
        assert direct == pytest.approx(mixture, abs=1e-11)


def test_mixture_identity_with_boundary_slot():
    inst, circ = three_qubit_circuit()
    params = Params((0.7,), (-1.1,))
    for mode in ("temporal", "spatial"):
        model = NoiseModel(
            mode=mode, p=0.25, kappa=0.6, include_boundary_slot=True
        )
        grid = build_slot_grid(circ, model)
        chain = FluctuatorChain(0.25, 0.6)
        mixture = sum(
            prob * evaluate_given_realization(inst, circ, params, model, excited)
            for excited, prob in grid_realizations(grid, chain)
        )
        direct = evaluate_landscape(inst, circ, params, model)
        assert direct == pytest.approx(mixture, abs=1e-11)


def test_landscape_at_origin_is_zero_under_noise():
    inst = parse_instance(TYPICAL)
    circ = build_swap_network(inst, 2)
    zero = Params((0.0, 0.0), (0.0, 0.0))
    for mode in ("temporal", "spatial"):
        value = evaluate_landscape(
            inst, circ, zero, NoiseModel(mode=mode, p=0.3, kappa=0.5)
        )
        assert value == pytest.approx(0.0, abs=1e-12)


def test_non_monomial_error_operator_against_enumeration():
    inst, circ = three_qubit_circuit()
    params = Params((0.5,), (0.9,))
    model = NoiseModel(mode="temporal", p=0.3, kappa=0.4, error_op=ry(0.8))
    grid = build_slot_grid(circ, model)
    chain = FluctuatorChain(0.3, 0.4)
    mixture = sum(
        prob * evaluate_given_realization(inst, circ, params, model, excited)
        for excited, prob in grid_realizations(grid, chain)
    )
    direct = evaluate_landscape(inst, circ, params, model)
    assert direct == pytest.approx(mixture, abs=1e-11)


# -- conditioned evaluation ------------------------------------------------------


def test_given_realization_empty_is_noiseless():
    inst, circ = three_qubit_circuit()
    params = Params((0.3,), (0.8,))
    model = NoiseModel(mode="temporal", p=0.2, kappa=0.5)
    assert evaluate_given_realization(
        inst, circ, params, model, ()
    ) == pytest.approx(evaluate_landscape(inst, circ, params, noiseless_model()), abs=1e-13)


def test_all_slots_excited_matches_p_one_fully_correlated():
    inst = parse_instance(TYPICAL)
    circ = build_swap_network(inst, 2)
    params = Params((0.4, -0.2), (0.9, 0.3))
    model = NoiseModel(mode="temporal", p=1.0, kappa=1.0)
    grid = build_slot_grid(circ, model)
    conditioned = evaluate_given_realization(inst, circ, params, model, grid.slots)
    direct = evaluate_landscape(inst, circ, params, model)
    assert conditioned == pytest.approx(direct, abs=1e-12)


def test_single_slot_mixture_reproduces_first_order_response():
    """Sum over single-slot terms at kappa=0 matches the p-derivative."""
    inst, circ = three_qubit_circuit()
    params = Params((0.6,), (1.3,))
    model = NoiseModel(mode="temporal", p=0.0, kappa=0.0)
    grid = build_slot_grid(circ, model)
    base = evaluate_given_realization(inst, circ, params, model, ())
    first_order = sum(
        evaluate_given_realization(inst, circ, params, model, [slot]) - base
        for slot in grid.slots
    )
    h = 1e-6
    from dataclasses import replace

    fd = (
        evaluate_landscape(inst, circ, params, replace(model, p=h))
        - evaluate_landscape(inst, circ, params, replace(model, p=0.0))
    ) / h
    assert fd == pytest.approx(first_order, abs=1e-4)


def test_given_realization_rejects_stray_slots():
    inst, circ = three_qubit_circuit()
    model = NoiseModel(mode="temporal", p=0.1, kappa=0.5)
    with pytest.raises(ValueError):
        evaluate_given_realization(
            inst, circ, Params((0.1,), (0.2,)), model, [(0, 2)]
        )


# -- block-count contracts -------------------------------------------------------


def test_temporal_block_count_is_two_to_the_n():
    from fluctuator_qaoa import executor as ex

    inst = parse_instance("+-++-+")  # n = 4
    circ = build_swap_network(inst, 1)
    model = NoiseModel(mode="temporal", p=0.2, kappa=0.5)
    plan = ex._compile(inst, circ, ex._error_key(model))
    grid = build_slot_grid(circ, model)
    counts = []
    original = ex._apply_layer

    def spy(state, op, params):
        counts.append(state.num_blocks)
        return original(state, op, params)

    ex._apply_layer = spy
    try:
        ex._run_temporal(plan, grid, Params((0.1,), (0.2,)), model)
    finally:
        ex._apply_layer = original
    assert set(counts) == {2**4}


def test_landscape_is_picklable_and_callable():
    inst = parse_instance(TYPICAL)
    circ = build_swap_network(inst, 2)
    fn = Landscape(inst, circ, NoiseModel(mode="spatial", p=0.1, kappa=0.3))
    clone = pickle.loads(pickle.dumps(fn))
    x = np.array([0.1, 0.2, 0.3, 0.4])
    assert clone(x) == fn(x)


# -- checkpointed gradients -------------------------------------------------------


@pytest.mark.parametrize(
    "model",
    [
        noiseless_model(),
        NoiseModel(mode="temporal", p=0.05, kappa=0.5),
        NoiseModel(mode="spatial", p=0.3, kappa=0.8),
        NoiseModel(mode="temporal", p=0.1, kappa=0.2, include_boundary_slot=True),
    ],
)
def test_checkpointed_gradient_equals_naive(model):
    inst = parse_instance("+-++-+")
    circ = build_swap_network(inst, 2)
    rng = np.random.default_rng(17)
    params = Params.from_array(rng.uniform(-2, 2, 4))
    fn = Landscape(inst, circ, model)
    fast = landscape_gradient(inst, circ, params, model, 1e-6)
    naive = central_difference_gradient(fn, params.to_array(), 1e-6)
    np.testing.assert_array_equal(fast, naive)


def test_full_evaluation_without_numba_kernels(monkeypatch):
    from fluctuator_qaoa import _kernels

    inst = parse_instance("+-++-+")
    circ = build_swap_network(inst, 2)
    rng = np.random.default_rng(23)
    params = Params.from_array(rng.uniform(-2, 2, 4))
    cases = [
        NoiseModel(mode="temporal", p=0.1, kappa=0.5),
        NoiseModel(mode="temporal", p=0.3, kappa=1.0),
        NoiseModel(mode="spatial", p=0.2, kappa=0.4, include_boundary_slot=True),
    ]
    with_kernels = [evaluate_landscape(inst, circ, params, m) for m in cases]
    monkeypatch.setattr(_kernels, "HAVE_NUMBA", False)
    without = [evaluate_landscape(inst, circ, params, m) for m in cases]
    np.testing.assert_allclose(with_kernels, without, atol=1e-13)