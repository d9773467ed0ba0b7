"""Noisy evaluation of the ansatz landscape under fluctuator models.

Two wirings of the keep-or-reset chain onto a circuit are supported:

  * temporal: one fluctuator per qubit lives for the whole circuit; after
    each of its slots the chain steps once (T), then a controlled V hits the
    qubit.  All n fluctuators stay live, so the state carries 2^n blocks.
  * spatial: one fresh fluctuator per circuit layer walks across that
    layer's slot qubits in ascending order, stepping once between qubits,
    and is traced out afterwards; at most one fluctuator is ever live.

Slots are (qubit, time) pairs eligible for an error insertion.  Under the
"active-gates" schedule a qubit has a slot after a layer only if an RZZ'
hit it there; "all-slots" gives every qubit a slot after every layer.  The
optional boundary slot adds a pre-circuit insertion at t=0 driven by the
initial ensemble draw (temporal), or a leading chain step before the first
qubit (spatial; a no-op in distribution since the ensemble is stationary).

Evaluations are exact: the landscape value is the probability-weighted
mixture over all chain realizations, computed in one pass via the block
representation rather than by enumeration.  Pure-circuit evaluations
(noiseless, or conditioned on a fixed realization) run on statevectors,
which is an exact shortcut since every operation involved is unitary.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .hybrid import (
    ControlledMonomial,
    HybridState,
    InvolutionOrbits,
    embed,
    error_operator,
    flat_conjugation_gather,
    init_plus_state,
    monomial_parts,
    rx,
)
from .markov import FluctuatorChain, realization_probability, transition_matrix
from .sk import AnsatzCircuit, Params, RXLayer, SkInstance, cost_diagonal

MODE_NONE = "none"
MODE_TEMPORAL = "temporal"
MODE_SPATIAL = "spatial"
MODES = (MODE_NONE, MODE_TEMPORAL, MODE_SPATIAL)

SCHEDULE_ACTIVE = "active-gates"
SCHEDULE_ALL = "all-slots"
SCHEDULES = (SCHEDULE_ACTIVE, SCHEDULE_ALL)

MAX_JOINT_REALIZATIONS = 2**22


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Fluctuator wiring: mode, chain parameters, error operator, slot rules."""

    mode: str
    p: float = 0.0
    kappa: float = 0.0
    error_op: object = "Y"
    schedule: str = SCHEDULE_ACTIVE
    include_boundary_slot: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")
        if not (0.0 <= self.p <= 1.0) or not (0.0 <= self.kappa <= 1.0):
            raise ValueError("p and kappa must lie in [0, 1]")
        error_operator(self.error_op)  # validates preset name / unitarity

    def error_matrix(self) -> np.ndarray:
        return error_operator(self.error_op)

    def chain(self) -> FluctuatorChain:
        return FluctuatorChain(self.p, self.kappa)


def noiseless_model() -> NoiseModel:
    return NoiseModel(mode=MODE_NONE)


Slot = tuple[int, int]  # (qubit, time); time 0 is the pre-circuit slot


@dataclass(frozen=True)
class NoiseChain:
    """One fluctuator's ordered walk; None marks a silent (no-insertion) step."""

    key: int  # qubit index (temporal) or layer time (spatial)
    positions: tuple[Slot | None, ...]

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class SlotGrid:
    """All insertion slots of a circuit plus their chain orientation."""

    n: int
    m: int
    mode: str
    chains: tuple[NoiseChain, ...]

    @property
    def slots(self) -> frozenset[Slot]:
        return frozenset(
            pos for chain in self.chains for pos in chain.positions if pos is not None
        )

    def slots_by_time(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for chain in self.chains:
            for pos in chain.positions:
                if pos is not None:
                    out.setdefault(pos[1], []).append(pos[0])
        return {t: tuple(sorted(qs)) for t, qs in out.items()}


def _active_qubits_by_time(circuit: AnsatzCircuit) -> dict[int, tuple[int, ...]]:
    return {
        t: layer.active_qubits
        for t, layer in enumerate(circuit.layers, start=1)
        if layer.active_qubits
    }


@lru_cache(maxsize=256)
def _grid_cached(
    circuit: AnsatzCircuit, mode: str, schedule: str, boundary: bool
) -> SlotGrid:
    n, m = circuit.n, circuit.m
    if mode == MODE_NONE:
        return SlotGrid(n=n, m=m, mode=mode, chains=())
    if schedule == SCHEDULE_ALL:
        eligible = {t: tuple(range(n)) for t in range(1, m + 1)}
    else:
        eligible = _active_qubits_by_time(circuit)
    chains: list[NoiseChain] = []
    if mode == MODE_TEMPORAL:
        for q in range(n):
            positions: list[Slot | None] = []
            if boundary:
                positions.append((q, 0))
            positions.extend((q, t) for t in sorted(eligible) if q in eligible[t])
            if positions:
                chains.append(NoiseChain(key=q, positions=tuple(positions)))
    else:
        for t in sorted(eligible):
            positions = [None] if boundary else []
            positions.extend((q, t) for q in eligible[t])
            chains.append(NoiseChain(key=t, positions=tuple(positions)))
    return SlotGrid(n=n, m=m, mode=mode, chains=tuple(chains))


def build_slot_grid(circuit: AnsatzCircuit, model: NoiseModel) -> SlotGrid:
    """Slot grid for a circuit under the model's mode/schedule/boundary rules."""
    return _grid_cached(
        circuit, model.mode, model.schedule, model.include_boundary_slot
    )


@lru_cache(maxsize=256)
def _slots_by_time_cached(grid: SlotGrid) -> dict[int, tuple[int, ...]]:
    return grid.slots_by_time()


# -- compiled circuit --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _ZZOp:
    cycle: int
    perm: np.ndarray  # index permutation of the layer's SWAPs (an involution)
    orbits: InvolutionOrbits
    weight_signs: np.ndarray  # integer sum of s_i s_j over the layer's gates


@dataclass(frozen=True, eq=False)
class _RXOp:
    cycle: int


@dataclass(frozen=True, eq=False)
class _CompiledCircuit:
    n: int
    dim: int
    ops: tuple[object, ...]
    hdiag: np.ndarray
    v_matrix: np.ndarray
    # Compiled monomial form of the error operator per qubit; None when V
    # is not monomial (generic embedded-matrix path then applies).
    cv: tuple[ControlledMonomial, ...] | None
    cv_embedded: tuple[np.ndarray, ...]

    @property
    def monomial(self) -> bool:
        return self.cv is not None

    def rx_full(self, beta: float) -> np.ndarray:
        u1 = rx(beta)
        full = u1
        for _ in range(self.n - 1):
            full = np.kron(full, u1)
        return full

    def insert_error_state(self, psi: np.ndarray, qubit: int) -> np.ndarray:
        if self.monomial:
            cv = self.cv[qubit]
            return cv.phases * psi[cv.sigma]
        return self.cv_embedded[qubit] @ psi

    def insert_controlled_error(self, state: HybridState, fid, qubit: int) -> None:
        if self.monomial:
            cv = self.cv[qubit]
            state.controlled_gather(fid, cv.gather, cv.weights)
        else:
            state.apply_controlled_error(fid, qubit, self.v_matrix)


def _spin_signs(n: int) -> np.ndarray:
    codes = np.arange(2**n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return 1 - 2 * ((codes[:, None] >> shifts[None, :]) & 1)


def _error_key(model: NoiseModel) -> tuple:
    if isinstance(model.error_op, str):
        return ("preset", model.error_op.upper())
    mat = np.asarray(model.error_op, dtype=complex)
    return ("matrix", mat.tobytes())


def _resolve_error_key(key: tuple) -> np.ndarray:
    if key[0] == "preset":
        return error_operator(key[1])
    return np.frombuffer(key[1], dtype=complex).reshape(2, 2).copy()


def _assert_involution(perm: np.ndarray) -> np.ndarray:
    if not np.array_equal(perm[perm], np.arange(perm.size)):
        raise AssertionError("compiled permutation is not an involution")
    return perm


@lru_cache(maxsize=64)
def _compile(instance: SkInstance, circuit: AnsatzCircuit, error_key: tuple):
    n, dim = circuit.n, 2**circuit.n
    spins = _spin_signs(n)
    ops: list[object] = []
    for layer in circuit.layers:
        if isinstance(layer, RXLayer):
            ops.append(_RXOp(cycle=layer.cycle))
            continue
        perm = np.arange(dim, dtype=np.int64)
        weight_signs = np.zeros(dim, dtype=np.int64)
        for i, j, w in layer.pairs:
            weight_signs += w * spins[:, i] * spins[:, j]
            flip = (1 << (n - 1 - i)) | (1 << (n - 1 - j))
            bit_i = (perm >> (n - 1 - i)) & 1
            bit_j = (perm >> (n - 1 - j)) & 1
            perm = np.where(bit_i != bit_j, perm ^ flip, perm)
        _assert_involution(perm)
        ops.append(
            _ZZOp(
                cycle=layer.cycle,
                perm=perm,
                orbits=InvolutionOrbits.from_gather(flat_conjugation_gather(perm, dim)),
                weight_signs=weight_signs,
            )
        )
    v_matrix = _resolve_error_key(error_key)
    compiled = tuple(ControlledMonomial.compile(v_matrix, q, n) for q in range(n))
    cv = compiled if all(c is not None for c in compiled) else None
    cv_embedded = tuple(embed(v_matrix, (q,), n) for q in range(n))
    return _CompiledCircuit(
        n=n,
        dim=dim,
        ops=tuple(ops),
        hdiag=cost_diagonal(instance, circuit.permutation),
        v_matrix=v_matrix,
        cv=cv,
        cv_embedded=cv_embedded,
    )


def _zz_weights(op: _ZZOp, gamma: float) -> np.ndarray:
    d = np.exp(-0.5j * gamma * op.weight_signs)
    return (d[:, None] * d.conj()[None, :]).ravel()


def _apply_layer(state: HybridState, op, params: Params) -> None:
    if isinstance(op, _RXOp):
        state.uniform_single_qubit_layer(rx(params.betas[op.cycle]))
    else:
        state.conj_involution(op.orbits, _zz_weights(op, params.gammas[op.cycle]))


# -- landscape evaluation ----------------------------------------------------


def _folded_observable(plan: _CompiledCircuit, beta: float) -> np.ndarray:
    """The diagonal cost operator pulled back through the final RX layer."""
    u = plan.rx_full(beta)
    return u.conj().T @ (plan.hdiag[:, None] * u)


def _plus_state_with_fluctuators(n: int, p: float) -> HybridState:
    """|+><+|^n with one fluctuator per qubit already attached (fast path)."""
    dim = 2**n
    weights = np.array([1.0 - p, p])
    config_weights = weights
    for _ in range(n - 1):
        config_weights = np.kron(config_weights, weights)
    stack = np.empty((2**n, dim, dim), dtype=complex)
    stack[...] = config_weights[:, None, None] / dim
    return HybridState(n, stack, tuple(range(n)))


def _run_temporal(
    plan,
    grid,
    params: Params,
    model: NoiseModel,
    state: HybridState | None = None,
    start: int = 0,
    snap: dict[int, HybridState] | None = None,
) -> float:
    """Temporal-model value; optionally resumed from / snapshotted at op indices.

    ``snap`` collects copies of the state just before the listed op indices;
    a later call with ``state=snap[i], start=i`` replays the tail exactly.
    """
    if state is None:
        state = _plus_state_with_fluctuators(plan.n, model.p)
        by_time = _slots_by_time_cached(grid)
        for q in by_time.get(0, ()):
            plan.insert_controlled_error(state, q, q)
    else:
        state = state.copy()
        by_time = _slots_by_time_cached(grid)
    t_matrix = transition_matrix(model.p, model.kappa)
    fold = isinstance(plan.ops[-1], _RXOp) and len(plan.ops) not in by_time
    stop = len(plan.ops) - 1 if fold else len(plan.ops)
    for i in range(start, stop):
        if snap is not None and i in snap:
            snap[i] = state.copy()
        _apply_layer(state, plan.ops[i], params)
        for q in by_time.get(i + 1, ()):
            if plan.monomial:
                state.slot_step(q, t_matrix, plan.cv[q])
            else:
                state.apply_classical_transition(q, t_matrix)
                plan.insert_controlled_error(state, q, q)
    if fold:
        if snap is not None and stop in snap:
            snap[stop] = state.copy()
        return state.expectation_dense(
            _folded_observable(plan, params.betas[plan.ops[-1].cycle])
        )
    return state.expectation(plan.hdiag)


def _run_spatial(
    plan,
    grid,
    params: Params,
    model: NoiseModel,
    state: HybridState | None = None,
    start: int = 0,
    snap: dict[int, HybridState] | None = None,
) -> float:
    if state is None:
        state = init_plus_state(plan.n)
    else:
        state = state.copy()
    t_matrix = transition_matrix(model.p, model.kappa)
    chains = {chain.key: chain for chain in grid.chains}
    fold = isinstance(plan.ops[-1], _RXOp) and len(plan.ops) not in chains
    stop = len(plan.ops) - 1 if fold else len(plan.ops)
    for i in range(start, stop):
        if snap is not None and i in snap:
            snap[i] = state.copy()
        _apply_layer(state, plan.ops[i], params)
        chain = chains.get(i + 1)
        if chain is None:
            continue
        state.attach_fluctuator("walker", model.p)
        for step, pos in enumerate(chain.positions):
            if step == 0:
                if pos is not None:
                    plan.insert_controlled_error(state, "walker", pos[0])
                continue
            if plan.monomial and pos is not None:
                state.slot_step("walker", t_matrix, plan.cv[pos[0]])
            else:
                state.apply_classical_transition("walker", t_matrix)
                if pos is not None:
                    plan.insert_controlled_error(state, "walker", pos[0])
        state.trace_out_fluctuator("walker")
        assert state.num_blocks == 1
    if fold:
        if snap is not None and stop in snap:
            snap[stop] = state.copy()
        return state.expectation_dense(
            _folded_observable(plan, params.betas[plan.ops[-1].cycle])
        )
    return state.expectation(plan.hdiag)


class _PsiState:
    """Statevector wrapped to share the runners' copy/snapshot protocol."""

    __slots__ = ("psi",)

    def __init__(self, psi: np.ndarray):
        self.psi = psi

    def copy(self) -> "_PsiState":
        return _PsiState(self.psi.copy())


def _run_statevector(
    plan: _CompiledCircuit,
    params: Params,
    inserts_by_time: dict[int, Sequence[int]],
    state: _PsiState | None = None,
    start: int = 0,
    snap: dict[int, _PsiState] | None = None,
) -> float:
    """Pure-circuit value with V inserted at fixed slots (exact, unitary-only)."""
    if state is None:
        psi = np.full(plan.dim, plan.dim**-0.5, dtype=complex)
        for q in sorted(inserts_by_time.get(0, ())):
            psi = plan.insert_error_state(psi, q)
    else:
        psi = state.psi.copy()
    for i in range(start, len(plan.ops)):
        if snap is not None and i in snap:
            snap[i] = _PsiState(psi.copy())
        op = plan.ops[i]
        if isinstance(op, _RXOp):
            psi = plan.rx_full(params.betas[op.cycle]) @ psi
        else:
            d = np.exp(-0.5j * params.gammas[op.cycle] * op.weight_signs)
            psi = d * psi[op.perm]
        for q in sorted(inserts_by_time.get(i + 1, ())):
            psi = plan.insert_error_state(psi, q)
    return float(np.abs(psi) ** 2 @ plan.hdiag)


def evaluate_landscape(
    instance: SkInstance,
    circuit: AnsatzCircuit,
    params: Params,
    model: NoiseModel,
) -> float:
    """Exact noisy landscape value tr[rho(params) H] under the model."""
    if params.r != circuit.r:
        raise ValueError(f"params have r={params.r}, circuit has r={circuit.r}")
    plan = _compile(instance, circuit, _error_key(model))
    if model.mode == MODE_NONE:
        return _run_statevector(plan, params, {})
    grid = build_slot_grid(circuit, model)
    if model.mode == MODE_TEMPORAL:
        return _run_temporal(plan, grid, params, model)
    return _run_spatial(plan, grid, params, model)


def evaluate_given_realization(
    instance: SkInstance,
    circuit: AnsatzCircuit,
    params: Params,
    model: NoiseModel,
    excited: Iterable[Slot],
) -> float:
    """Landscape value of the pure circuit with V inserted at the given slots."""
    plan = _compile(instance, circuit, _error_key(model))
    grid = build_slot_grid(circuit, model)
    excited = frozenset(excited)
    stray = excited - grid.slots
    if stray:
        raise ValueError(f"slots outside the grid: {sorted(stray)}")
    by_time: dict[int, list[int]] = {}
    for q, t in excited:
        by_time.setdefault(t, []).append(q)
    return _run_statevector(plan, params, by_time)


def _run_value(plan, grid, params, model, state=None, start=0, snap=None) -> float:
    if model.mode == MODE_NONE:
        return _run_statevector(plan, params, {}, state=state, start=start, snap=snap)
    if model.mode == MODE_TEMPORAL:
        return _run_temporal(plan, grid, params, model, state, start, snap)
    return _run_spatial(plan, grid, params, model, state, start, snap)


def _cycle_starts(plan: _CompiledCircuit, r: int) -> tuple[dict[int, int], dict[int, int]]:
    """First op index depending on gamma_k / beta_k; requires cycle-ordered ops."""
    cycles = [op.cycle for op in plan.ops]
    if cycles != sorted(cycles):
        raise ValueError("circuit layers must be ordered by cycle")
    gamma_start: dict[int, int] = {}
    beta_start: dict[int, int] = {}
    for i, op in enumerate(plan.ops):
        if op.cycle not in gamma_start:
            gamma_start[op.cycle] = i
        if isinstance(op, _RXOp) and op.cycle not in beta_start:
            beta_start[op.cycle] = i
    for k in range(r):
        gamma_start.setdefault(k, 0)
        beta_start.setdefault(k, gamma_start[k])
    return gamma_start, beta_start


def landscape_gradient(
    instance: SkInstance,
    circuit: AnsatzCircuit,
    params: Params,
    model: NoiseModel,
    step: float,
) -> np.ndarray:
    """Central-difference gradient with shared-prefix replay.

    Perturbing a cycle-k parameter leaves the circuit prefix before cycle k
    untouched, so the +-step evaluations resume from a state snapshot taken
    there during one base run.  The values are bit-identical to evaluating
    the landscape from scratch at the shifted parameters.
    """
    plan = _compile(instance, circuit, _error_key(model))
    grid = build_slot_grid(circuit, model)
    r = circuit.r
    gamma_start, beta_start = _cycle_starts(plan, r)
    snap = {i: None for i in set(gamma_start.values()) | set(beta_start.values())}
    _run_value(plan, grid, params, model, snap=snap)
    x = params.to_array()
    grad = np.empty(2 * r)
    for pos in range(2 * r):
        k = pos if pos < r else pos - r
        start = beta_start[k] if pos < r else gamma_start[k]
        values = []
        for sign in (+1.0, -1.0):
            shifted = x.copy()
            shifted[pos] += sign * step
            values.append(
                _run_value(
                    plan,
                    grid,
                    Params.from_array(shifted),
                    model,
                    state=snap[start],
                    start=start,
                )
            )
        grad[pos] = (values[0] - values[1]) / (2.0 * step)
    return grad


@dataclass(frozen=True, eq=False)
class Landscape:
    """Picklable landscape callable for optimizers and worker processes."""

    instance: SkInstance
    circuit: AnsatzCircuit
    model: NoiseModel

    def __call__(self, x) -> float:
        params = x if isinstance(x, Params) else Params.from_array(np.asarray(x))
        return evaluate_landscape(self.instance, self.circuit, params, self.model)

    def gradient(self, x, step: float) -> np.ndarray:
        """Central-difference gradient, sharing circuit prefixes across probes."""
        params = x if isinstance(x, Params) else Params.from_array(np.asarray(x))
        return landscape_gradient(self.instance, self.circuit, params, self.model, step)


# -- realization bookkeeping (oracles, susceptibility) -----------------------


def grid_realizations(
    grid: SlotGrid, chain: FluctuatorChain
) -> Iterator[tuple[frozenset[Slot], float]]:
    """All joint realizations of a grid with their probabilities.

    Realizations over distinct chains are independent; the iterator yields
    (excited slot set, probability) with probabilities summing to one.
    Intended for small grids (exhaustive oracles).
    """
    total = 1
    for c in grid.chains:
        total *= 2 ** len(c)
        if total > MAX_JOINT_REALIZATIONS:
            raise ValueError("grid too large for joint-realization enumeration")
    per_chain: list[list[tuple[frozenset[Slot], float]]] = []
    for c in grid.chains:
        entries = []
        for bits in itertools.product((0, 1), repeat=len(c)):
            prob = realization_probability(chain, bits)
            excited = frozenset(
                pos for bit, pos in zip(bits, c.positions) if bit and pos is not None
            )
            entries.append((excited, prob))
        per_chain.append(entries)
    for combo in itertools.product(*per_chain):
        excited: frozenset[Slot] = frozenset().union(*(e for e, _ in combo))
        prob = 1.0
        for _, pr in combo:
            prob *= pr
        yield excited, prob
