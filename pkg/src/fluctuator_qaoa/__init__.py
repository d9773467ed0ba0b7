"""Exact density-matrix emulation of QAOA under correlated fluctuator noise."""

from .executor import (
    Landscape,
    NoiseModel,
    SlotGrid,
    build_slot_grid,
    evaluate_given_realization,
    evaluate_landscape,
    noiseless_model,
)
from .hybrid import HybridState, QubitGate, init_plus_state
from .markov import (
    FluctuatorChain,
    correlation_time,
    correlator,
    marginal_excitation,
    realization_prob_derivative_at_zero,
    realization_probability,
    sample_realization,
    transition_matrix,
    transition_power,
)
from .optimize import OptimizerConfig, OptimizationResult, basin_hop, metrics, run_qaoa
from .sk import (
    AnsatzCircuit,
    DiagonalHamiltonian,
    Params,
    SkInstance,
    brute_force_optimum,
    build_swap_network,
    cost,
    hamiltonian,
    parse_instance,
)
from .susceptibility import (
    build_chain_table,
    chain_sets,
    chi_exact,
    chi_finite_difference,
    chi_from_table,
    linearized_ar,
)
from .sweep import ExperimentRecord, SweepConfig, sweep, sweep_from_json
from .symmetry import (
    SymmetryGenerator,
    all_generators,
    apply_generator,
    apply_word,
    check_invariance,
    random_word,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
