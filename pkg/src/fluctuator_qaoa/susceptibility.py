"""First-order response of the landscape to the local error rate at p=0.

Only realizations in which exactly one fluctuator carries exactly one run
of consecutive excitations contribute to d<H>/dp at p=0.  A run of length
ell starting at chain offset i carries the weight
``(1-kappa)**h * kappa**(ell-1)`` with h the number of 0<->1 transitions
(2, minus one per chain end the run touches).  The all-zero realization's
coefficient is fixed by normalization: the weights of all runs, minus it,
sum to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .executor import (
    NoiseModel,
    SlotGrid,
    Slot,
    build_slot_grid,
    evaluate_given_realization,
    evaluate_landscape,
)
from .sk import AnsatzCircuit, Params, SkInstance


@dataclass(frozen=True)
class ChainMember:
    """One single-run realization: its excited slots and boundary exponent."""

    excited: frozenset[Slot]
    h: int


@dataclass(frozen=True)
class ChainRealizationSet:
    """All single-run realizations of a given run length."""

    ell: int
    members: tuple[ChainMember, ...]

    @property
    def count(self) -> int:
        return len(self.members)


def chain_sets(grid: SlotGrid) -> tuple[ChainRealizationSet, ...]:
    """Enumerate every single-run realization of the grid, grouped by length."""
    by_ell: dict[int, list[ChainMember]] = {}
    for chain in grid.chains:
        length = len(chain.positions)
        for ell in range(1, length + 1):
            for start in range(0, length - ell + 1):
                run = chain.positions[start : start + ell]
                excited = frozenset(pos for pos in run if pos is not None)
                h = 2 - (start == 0) - (start + ell == length)
                by_ell.setdefault(ell, []).append(ChainMember(excited, h))
    return tuple(
        ChainRealizationSet(ell, tuple(members))
        for ell, members in sorted(by_ell.items())
    )


@dataclass(frozen=True)
class ChainExpectationTable:
    """Cached conditional landscape values for every single-run realization.

    Building the table costs one pure-circuit evaluation per distinct
    excited-slot set; the susceptibility at any kappa is then a cheap sum.
    """

    sets: tuple[ChainRealizationSet, ...]
    values: dict[frozenset[Slot], float]
    noiseless_value: float


def build_chain_table(
    instance: SkInstance,
    circuit: AnsatzCircuit,
    params: Params,
    model: NoiseModel,
) -> ChainExpectationTable:
    """Evaluate <H>_b for every single-run realization of the model's grid."""
    grid = build_slot_grid(circuit, model)
    sets = chain_sets(grid)
    values: dict[frozenset[Slot], float] = {}
    for cs in sets:
        for member in cs.members:
            if member.excited not in values:
                values[member.excited] = evaluate_given_realization(
                    instance, circuit, params, model, member.excited
                )
    noiseless = values.get(frozenset())
    if noiseless is None:
        noiseless = evaluate_given_realization(instance, circuit, params, model, ())
    return ChainExpectationTable(sets=sets, values=values, noiseless_value=noiseless)


@dataclass(frozen=True)
class ChiRow:
    """Per-run-length contribution to the susceptibility."""

    ell: int
    count: int
    weighted_average: float  # boundary-weighted mean of <H>_b over the set
    weight_sum: float  # sum of (1-kappa)**h over the set


@dataclass(frozen=True)
class ChiBreakdown:
    chi: float
    kappa: float
    noiseless_value: float
    zero_coefficient: float
    rows: tuple[ChiRow, ...]


def chi_from_table(table: ChainExpectationTable, kappa: float) -> ChiBreakdown:
    """Susceptibility at the given kappa from a prebuilt expectation table."""
    if not (0.0 <= kappa <= 1.0):
        raise ValueError("kappa must lie in [0, 1]")
    rows = []
    total = 0.0
    zero_coeff = 0.0
    for cs in table.sets:
        kpow = kappa ** (cs.ell - 1)
        acc = 0.0
        wsum = 0.0
        for member in cs.members:
            w = (1.0 - kappa) ** member.h
            acc += w * table.values[member.excited]
            wsum += w
        rows.append(
            ChiRow(
                ell=cs.ell,
                count=cs.count,
                weighted_average=acc / cs.count,
                weight_sum=wsum,
            )
        )
        total += kpow * acc
        zero_coeff += kpow * wsum
    chi = total - zero_coeff * table.noiseless_value
    return ChiBreakdown(
        chi=chi,
        kappa=kappa,
        noiseless_value=table.noiseless_value,
        zero_coefficient=zero_coeff,
        rows=tuple(rows),
    )


def chi_exact(
    instance: SkInstance,
    circuit: AnsatzCircuit,
    params: Params,
    model: NoiseModel,
) -> float:
    """d<H>/dp at p=0 by exact single-run enumeration (model.p is ignored)."""
    table = build_chain_table(instance, circuit, params, model)
    return chi_from_table(table, model.kappa).chi


def chi_finite_difference(
    instance: SkInstance,
    circuit: AnsatzCircuit,
    params: Params,
    model: NoiseModel,
    step: float = 1e-5,
) -> float:
    """Independent susceptibility oracle: one-sided difference at p=0.

    p cannot go negative, so a forward difference is used and its O(step)
    error removed by one Richardson extrapolation over step and step/2.
    """
    if not (0.0 < step <= 1e-3):
        raise ValueError("step must lie in (0, 1e-3]")
    base = evaluate_landscape(instance, circuit, params, replace(model, p=0.0))
    d_full = (
        evaluate_landscape(instance, circuit, params, replace(model, p=step)) - base
    ) / step
    d_half = (
        evaluate_landscape(instance, circuit, params, replace(model, p=step / 2))
        - base
    ) / (step / 2)
    return 2.0 * d_half - d_full


def linearized_ar(ar_at_zero: float, chi: float, c_star: float, p: float) -> float:
    """First-order approximation AR(0) + p * chi / C*."""
    if c_star == 0:
        raise ZeroDivisionError("the global optimum C* must be nonzero")
    return ar_at_zero + p * chi / c_star
