"""Parameter transformations that leave the SK cost landscape invariant.

The landscape is unchanged, noiselessly and under any correlated Pauli
insertion noise, by the group generated by: shifting any gamma_k by 2*pi,
shifting any beta_k by pi, negating any beta_k while shifting gamma_k and
gamma_{k+1} by pi (only gamma_r for k=r), and negating all parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .sk import Params

GAMMA_SHIFT = "gamma-shift-2pi"
BETA_SHIFT = "beta-shift-pi"
BETA_NEGATE = "beta-negate-gamma-shift"
GLOBAL_NEGATE = "global-negate"
GENERATOR_KINDS = (GAMMA_SHIFT, BETA_SHIFT, BETA_NEGATE, GLOBAL_NEGATE)


@dataclass(frozen=True)
class SymmetryGenerator:
    """One generator; k is the 1-based cycle index (None for global-negate)."""

    kind: str
    k: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.kind == GLOBAL_NEGATE:
            if self.k is not None:
                raise ValueError("global-negate takes no cycle index")
        elif self.k is None or self.k < 1:
            raise ValueError(f"{self.kind} needs a cycle index k >= 1")


def apply_generator(params: Params, generator: SymmetryGenerator) -> Params:
    """Transformed parameters; the input is left untouched."""
    r = params.r
    if generator.kind != GLOBAL_NEGATE and generator.k > r:
        raise ValueError(f"k={generator.k} out of range for r={r}")
    betas = list(params.betas)
    gammas = list(params.gammas)
    if generator.kind == GAMMA_SHIFT:
        gammas[generator.k - 1] += 2.0 * np.pi
    elif generator.kind == BETA_SHIFT:
        betas[generator.k - 1] += np.pi
    elif generator.kind == BETA_NEGATE:
        idx = generator.k - 1
        betas[idx] = -betas[idx]
        gammas[idx] += np.pi
        if generator.k < r:
            gammas[idx + 1] += np.pi
    else:
        betas = [-b for b in betas]
        gammas = [-g for g in gammas]
    return Params(tuple(betas), tuple(gammas))


def apply_word(params: Params, word: Sequence[SymmetryGenerator]) -> Params:
    for generator in word:
        params = apply_generator(params, generator)
    return params


def all_generators(r: int) -> tuple[SymmetryGenerator, ...]:
    """Every generator instance for an r-cycle ansatz (3r + 1 of them)."""
    gens = [
        SymmetryGenerator(kind, k)
        for kind in (GAMMA_SHIFT, BETA_SHIFT, BETA_NEGATE)
        for k in range(1, r + 1)
    ]
    gens.append(SymmetryGenerator(GLOBAL_NEGATE))
    return tuple(gens)


def random_word(
    r: int, length: int, rng: np.random.Generator
) -> tuple[SymmetryGenerator, ...]:
    gens = all_generators(r)
    return tuple(gens[i] for i in rng.integers(0, len(gens), size=length))


@dataclass(frozen=True)
class InvarianceCheck:
    """Residual of one landscape-invariance check."""

    word: tuple[SymmetryGenerator, ...]
    base_value: float
    transformed_value: float
    tolerance: float

    @property
    def residual(self) -> float:
        return abs(self.base_value - self.transformed_value)

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def check_invariance(
    landscape_fn: Callable[[Params], float],
    params: Params,
    generator: SymmetryGenerator | Sequence[SymmetryGenerator],
    tol: float = 1e-9,
) -> InvarianceCheck:
    """Evaluate the landscape at params and at (word . params); report residual."""
    word = (
        (generator,) if isinstance(generator, SymmetryGenerator) else tuple(generator)
    )
    base = landscape_fn(params)
    transformed = landscape_fn(apply_word(params, word))
    return InvarianceCheck(
        word=word, base_value=base, transformed_value=transformed, tolerance=tol
    )
