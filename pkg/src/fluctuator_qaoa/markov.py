"""Exact mathematics of a single classical binary fluctuator.

The fluctuator is a two-state Markov chain: at every step its state is kept
with probability ``kappa`` and reset to the ensemble ``s0 = (1-p, p)`` with
probability ``1-kappa``.  Transition matrices are stored column-stochastic,
``T[b, a]`` being the probability to go from state ``a`` to state ``b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Exact enumeration of realizations is capped at 2**20 strings.
MAX_ENUMERATION_LENGTH = 20


def _check_probability(value: float, name: str) -> None:
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def transition_matrix(p: float, kappa: float) -> np.ndarray:
    """Single-step transition matrix of the keep-or-reset chain.

    Column a holds the outcome distribution after one step starting from
    state a; both columns sum to one.
    """
    _check_probability(p, "p")
    _check_probability(kappa, "kappa")
    q = 1.0 - kappa
    return np.array(
        [
            [kappa + q * (1.0 - p), q * (1.0 - p)],
            [q * p, kappa + q * p],
        ]
    )


def transition_power(p: float, kappa: float, t: int) -> np.ndarray:
    """Closed form of the t-th power of ``transition_matrix(p, kappa)``.

    Valid for any integer t >= 0; t=0 gives the identity and t=1 the
    single-step matrix.  Edge values kappa in {0, 1} are exact (0**0 == 1).
    """
    _check_probability(p, "p")
    _check_probability(kappa, "kappa")
    if t < 0 or t != int(t):
        raise ValueError(f"t must be a nonnegative integer, got {t}")
    if t == 0:
        return np.eye(2)
    kt = kappa ** int(t)
    return np.array(
        [
            [1.0 - p + p * kt, 1.0 - p - kt + p * kt],
            [p - p * kt, p + kt - p * kt],
        ]
    )


def correlation_time(kappa: float) -> float:
    """1/e decay time of the autocorrelation, ``-1/log(kappa)``.

    Returns 0 at kappa=0 and +inf at kappa=1 (continuous extension).
    """
    _check_probability(kappa, "kappa")
    if kappa == 0.0:
        return 0.0
    if kappa == 1.0:
        return math.inf
    return -1.0 / math.log(kappa)


def correlator(p: float, kappa: float, dt: int) -> float:
    """Stationary covariance ``E(B_t B_{t+dt}) - E(B_t) E(B_{t+dt})``.

    Computed from the closed-form chain power applied to the steady state:
    the joint probability of being excited at both times is
    ``p * T^|dt|[1, 1]``.  The result decays as ``p (1-p) kappa^|dt|``.
    """
    joint = p * transition_power(p, kappa, abs(int(dt)))[1, 1]
    return joint - p * p


@dataclass(frozen=True)
class FluctuatorChain:
    """Keep-or-reset chain with excitation probability p and retention kappa."""

    p: float
    kappa: float

    def __post_init__(self) -> None:
        _check_probability(self.p, "p")
        _check_probability(self.kappa, "kappa")

    @property
    def steady_state(self) -> np.ndarray:
        return np.array([1.0 - self.p, self.p])

    def transition_matrix(self) -> np.ndarray:
        return transition_matrix(self.p, self.kappa)

    def transition_power(self, t: int) -> np.ndarray:
        return transition_power(self.p, self.kappa, t)


def _check_bits(bits: Sequence[int]) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.int64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("realization must be a nonempty 1-d bit sequence")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("realization bits must be 0 or 1")
    return arr


def realization_probability(chain: FluctuatorChain, bits: Sequence[int]) -> float:
    """Probability of observing the given state trajectory.

    The first bit is weighted by the steady state (1-p, p); every later bit
    contributes one transition-matrix factor.
    """
    arr = _check_bits(bits)
    t_matrix = chain.transition_matrix()
    prob = chain.steady_state[arr[0]]
    if arr.size > 1:
        prob *= float(np.prod(t_matrix[arr[1:], arr[:-1]]))
    return float(prob)


def enumerate_realizations(length: int) -> np.ndarray:
    """All bitstrings of the given length as an (2**length, length) array."""
    if not (1 <= length <= MAX_ENUMERATION_LENGTH):
        raise ValueError(
            f"enumeration supports lengths 1..{MAX_ENUMERATION_LENGTH}, got {length}"
        )
    codes = np.arange(2**length, dtype=np.int64)
    shifts = np.arange(length - 1, -1, -1, dtype=np.int64)
    return (codes[:, None] >> shifts[None, :]) & 1


def all_realization_probabilities(chain: FluctuatorChain, length: int) -> np.ndarray:
    """Probabilities of every length-``length`` trajectory, in bitstring order."""
    bits = enumerate_realizations(length)
    t_matrix = chain.transition_matrix()
    probs = chain.steady_state[bits[:, 0]].copy()
    for t in range(length - 1):
        probs *= t_matrix[bits[:, t + 1], bits[:, t]]
    return probs


def marginal_excitation(chain: FluctuatorChain, length: int, t: int) -> float:
    """Probability that bit t of a length-``length`` trajectory is 1.

    Computed by exhaustive enumeration; equals p independent of t and kappa.
    """
    if not (0 <= t < length):
        raise ValueError(f"t must lie in 0..{length - 1}, got {t}")
    bits = enumerate_realizations(length)
    probs = all_realization_probabilities(chain, length)
    return float(probs[bits[:, t] == 1].sum())


def realization_prob_derivative_at_zero(
    kappa: float, m: int, bits: Sequence[int]
) -> float:
    """d(realization probability)/dp at p=0 for a length-(m+1) trajectory.

    Nonzero only for the all-zero string, which gets -(m(1-kappa)+1), and for
    strings with a single run of ones, which get
    ``(1-kappa)**h * kappa**(run-1)`` where h counts the 0<->1 transitions.
    """
    _check_probability(kappa, "kappa")
    arr = _check_bits(bits)
    if arr.size != m + 1:
        raise ValueError(f"expected {m + 1} bits, got {arr.size}")
    ones = np.flatnonzero(arr)
    if ones.size == 0:
        return -(m * (1.0 - kappa) + 1.0)
    first, last = int(ones[0]), int(ones[-1])
    run = last - first + 1
    if ones.size != run:
        return 0.0  # more than one run of ones
    trailing_zeros = m - last
    h = 2 - (first == 0) - (trailing_zeros == 0)
    return (1.0 - kappa) ** h * kappa ** (run - 1)


def sample_realization(
    chain: FluctuatorChain, length: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw one trajectory: initial bit from the steady state, then chain steps."""
    if length < 1:
        raise ValueError("length must be >= 1")
    t_matrix = chain.transition_matrix()
    bits = np.empty(length, dtype=np.int64)
    bits[0] = rng.random() < chain.p
    for t in range(1, length):
        bits[t] = rng.random() < t_matrix[1, bits[t - 1]]
    return bits
