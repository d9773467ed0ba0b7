"""SK problem instances, diagonal cost operators, and the SWAP-network ansatz.

Cost convention: C(z) = sum_{i<j} w_ij z_i z_j with spins z_i in {-1, +1},
bit 0 of a basis index mapping to z = +1.  Optimization minimizes C; the
global minimum C* is negative for every +-1 instance, so approximation
ratios lie in [0, 1] and random guessing scores 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .hybrid import QubitGate

MAX_BRUTE_FORCE_QUBITS = 24
_CHUNK = 2**20


@dataclass(frozen=True)
class SkInstance:
    """Complete graph on n nodes with +-1 edge weights in row-major i<j order."""

    n: int
    weights: tuple[int, ...]

    def __post_init__(self) -> None:
        expected = self.n * (self.n - 1) // 2
        if self.n < 2:
            raise ValueError(f"need at least 2 qubits, got n={self.n}")
        if len(self.weights) != expected:
            raise ValueError(
                f"n={self.n} needs {expected} weights, got {len(self.weights)}"
            )
        if any(w not in (-1, 1) for w in self.weights):
            raise ValueError("weights must be +1 or -1")

    def weight(self, i: int, j: int) -> int:
        """Edge weight between distinct nodes i and j (order-free)."""
        if i == j:
            raise ValueError("no self-edges in an SK instance")
        if i > j:
            i, j = j, i
        if not (0 <= i < j < self.n):
            raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
        return self.weights[i * self.n - i * (i + 1) // 2 + (j - i - 1)]

    def edges(self) -> Iterator[tuple[int, int, int]]:
        idx = 0
        for i in range(self.n):
            for j in range(i + 1, self.n):
                yield i, j, self.weights[idx]
                idx += 1

    def text(self) -> str:
        return "".join("+" if w == 1 else "-" for w in self.weights)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "SkInstance":
        count = n * (n - 1) // 2
        return cls(n, tuple(int(w) for w in rng.choice((-1, 1), size=count)))


def parse_instance(text: str) -> SkInstance:
    """Parse a '+'/'-' weight string, optionally prefixed by 'w='."""
    s = text.strip()
    for prefix in ("w=", "W="):
        if s.startswith(prefix):
            s = s[len(prefix) :]
    s = s.lstrip("=").replace("\u2212", "-")  # unicode minus
    if not s or any(ch not in "+-" for ch in s):
        raise ValueError(f"instance text must be '+'/'-' signs, got {text!r}")
    length = len(s)
    n = round((1 + (1 + 8 * length) ** 0.5) / 2)
    if n * (n - 1) // 2 != length or n < 2:
        raise ValueError(f"{length} signs do not form a complete graph")
    return SkInstance(n, tuple(1 if ch == "+" else -1 for ch in s))


def cost(instance: SkInstance, z: Sequence[int]) -> int:
    """Exact integer cost of a +-1 assignment."""
    if len(z) != instance.n:
        raise ValueError(f"assignment length {len(z)} != n={instance.n}")
    if any(v not in (-1, 1) for v in z):
        raise ValueError("assignment entries must be +1 or -1")
    return sum(w * z[i] * z[j] for i, j, w in instance.edges())


def _spin_columns(codes: np.ndarray, n: int) -> np.ndarray:
    """Spins (+1/-1) of each qubit for an array of basis indices; qubit 0 = MSB."""
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (codes[:, None] >> shifts[None, :]) & 1
    return 1 - 2 * bits


def cost_diagonal(
    instance: SkInstance, permutation: Sequence[int] | None = None
) -> np.ndarray:
    """Cost of every basis state, with qubit labels composed with a permutation.

    ``permutation[i]`` is the problem label measured at physical position i;
    the identity permutation gives the plain Hamiltonian diagonal.
    """
    n = instance.n
    if permutation is None:
        permutation = tuple(range(n))
    if sorted(permutation) != list(range(n)):
        raise ValueError(f"invalid permutation {permutation}")
    codes = np.arange(2**n, dtype=np.int64)
    spins = _spin_columns(codes, n)
    diag = np.zeros(2**n, dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            w = instance.weight(permutation[i], permutation[j])
            diag += w * spins[:, i] * spins[:, j]
    return diag


@dataclass(frozen=True)
class DiagonalHamiltonian:
    """Diagonal cost operator over the 2^n computational basis."""

    n: int
    diag: np.ndarray

    def __post_init__(self) -> None:
        if self.diag.shape != (2**self.n,):
            raise ValueError("diagonal length must be 2^n")


def hamiltonian(
    instance: SkInstance, permutation: Sequence[int] | None = None
) -> DiagonalHamiltonian:
    return DiagonalHamiltonian(instance.n, cost_diagonal(instance, permutation))


def brute_force_optimum(instance: SkInstance) -> tuple[int, tuple[tuple[int, ...], ...]]:
    """Exhaustive global minimum of C and all attaining spin assignments."""
    n = instance.n
    if n > MAX_BRUTE_FORCE_QUBITS:
        raise ValueError(f"brute force capped at n={MAX_BRUTE_FORCE_QUBITS}")
    best = None
    minimizers: list[tuple[int, ...]] = []
    for start in range(0, 2**n, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, 2**n), dtype=np.int64)
        spins = _spin_columns(codes, n)
        values = np.zeros(codes.size, dtype=np.int64)
        for i, j, w in instance.edges():
            values += w * spins[:, i] * spins[:, j]
        chunk_min = int(values.min())
        if best is None or chunk_min < best:
            best = chunk_min
            minimizers = []
        if chunk_min == best:
            minimizers.extend(
                tuple(int(s) for s in spins[k]) for k in np.flatnonzero(values == best)
            )
    return best, tuple(minimizers)


@dataclass(frozen=True)
class Params:
    """The 2r variational angles (radians)."""

    betas: tuple[float, ...]
    gammas: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.betas) != len(self.gammas):
            raise ValueError("need equally many betas and gammas")
        if not self.betas:
            raise ValueError("need at least one cycle")
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))

    @property
    def r(self) -> int:
        return len(self.betas)

    def to_array(self) -> np.ndarray:
        return np.array(self.betas + self.gammas)

    @classmethod
    def from_array(cls, x: Sequence[float]) -> "Params":
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size % 2:
            raise ValueError("parameter vector must be flat with even length")
        r = x.size // 2
        return cls(tuple(x[:r]), tuple(x[r:]))


@dataclass(frozen=True)
class ZZLayer:
    """One brickwork layer of disjoint RZZ' gates.

    ``pairs`` holds (position i, position i+1, weight) triples, where the
    weight is the +-1 edge weight of the effective labels interacting there.
    """

    cycle: int
    pairs: tuple[tuple[int, int, int], ...]

    @property
    def active_qubits(self) -> tuple[int, ...]:
        return tuple(sorted(q for i, j, _ in self.pairs for q in (i, j)))


@dataclass(frozen=True)
class RXLayer:
    """A full layer of RX(beta) mixers; no two-qubit gates, no noise slots."""

    cycle: int

    @property
    def active_qubits(self) -> tuple[int, ...]:
        return ()


Layer = ZZLayer | RXLayer


@dataclass(frozen=True)
class AnsatzCircuit:
    """Layered SWAP-network schedule with the final effective qubit order.

    ``permutation[i]`` is the problem label sitting at physical position i
    after the whole circuit; layer count m includes the RX layers.
    """

    n: int
    r: int
    layers: tuple[Layer, ...]
    permutation: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.layers)

    def gates(self, params: Params) -> Iterator[QubitGate]:
        """The circuit as an explicit gate sequence (reference path)."""
        if params.r != self.r:
            raise ValueError(f"params have r={params.r}, circuit has r={self.r}")
        for layer in self.layers:
            if isinstance(layer, ZZLayer):
                gamma = params.gammas[layer.cycle]
                for i, j, w in layer.pairs:
                    yield QubitGate("rzzp", (i, j), angle=w * gamma)
            else:
                beta = params.betas[layer.cycle]
                for q in range(self.n):
                    yield QubitGate("rx", (q,), angle=beta)


def build_swap_network(instance: SkInstance, r: int) -> AnsatzCircuit:
    """Brickwork SWAP network: n RZZ' layers plus one RX layer per cycle.

    Odd layers of a cycle pair positions (0,1)(2,3)...; even layers pair
    (1,2)(3,4)..., leaving the boundary qubits idle.  Each cycle touches
    every unordered label pair exactly once and reverses the label order.
    """
    n = instance.n
    if n % 2:
        raise ValueError("the brickwork SWAP network requires an even qubit count")
    if r < 1:
        raise ValueError("need at least one cycle")
    labels = list(range(n))
    layers: list[Layer] = []
    for cycle in range(r):
        for sub in range(n):
            first = sub % 2  # 0: (0,1)(2,3)...; 1: (1,2)(3,4)...
            pairs = []
            for i in range(first, n - 1, 2):
                a, b = labels[i], labels[i + 1]
                pairs.append((i, i + 1, instance.weight(a, b)))
                labels[i], labels[i + 1] = b, a
            layers.append(ZZLayer(cycle=cycle, pairs=tuple(pairs)))
        layers.append(RXLayer(cycle=cycle))
    return AnsatzCircuit(n=n, r=r, layers=tuple(layers), permutation=tuple(labels))
