"""Block-diagonal density-matrix simulation of qubits plus classical bits.

A register of n qubits coupled to classical binary fluctuators is stored as
one unnormalized 2^n x 2^n density block per classical configuration; the
block for configuration c is the qubit state conditioned on c, weighted by
the probability of c.  All blocks are kept in a single (2^F, 2^n, 2^n)
stack so per-block work vectorizes.

Index conventions, fixed across the package:
  * qubit 0 is the most significant bit of a computational-basis index;
  * the first attached fluctuator is the most significant bit of the
    configuration index (fluctuator order = attachment order).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from . import _kernels

MAX_QUBITS = 12
# Guard on total stack size (complex128 entries) when attaching fluctuators.
MAX_STACK_ELEMENTS = 2**28

IDENTITY_2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SWAP_MATRIX = np.array(
    [
        [1, 0, 0, 0],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
    ],
    dtype=complex,
)


def rx(angle: float) -> np.ndarray:
    """exp(-i angle X / 2)."""
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    return np.array([[c, -1.0j * s], [-1.0j * s, c]])


def ry(angle: float) -> np.ndarray:
    """exp(-i angle Y / 2)."""
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(angle: float) -> np.ndarray:
    """exp(-i angle Z / 2)."""
    return np.diag(np.exp([-0.5j * angle, 0.5j * angle]))


def rzz(angle: float) -> np.ndarray:
    """exp(-i angle ZZ / 2) on two qubits."""
    half = 0.5j * angle
    return np.diag(np.exp([-half, half, half, -half]))


def rzz_prime(angle: float) -> np.ndarray:
    """RZZ followed by SWAP; the two factors commute."""
    return rzz(angle) @ SWAP_MATRIX


_FIXED_GATES = {
    "x": PAULI_X,
    "y": PAULI_Y,
    "z": PAULI_Z,
    "swap": SWAP_MATRIX,
}
_ROTATION_GATES = {"rx": rx, "ry": ry, "rz": rz, "rzz": rzz, "rzzp": rzz_prime}


@dataclass(frozen=True)
class QubitGate:
    """A gate acting on one or two qubits of the register.

    ``kind`` is one of rx/ry/rz/rzz/rzzp/x/y/z/swap/unitary; rotations carry
    an angle in radians, and ``unitary`` carries an explicit matrix.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    unitary: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        targets = tuple(int(q) for q in self.targets)
        object.__setattr__(self, "targets", targets)
        if len(set(targets)) != len(targets):
            raise ValueError(f"duplicate targets {targets}")
        if self.kind in _ROTATION_GATES:
            if self.angle is None:
                raise ValueError(f"{self.kind} gate needs an angle")
        elif self.kind in _FIXED_GATES:
            pass
        elif self.kind == "unitary":
            if self.unitary is None:
                raise ValueError("unitary gate needs a matrix")
            mat = np.asarray(self.unitary, dtype=complex)
            if mat.shape != (2 ** len(targets),) * 2:
                raise ValueError(f"matrix shape {mat.shape} does not fit targets")
            if not np.allclose(mat.conj().T @ mat, np.eye(mat.shape[0]), atol=1e-12):
                raise ValueError("gate matrix is not unitary")
            object.__setattr__(self, "unitary", mat)
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        expected = 2 if self.kind in ("rzz", "rzzp", "swap") else None
        if expected is not None and len(targets) != expected:
            raise ValueError(f"{self.kind} acts on {expected} qubits, got {targets}")
        if self.kind in ("rx", "ry", "rz", "x", "y", "z") and len(targets) != 1:
            raise ValueError(f"{self.kind} acts on one qubit, got {targets}")

    def matrix(self) -> np.ndarray:
        if self.kind in _ROTATION_GATES:
            return _ROTATION_GATES[self.kind](self.angle)
        if self.kind in _FIXED_GATES:
            return _FIXED_GATES[self.kind].copy()
        return self.unitary.copy()


def embed(matrix: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Embed a k-qubit matrix onto the given qubits of an n-qubit register."""
    targets = tuple(int(q) for q in targets)
    k = len(targets)
    if any(not 0 <= q < n for q in targets):
        raise ValueError(f"targets {targets} out of range for n={n}")
    mat = np.asarray(matrix, dtype=complex)
    if mat.shape != (2**k, 2**k):
        raise ValueError(f"matrix shape {mat.shape} does not fit {k} targets")
    dim = 2**n
    rest = [q for q in range(n) if q not in targets]
    # Base indices with all target bits cleared, enumerated over rest bits.
    base = np.zeros(2 ** len(rest), dtype=np.int64)
    for pos, q in enumerate(rest):
        bit = (np.arange(2 ** len(rest)) >> (len(rest) - 1 - pos)) & 1
        base |= bit << (n - 1 - q)
    out = np.zeros((dim, dim), dtype=complex)
    for a in range(2**k):
        rows = base.copy()
        for pos, q in enumerate(targets):
            if (a >> (k - 1 - pos)) & 1:
                rows |= 1 << (n - 1 - q)
        for b in range(2**k):
            cols = base.copy()
            for pos, q in enumerate(targets):
                if (b >> (k - 1 - pos)) & 1:
                    cols |= 1 << (n - 1 - q)
            out[rows, cols] = mat[a, b]
    return out


def monomial_parts(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Decompose a matrix with one nonzero per row as (column map, phases).

    Returns None when the matrix is not of that form.  For such a matrix
    ``M[i, sigma[i]] = phase[i]`` and conjugation by M is a phased gather.
    """
    mat = np.asarray(matrix, dtype=complex)
    nonzero = np.abs(mat) > 1e-14
    if not ((nonzero.sum(axis=0) == 1).all() and (nonzero.sum(axis=1) == 1).all()):
        return None
    sigma = nonzero.argmax(axis=1)
    phases = mat[np.arange(mat.shape[0]), sigma]
    return sigma.astype(np.int64), phases


def flat_conjugation_gather(sigma: np.ndarray, dim: int) -> np.ndarray:
    """Flat gather index realizing rho[a, b] -> rho[sigma(a), sigma(b)]."""
    return (sigma[:, None] * dim + sigma[None, :]).ravel()


@dataclass(frozen=True, eq=False)
class InvolutionOrbits:
    """An involutive flat gather split into swap pairs and fixed points."""

    gather: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    fixed: np.ndarray

    @classmethod
    def from_gather(cls, gather: np.ndarray) -> "InvolutionOrbits":
        lo, hi, fixed = _kernels.involution_orbits(gather)
        return cls(gather=gather, lo=lo, hi=hi, fixed=fixed)


@dataclass(frozen=True, eq=False)
class ControlledMonomial:
    """A one-qubit monomial error operator compiled for fast insertion.

    A 2x2 monomial is diagonal or a bit flip, so its conjugation on qubit
    ``qubit`` is a 2x2-tile pattern with the four weights ``w``; ``gather``
    and ``weights`` hold the equivalent flat form for the numpy fallback,
    ``sigma``/``phases`` the statevector form.
    """

    qubit: int
    qpos: int  # bit position of the qubit within a basis index
    flip: bool
    w: tuple[complex, complex, complex, complex]
    gather: np.ndarray
    weights: np.ndarray
    sigma: np.ndarray
    phases: np.ndarray

    @classmethod
    def compile(cls, v: np.ndarray, qubit: int, n: int) -> "ControlledMonomial | None":
        parts2 = monomial_parts(v)
        if parts2 is None:
            return None
        sigma2, phases2 = parts2
        sigma, phases = monomial_parts(embed(v, (qubit,), n))
        w = tuple(
            complex(phases2[a] * np.conj(phases2[b])) for a in (0, 1) for b in (0, 1)
        )
        return cls(
            qubit=qubit,
            qpos=n - 1 - qubit,
            flip=bool(sigma2[0] == 1),
            w=w,
            gather=flat_conjugation_gather(sigma, 2**n),
            weights=(phases[:, None] * phases.conj()[None, :]).ravel(),
            sigma=sigma,
            phases=phases,
        )


@dataclass
class StateDiagnostics:
    """Numerical health report of a hybrid state."""

    trace_deviation: float
    hermiticity_deviation: float
    min_block_eigenvalue: float
    block_traces: np.ndarray

    def ok(self, trace_tol=1e-10, herm_tol=1e-12, eig_tol=-1e-10) -> bool:
        return (
            self.trace_deviation <= trace_tol
            and self.hermiticity_deviation <= herm_tol
            and self.min_block_eigenvalue >= eig_tol
        )


class HybridState:
    """Stack of conditional density blocks over classical bit configurations."""

    def __init__(
        self,
        n_qubits: int,
        stack: np.ndarray,
        fluctuator_ids: tuple[Hashable, ...] = (),
    ):
        self.n_qubits = int(n_qubits)
        self.dim = 2**self.n_qubits
        self._fids = tuple(fluctuator_ids)
        if stack.shape != (2 ** len(self._fids), self.dim, self.dim):
            raise ValueError(f"stack shape {stack.shape} inconsistent with register")
        self._stack = stack

    # -- construction and views ------------------------------------------------

    @property
    def fluctuator_ids(self) -> tuple[Hashable, ...]:
        return self._fids

    @property
    def num_blocks(self) -> int:
        return self._stack.shape[0]

    @property
    def stack(self) -> np.ndarray:
        """The raw (2^F, 2^n, 2^n) block stack (a view; mutate with care)."""
        return self._stack

    @property
    def blocks(self) -> dict[tuple[int, ...], np.ndarray]:
        """Mapping from classical configuration to its (copied) block."""
        f = len(self._fids)
        out = {}
        for code in range(2**f):
            config = tuple((code >> (f - 1 - i)) & 1 for i in range(f))
            out[config] = self._stack[code].copy()
        return out

    def block(self, config: Sequence[int]) -> np.ndarray:
        if len(config) != len(self._fids):
            raise ValueError("configuration length mismatch")
        code = 0
        for bit in config:
            code = (code << 1) | int(bit)
        return self._stack[code].copy()

    def copy(self) -> "HybridState":
        return HybridState(self.n_qubits, self._stack.copy(), self._fids)

    def total_trace(self) -> float:
        return float(np.einsum("kii->", self._stack).real)

    def _axis(self, fluctuator_id: Hashable) -> int:
        try:
            return self._fids.index(fluctuator_id)
        except ValueError:
            raise KeyError(f"unknown fluctuator {fluctuator_id!r}") from None

    # -- classical operations --------------------------------------------------

    def attach_fluctuator(self, fluctuator_id: Hashable, p: float) -> "HybridState":
        """Adjoin a fresh classical bit in the ensemble (1-p, p)."""
        if fluctuator_id in self._fids:
            raise ValueError(f"duplicate fluctuator id {fluctuator_id!r}")
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"p must lie in [0, 1], got {p}")
        if 2 * self._stack.size > MAX_STACK_ELEMENTS:
            raise MemoryError("attaching this fluctuator would exceed the stack cap")
        k = self.num_blocks
        new = np.empty((2 * k, self.dim, self.dim), dtype=complex)
        new[0::2] = (1.0 - p) * self._stack
        new[1::2] = p * self._stack
        self._stack = new
        self._fids = self._fids + (fluctuator_id,)
        return self

    def trace_out_fluctuator(self, fluctuator_id: Hashable) -> "HybridState":
        """Sum blocks over one classical bit, halving the block count."""
        axis = self._axis(fluctuator_id)
        f = len(self._fids)
        shaped = self._stack.reshape((2,) * f + (self.dim, self.dim))
        self._stack = np.ascontiguousarray(shaped.sum(axis=axis)).reshape(
            2 ** (f - 1), self.dim, self.dim
        )
        self._fids = self._fids[:axis] + self._fids[axis + 1 :]
        return self

    def apply_classical_transition(
        self, fluctuator_id: Hashable, t_matrix: np.ndarray
    ) -> "HybridState":
        """Remix blocks along one classical bit by a column-stochastic matrix."""
        t_matrix = np.asarray(t_matrix, dtype=float)
        if t_matrix.shape != (2, 2):
            raise ValueError("transition matrix must be 2x2")
        if not np.allclose(t_matrix.sum(axis=0), 1.0, atol=1e-12):
            raise ValueError("transition matrix must be column-stochastic")
        axis = self._axis(fluctuator_id)
        pre = 2**axis
        post = self._stack.size // (2 * pre)
        shaped = self._stack.reshape(pre, 2, post)
        self._stack = np.matmul(t_matrix, shaped).reshape(self._stack.shape)
        return self

    # -- quantum operations ----------------------------------------------------

    def apply_unitary(self, gate: QubitGate) -> "HybridState":
        """Conjugate every block by the gate embedded on its target qubits."""
        if any(not 0 <= q < self.n_qubits for q in gate.targets):
            raise ValueError(f"gate targets {gate.targets} out of range")
        full = embed(gate.matrix(), gate.targets, self.n_qubits)
        self.conjugate_all(full)
        return self

    def conjugate_all(self, unitary: np.ndarray) -> "HybridState":
        """rho -> U rho U^dagger on every block (batched matmul)."""
        self._stack = unitary @ self._stack @ unitary.conj().T
        return self

    def conjugate_indexed(self, gather: np.ndarray, weights: np.ndarray) -> "HybridState":
        """Conjugation by a monomial unitary as a phased flat gather.

        ``gather`` and ``weights`` have length dim^2 and realize
        ``rho.flat -> weights * rho.flat[gather]`` per block.
        """
        k = self.num_blocks
        flat = self._stack.reshape(k, self.dim * self.dim)
        self._stack = (flat[:, gather] * weights).reshape(k, self.dim, self.dim)
        return self

    def apply_controlled_error(
        self, fluctuator_id: Hashable, qubit: int, v: np.ndarray
    ) -> "HybridState":
        """Conjugate blocks whose fluctuator bit is 1 by V on one qubit."""
        if not 0 <= qubit < self.n_qubits:
            raise ValueError(f"qubit {qubit} out of range")
        v = np.asarray(v, dtype=complex)
        if v.shape != (2, 2):
            raise ValueError("controlled error must be a single-qubit matrix")
        axis = self._axis(fluctuator_id)
        parts = monomial_parts(embed(v, (qubit,), self.n_qubits))
        pre = 2**axis
        post = self.num_blocks // (2 * pre)
        sub = self._stack.reshape(pre, 2, post, self.dim, self.dim)[:, 1]
        if parts is not None:
            sigma, phases = parts
            gather = flat_conjugation_gather(sigma, self.dim)
            weights = (phases[:, None] * phases.conj()[None, :]).ravel()
            flat = sub.reshape(pre * post, self.dim * self.dim)
            flat[:] = flat[:, gather] * weights
        else:
            full = embed(v, (qubit,), self.n_qubits)
            sub[:] = full @ sub @ full.conj().T
        return self

    def controlled_gather(
        self, fluctuator_id: Hashable, gather: np.ndarray, weights: np.ndarray
    ) -> "HybridState":
        """Phased-gather conjugation applied only to bit-1 blocks (fast path)."""
        axis = self._axis(fluctuator_id)
        pre = 2**axis
        post = self.num_blocks // (2 * pre)
        sub = self._stack.reshape(pre, 2, post, self.dim * self.dim)[:, 1]
        sub[:] = sub[:, :, gather] * weights
        return self

    # -- kernel-backed fast paths (numpy fallbacks preserve the semantics) ------

    def conj_involution(
        self, orbits: "InvolutionOrbits", weights: np.ndarray
    ) -> "HybridState":
        """conjugate_indexed specialized to involutive gathers; in place."""
        if _kernels.HAVE_NUMBA:
            _kernels.conj_orbits(
                self._stack.reshape(self.num_blocks, self.dim * self.dim),
                orbits.lo,
                orbits.hi,
                orbits.fixed,
                weights,
            )
            return self
        return self.conjugate_indexed(orbits.gather, weights)

    def slot_step(
        self,
        fluctuator_id: Hashable,
        t_matrix: np.ndarray,
        cv: "ControlledMonomial",
    ) -> "HybridState":
        """One noise slot: chain step on the bit, then the controlled error."""
        if _kernels.HAVE_NUMBA:
            axis = self._axis(fluctuator_id)
            pre = 2**axis
            post = self.num_blocks // (2 * pre)
            view = self._stack.reshape(pre, 2, post, self.dim, self.dim)
            if t_matrix[0, 1] == 0.0 and t_matrix[1, 0] == 0.0 and t_matrix[0, 0] == 1.0:
                # Identity chain step (kappa=1): only the bit-1 half moves.
                kernel = _kernels.ctrl_flip if cv.flip else _kernels.ctrl_diag
                kernel(view[:, 1], cv.qpos, cv.w[0], cv.w[1], cv.w[2], cv.w[3])
                return self
            kernel = _kernels.slot_flip if cv.flip else _kernels.slot_diag
            kernel(
                view,
                float(t_matrix[0, 0]),
                float(t_matrix[0, 1]),
                float(t_matrix[1, 0]),
                float(t_matrix[1, 1]),
                cv.qpos,
                cv.w[0],
                cv.w[1],
                cv.w[2],
                cv.w[3],
            )
            return self
        self.apply_classical_transition(fluctuator_id, t_matrix)
        return self.controlled_gather(fluctuator_id, cv.gather, cv.weights)

    def uniform_single_qubit_layer(self, u2: np.ndarray) -> "HybridState":
        """Conjugate every block by u2 applied to every qubit."""
        if _kernels.HAVE_NUMBA:
            for qpos in range(self.n_qubits):
                _kernels.single_qubit_conj(
                    self._stack,
                    complex(u2[0, 0]),
                    complex(u2[0, 1]),
                    complex(u2[1, 0]),
                    complex(u2[1, 1]),
                    qpos,
                )
            return self
        full = u2
        for _ in range(self.n_qubits - 1):
            full = np.kron(full, u2)
        return self.conjugate_all(full)

    # -- measurement and checks ------------------------------------------------

    def expectation(self, diagonal: np.ndarray) -> float:
        """Trace of (state x diagonal observable), fluctuators summed over."""
        diagonal = np.asarray(diagonal)
        if diagonal.shape != (self.dim,):
            raise ValueError(f"diagonal has shape {diagonal.shape}, need ({self.dim},)")
        diag_sum = np.einsum("kii->i", self._stack)
        value = complex(diag_sum @ diagonal)
        if abs(value.imag) > 1e-10:
            raise ArithmeticError(f"imaginary residue {value.imag:.3e} exceeds 1e-10")
        return value.real

    def expectation_dense(self, observable: np.ndarray) -> float:
        """Trace of (state x dense observable), fluctuators summed over."""
        value = complex(np.einsum("kij,ji->", self._stack, observable))
        if abs(value.imag) > 1e-10:
            raise ArithmeticError(f"imaginary residue {value.imag:.3e} exceeds 1e-10")
        return value.real

    def validate(self) -> StateDiagnostics:
        traces = np.einsum("kii->k", self._stack)
        trace_dev = abs(traces.sum() - 1.0)
        herm = np.abs(self._stack - self._stack.conj().transpose(0, 2, 1)).max()
        hermitized = 0.5 * (self._stack + self._stack.conj().transpose(0, 2, 1))
        min_eig = min(
            (np.linalg.eigvalsh(block).min() for block in hermitized), default=0.0
        )
        return StateDiagnostics(
            trace_deviation=float(trace_dev),
            hermiticity_deviation=float(herm),
            min_block_eigenvalue=float(min_eig),
            block_traces=traces.real,
        )


def init_plus_state(n: int) -> HybridState:
    """|+><+|^n with no fluctuators attached."""
    if not (1 <= n <= MAX_QUBITS):
        raise ValueError(f"n must lie in 1..{MAX_QUBITS}, got {n}")
    dim = 2**n
    stack = np.full((1, dim, dim), 1.0 / dim, dtype=complex)
    return HybridState(n, stack)


def error_operator(spec) -> np.ndarray:
    """Resolve an error-operator spec: 'X'/'Y'/'Z' preset or explicit 2x2 unitary."""
    if isinstance(spec, str):
        try:
            return {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}[spec.upper()].copy()
        except KeyError:
            raise ValueError(f"unknown error operator preset {spec!r}") from None
    mat = np.asarray(spec, dtype=complex)
    if mat.shape != (2, 2):
        raise ValueError("error operator must be a 2x2 matrix")
    if not np.allclose(mat.conj().T @ mat, np.eye(2), atol=1e-12):
        raise ValueError("error operator must be unitary")
    return mat
