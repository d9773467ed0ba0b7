"""In-place numba kernels for the block-simulator hot path.

The compiled circuits only need two kinds of conjugation: involutive
phased gathers (brickwork layers; precomputed two-element orbits) and
single-qubit tile updates (RX mixers and controlled errors).  A one-qubit
monomial error operator is either diagonal or a bit flip, so its
controlled conjugation is a fixed 2x2-tile pattern with four scalar
weights; the slot kernels fuse the fluctuator chain step with it in one
pass over the stack.  All kernels are single-threaded; parallelism lives
at the restart/grid-point level.

The module degrades gracefully: when numba is unavailable ``HAVE_NUMBA``
is False and callers fall back to the numpy implementations.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def involution_orbits(perm: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split an involutive permutation into swapped pairs and fixed points."""
    if not np.array_equal(perm[perm], np.arange(perm.size)):
        raise ValueError("permutation is not an involution")
    lo = np.flatnonzero(perm > np.arange(perm.size)).astype(np.int64)
    return lo, perm[lo], np.flatnonzero(perm == np.arange(perm.size)).astype(np.int64)


@njit(cache=True, fastmath=True)
def conj_orbits(flat, lo, hi, fixed, weights):
    """out[k, e] = weights[e] * in[k, perm[e]] for an involutive perm, in place."""
    n_blocks = flat.shape[0]
    for k in range(n_blocks):
        row = flat[k]
        for i in range(lo.size):
            e = lo[i]
            j = hi[i]
            a = row[e]
            row[e] = weights[e] * row[j]
            row[j] = weights[j] * a
        for i in range(fixed.size):
            e = fixed[i]
            row[e] = weights[e] * row[e]


@njit(cache=True, fastmath=True)
def slot_flip(view, t00, t01, t10, t11, qpos, w00, w01, w10, w11):
    """Chain step then controlled bit-flip error, fused, in place.

    ``view`` has shape (pre, 2, post, dim, dim) with the 2-axis being the
    fluctuator bit; ``qpos`` is the bit position of the slot's qubit within
    a basis index.  The bit-1 slice gets rho[a, b] -> w(a, b) * rho[a^, b^]
    with a^ the index with the qubit bit flipped and w determined by the
    bits (w00..w11 are the four weight values by (row bit, column bit)).
    """
    pre, _, post, dim, _ = view.shape
    mask = 1 << qpos
    high = dim >> (qpos + 1)
    low = 1 << qpos
    for ip in range(pre):
        for iq in range(post):
            blk0 = view[ip, 0, iq]
            blk1 = view[ip, 1, iq]
            for ah in range(high):
                abase = ah << (qpos + 1)
                for al in range(low):
                    a0 = abase | al
                    a1 = a0 | mask
                    for bh in range(high):
                        bbase = bh << (qpos + 1)
                        for bl in range(low):
                            b0 = bbase | bl
                            b1 = b0 | mask
                            x00 = blk0[a0, b0]
                            x01 = blk0[a0, b1]
                            x10 = blk0[a1, b0]
                            x11 = blk0[a1, b1]
                            z00 = blk1[a0, b0]
                            z01 = blk1[a0, b1]
                            z10 = blk1[a1, b0]
                            z11 = blk1[a1, b1]
                            blk0[a0, b0] = t00 * x00 + t01 * z00
                            blk0[a0, b1] = t00 * x01 + t01 * z01
                            blk0[a1, b0] = t00 * x10 + t01 * z10
                            blk0[a1, b1] = t00 * x11 + t01 * z11
                            m00 = t10 * x00 + t11 * z00
                            m01 = t10 * x01 + t11 * z01
                            m10 = t10 * x10 + t11 * z10
                            m11 = t10 * x11 + t11 * z11
                            blk1[a0, b0] = w00 * m11
                            blk1[a0, b1] = w01 * m10
                            blk1[a1, b0] = w10 * m01
                            blk1[a1, b1] = w11 * m00
    return


@njit(cache=True, fastmath=True)
def slot_diag(view, t00, t01, t10, t11, qpos, w00, w01, w10, w11):
    """Chain step then controlled diagonal error, fused, in place."""
    pre, _, post, dim, _ = view.shape
    mask = 1 << qpos
    high = dim >> (qpos + 1)
    low = 1 << qpos
    for ip in range(pre):
        for iq in range(post):
            blk0 = view[ip, 0, iq]
            blk1 = view[ip, 1, iq]
            for ah in range(high):
                abase = ah << (qpos + 1)
                for al in range(low):
                    a0 = abase | al
                    a1 = a0 | mask
                    for bh in range(high):
                        bbase = bh << (qpos + 1)
                        for bl in range(low):
                            b0 = bbase | bl
                            b1 = b0 | mask
                            x00 = blk0[a0, b0]
                            x01 = blk0[a0, b1]
                            x10 = blk0[a1, b0]
                            x11 = blk0[a1, b1]
                            z00 = blk1[a0, b0]
                            z01 = blk1[a0, b1]
                            z10 = blk1[a1, b0]
                            z11 = blk1[a1, b1]
                            blk0[a0, b0] = t00 * x00 + t01 * z00
                            blk0[a0, b1] = t00 * x01 + t01 * z01
                            blk0[a1, b0] = t00 * x10 + t01 * z10
                            blk0[a1, b1] = t00 * x11 + t01 * z11
                            blk1[a0, b0] = w00 * (t10 * x00 + t11 * z00)
                            blk1[a0, b1] = w01 * (t10 * x01 + t11 * z01)
                            blk1[a1, b0] = w10 * (t10 * x10 + t11 * z10)
                            blk1[a1, b1] = w11 * (t10 * x11 + t11 * z11)
    return


@njit(cache=True, fastmath=True)
def controlled_tile(sub, qpos, w00, w01, w10, w11, flip):
    """Phased one-qubit tile conjugation of a block slice, in place.

    Applies rho -> w (.) rho[sigma, sigma] on every block of ``sub``
    (shape (blocks, dim, dim)); sigma flips the qubit bit when ``flip``.
    """
    blocks, dim, _ = sub.shape
    mask = 1 << qpos
    high = dim >> (qpos + 1)
    low = 1 << qpos
    for k in range(blocks):
        blk = sub[k]
        for ah in range(high):
            abase = ah << (qpos + 1)
            for al in range(low):
                a0 = abase | al
                a1 = a0 | mask
                for bh in range(high):
                    bbase = bh << (qpos + 1)
                    for bl in range(low):
                        b0 = bbase | bl
                        b1 = b0 | mask
                        x00 = blk[a0, b0]
                        x01 = blk[a0, b1]
                        x10 = blk[a1, b0]
                        x11 = blk[a1, b1]
                        if flip:
                            blk[a0, b0] = w00 * x11
                            blk[a0, b1] = w01 * x10
                            blk[a1, b0] = w10 * x01
                            blk[a1, b1] = w11 * x00
                        else:
                            blk[a0, b0] = w00 * x00
                            blk[a0, b1] = w01 * x01
                            blk[a1, b0] = w10 * x10
                            blk[a1, b1] = w11 * x11


@njit(cache=True, fastmath=True)
def ctrl_flip(sub, qpos, w00, w01, w10, w11):
    """Controlled bit-flip error alone (identity chain step), in place.

    ``sub`` is the bit-1 slice of the stack, shape (pre, post, dim, dim).
    """
    pre, post, dim, _ = sub.shape
    mask = 1 << qpos
    high = dim >> (qpos + 1)
    low = 1 << qpos
    for ip in range(pre):
        for iq in range(post):
            blk = sub[ip, iq]
            for ah in range(high):
                abase = ah << (qpos + 1)
                for al in range(low):
                    a0 = abase | al
                    a1 = a0 | mask
                    for bh in range(high):
                        bbase = bh << (qpos + 1)
                        for bl in range(low):
                            b0 = bbase | bl
                            b1 = b0 | mask
                            z00 = blk[a0, b0]
                            z01 = blk[a0, b1]
                            z10 = blk[a1, b0]
                            z11 = blk[a1, b1]
                            blk[a0, b0] = w00 * z11
                            blk[a0, b1] = w01 * z10
                            blk[a1, b0] = w10 * z01
                            blk[a1, b1] = w11 * z00


@njit(cache=True, fastmath=True)
def ctrl_diag(sub, qpos, w00, w01, w10, w11):
    """Controlled diagonal error alone (identity chain step), in place."""
    pre, post, dim, _ = sub.shape
    mask = 1 << qpos
    high = dim >> (qpos + 1)
    low = 1 << qpos
    for ip in range(pre):
        for iq in range(post):
            blk = sub[ip, iq]
            for ah in range(high):
                abase = ah << (qpos + 1)
                for al in range(low):
                    a0 = abase | al
                    a1 = a0 | mask
                    for bh in range(high):
                        bbase = bh << (qpos + 1)
                        for bl in range(low):
                            b0 = bbase | bl
                            b1 = b0 | mask
                            blk[a0, b0] = w00 * blk[a0, b0]
                            blk[a0, b1] = w01 * blk[a0, b1]
                            blk[a1, b0] = w10 * blk[a1, b0]
                            blk[a1, b1] = w11 * blk[a1, b1]


@njit(cache=True, fastmath=True)
def single_qubit_conj(stack, u00, u01, u10, u11, qpos):
    """rho -> U rho U^dagger with a one-qubit U on bit position qpos, in place."""
    c00 = np.conj(u00)
    c01 = np.conj(u01)
    c10 = np.conj(u10)
    c11 = np.conj(u11)
    n_blocks, dim, _ = stack.shape
    mask = 1 << qpos
    high = dim >> (qpos + 1)
    low = 1 << qpos
    for k in range(n_blocks):
        block = stack[k]
        for ah in range(high):
            abase = ah << (qpos + 1)
            for al in range(low):
                r = abase | al
                r1 = r | mask
                for bh in range(high):
                    bbase = bh << (qpos + 1)
                    for bl in range(low):
                        c = bbase | bl
                        c1 = c | mask
                        x00 = block[r, c]
                        x01 = block[r, c1]
                        x10 = block[r1, c]
                        x11 = block[r1, c1]
                        y00 = u00 * x00 + u01 * x10
                        y10 = u10 * x00 + u11 * x10
                        y01 = u00 * x01 + u01 * x11
                        y11 = u10 * x01 + u11 * x11
                        block[r, c] = y00 * c00 + y01 * c01
                        block[r, c1] = y00 * c10 + y01 * c11
                        block[r1, c] = y10 * c00 + y11 * c01
                        block[r1, c1] = y10 * c10 + y11 * c11
