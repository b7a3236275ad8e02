"""Hot kernels for the iterative Karatsuba multiplier model.

Two interchangeable implementations of one computation:

* ``karatsuba_cycles_numba`` -- scalar loops compiled with ``numba.njit``;
* ``karatsuba_cycles_numpy`` -- vectorised over multiplications, no numba.

``karatsuba_cycles`` is whichever one is active.  Numba is used when it
imports and the environment variable ``HORIZDPA_NUMBA`` is not ``0``.

Layout: a field element is 4 little-endian uint64 limbs, a 465-bit wide
product is 8 limbs, a 117-bit partial product is a (lo, hi) limb pair.
The kernel runs N multiplications back to back on one multiplier and
returns, per multiplication, the reduced product and a (9, 4) activity
block with columns ``ACTIVITY_FIELDS``.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("HORIZDPA_NUMBA", "1") != "0"

ACTIVITY_FIELDS = ("and_toggles", "xor_toggles", "accumulator_hd", "operand_hd")

SEG_OFFSETS = np.array([0, 59, 118, 177], dtype=np.int64)
SEG_WIDTHS = np.array([59, 59, 59, 56], dtype=np.int64)
XOR_DEPTH = 6  # ceil(log2(59))
N_STEPS = 9
COEF_SHIFT = 59

_TOP_MASK = np.uint64((1 << 41) - 1)  # bits 192..232 of limb 3


def _maybe_njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# numba path: one multiplication at a time, state carried in locals
# ---------------------------------------------------------------------------

@_maybe_njit
def _popcount(v):
    v = v - ((v >> np.uint64(1)) & np.uint64(0x5555555555555555))
    v = (v & np.uint64(0x3333333333333333)) + ((v >> np.uint64(2)) & np.uint64(0x3333333333333333))
    v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return np.int64((v * np.uint64(0x0101010101010101)) >> np.uint64(56))


@_maybe_njit
def _segment(limbs, k):
    off = SEG_OFFSETS[k]
    width = SEG_WIDTHS[k]
    idx = off >> 6
    sh = np.uint64(off & 63)
    v = limbs[idx] >> sh
    if sh != 0 and idx + 1 < 4:
        v |= limbs[idx + 1] << (np.uint64(64) - sh)
    return v & ((np.uint64(1) << np.uint64(width)) - np.uint64(1))


@_maybe_njit
def _clmul59(x, y):
    lo = np.uint64(0)
    hi = np.uint64(0)
    for i in range(59):
        if (x >> np.uint64(i)) & np.uint64(1):
            lo ^= y << np.uint64(i)
            if i:
                hi ^= y >> np.uint64(64 - i)
    return lo, hi


@_maybe_njit
def _xor_shifted(wide, lo, hi, off):
    idx = off >> 6
    sh = off & 63
    if sh == 0:
        wide[idx] ^= lo
        wide[idx + 1] ^= hi
    else:
        s = np.uint64(sh)
        r = np.uint64(64 - sh)
        wide[idx] ^= lo << s
        wide[idx + 1] ^= (lo >> r) | (hi << s)
        if idx + 2 < wide.shape[0]:
            wide[idx + 2] ^= hi >> r


@_maybe_njit
def _reduce_wide(wide, out):
    # t^233 = t^74 + 1, folded until nothing is left above bit 232
    hi = np.zeros(8, dtype=np.uint64)
    while True:
        done = (wide[3] >> np.uint64(41)) == 0
        for k in range(4, 8):
            if wide[k] != 0:
                done = False
        if done:
            break
        for k in range(8):
            hi[k] = 0
        for k in range(5):
            v = wide[k + 3] >> np.uint64(41)
            if k + 4 < 8:
                v |= wide[k + 4] << np.uint64(23)
            hi[k] = v
        wide[3] &= _TOP_MASK
        for k in range(4, 8):
            wide[k] = 0
        for k in range(5):
            wide[k] ^= hi[k]
        # << 74 == one limb plus 10 bits
        for k in range(7, 0, -1):
            v = hi[k - 1] << np.uint64(10)
            if k >= 2:
                v |= hi[k - 2] >> np.uint64(54)
            wide[k] ^= v
    for k in range(4):
        out[k] = wide[k]


@_maybe_njit
def _karatsuba_cycles_loop(a, b, left_masks, shift_masks, prev_x, prev_y, prev_acc):
    n = a.shape[0]
    prod = np.zeros((n, 4), dtype=np.uint64)
    act = np.zeros((n, N_STEPS, 4), dtype=np.int64)
    px = prev_x
    py = prev_y
    plo, phi = _clmul59(px, py)
    pacc = prev_acc.copy()
    acc = np.zeros(4, dtype=np.uint64)
    wide = np.zeros(8, dtype=np.uint64)
    sa = np.zeros(4, dtype=np.uint64)
    sb = np.zeros(4, dtype=np.uint64)
    for m in range(n):
        for k in range(4):
            sa[k] = _segment(a[m], k)
            sb[k] = _segment(b[m], k)
            acc[k] = 0
        for s in range(N_STEPS):
            x = np.uint64(0)
            y = np.uint64(0)
            for k in range(4):
                if (left_masks[s] >> k) & 1:
                    x ^= sa[k]
                    y ^= sb[k]
            lo, hi = _clmul59(x, y)
            for k in range(4):
                wide[k] = acc[k]
                wide[k + 4] = 0
            for c in range(7):
                if (shift_masks[s] >> c) & 1:
                    _xor_shifted(wide, lo, hi, c * COEF_SHIFT)
            _reduce_wide(wide, acc)

            n11 = _popcount(x & px)
            n10 = _popcount(x & ~px)
            n01 = _popcount(px & ~x)
            act[m, s, 0] = n11 * _popcount(y ^ py) + n10 * _popcount(y) + n01 * _popcount(py)
            act[m, s, 1] = XOR_DEPTH * (_popcount(lo ^ plo) + _popcount(hi ^ phi))
            hd = 0
            for k in range(4):
                hd += _popcount(acc[k] ^ pacc[k])
                pacc[k] = acc[k]
            act[m, s, 2] = hd
            act[m, s, 3] = _popcount(x ^ px) + _popcount(y ^ py)
            px = x
            py = y
            plo = lo
            phi = hi
        for k in range(4):
            prod[m, k] = acc[k]
    return prod, act


def karatsuba_cycles_numba(a, b, left_masks, shift_masks, prev_x=0, prev_y=0, prev_acc=None):
    if not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    if prev_acc is None:
        prev_acc = np.zeros(4, dtype=np.uint64)
    return _karatsuba_cycles_loop(
        np.ascontiguousarray(a, dtype=np.uint64),
        np.ascontiguousarray(b, dtype=np.uint64),
        np.asarray(left_masks, dtype=np.int64),
        np.asarray(shift_masks, dtype=np.int64),
        np.uint64(prev_x),
        np.uint64(prev_y),
        np.asarray(prev_acc, dtype=np.uint64),
    )


# ---------------------------------------------------------------------------
# numpy path: vectorised over all N*9 cycles
# ---------------------------------------------------------------------------

def _np_segments(limbs):
    segs = np.empty(limbs.shape[:-1] + (4,), dtype=np.uint64)
    for k in range(4):
        off = int(SEG_OFFSETS[k])
        width = int(SEG_WIDTHS[k])
        idx, sh = off >> 6, off & 63
        v = limbs[..., idx] >> np.uint64(sh)
        if sh and idx + 1 < 4:
            v |= limbs[..., idx + 1] << np.uint64(64 - sh)
        segs[..., k] = v & np.uint64((1 << width) - 1)
    return segs


def _np_clmul59(x, y):
    lo = np.zeros_like(x)
    hi = np.zeros_like(x)
    zero = np.uint64(0)
    for i in range(59):
        bit = ((x >> np.uint64(i)) & np.uint64(1)).astype(bool)
        lo ^= np.where(bit, y << np.uint64(i), zero)
        if i:
            hi ^= np.where(bit, y >> np.uint64(64 - i), zero)
    return lo, hi


def _np_xor_shifted(wide, lo, hi, off):
    idx, sh = off >> 6, off & 63
    if sh == 0:
        wide[..., idx] ^= lo
        wide[..., idx + 1] ^= hi
        return
    s, r = np.uint64(sh), np.uint64(64 - sh)
    wide[..., idx] ^= lo << s
    wide[..., idx + 1] ^= (lo >> r) | (hi << s)
    if idx + 2 < wide.shape[-1]:
        wide[..., idx + 2] ^= hi >> r


def _np_reduce_wide(wide):
    wide = wide.copy()
    while True:
        if not ((wide[..., 3] >> np.uint64(41)).any() or wide[..., 4:].any()):
            break
        hi = np.zeros_like(wide)
        for k in range(5):
            v = wide[..., k + 3] >> np.uint64(41)
            if k + 4 < 8:
                v = v | (wide[..., k + 4] << np.uint64(23))
            hi[..., k] = v
        wide[..., 3] &= _TOP_MASK
        wide[..., 4:] = 0
        wide ^= hi
        shifted = np.zeros_like(wide)
        shifted[..., 1:] = hi[..., :-1] << np.uint64(10)
        shifted[..., 2:] |= hi[..., :-2] >> np.uint64(54)
        wide ^= shifted
    return wide[..., :4]


def _np_popcount(v):
    return np.bitwise_count(v).astype(np.int64)


def karatsuba_cycles_numpy(a, b, left_masks, shift_masks, prev_x=0, prev_y=0, prev_acc=None):
    a = np.asarray(a, dtype=np.uint64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.uint64).reshape(-1, 4)
    n = a.shape[0]
    if prev_acc is None:
        prev_acc = np.zeros(4, dtype=np.uint64)
    sa = _np_segments(a)
    sb = _np_segments(b)

    # partial-multiplier operands for every (multiplication, step)
    x = np.zeros((n, N_STEPS), dtype=np.uint64)
    y = np.zeros((n, N_STEPS), dtype=np.uint64)
    for s in range(N_STEPS):
        for k in range(4):
            if (int(left_masks[s]) >> k) & 1:
                x[:, s] ^= sa[:, k]
                y[:, s] ^= sb[:, k]
    lo, hi = _np_clmul59(x, y)

    wide = np.zeros((n, N_STEPS, 8), dtype=np.uint64)
    for s in range(N_STEPS):
        for c in range(7):
            if (int(shift_masks[s]) >> c) & 1:
                _np_xor_shifted(wide[:, s], lo[:, s], hi[:, s], c * COEF_SHIFT)
    # reduction is linear, so reducing the running XOR equals reducing per cycle
    wide = np.bitwise_xor.accumulate(wide, axis=1)
    acc = _np_reduce_wide(wide)  # (n, 9, 4)

    # flatten to the cycle sequence and prepend the carried-in state
    px0, py0 = np.uint64(prev_x), np.uint64(prev_y)
    plo0, phi0 = _np_clmul59(np.array([px0]), np.array([py0]))
    xf = x.reshape(-1)
    yf = y.reshape(-1)
    xp = np.concatenate(([px0], xf[:-1]))
    yp = np.concatenate(([py0], yf[:-1]))
    lof, hif = lo.reshape(-1), hi.reshape(-1)
    lop = np.concatenate((plo0, lof[:-1]))
    hip = np.concatenate((phi0, hif[:-1]))
    accf = acc.reshape(-1, 4)
    accp = np.concatenate((np.asarray(prev_acc, dtype=np.uint64)[None, :], accf[:-1]))

    pc = _np_popcount
    and_t = pc(xf & xp) * pc(yf ^ yp) + pc(xf & ~xp) * pc(yf) + pc(xp & ~xf) * pc(yp)
    xor_t = XOR_DEPTH * (pc(lof ^ lop) + pc(hif ^ hip))
    acc_hd = pc(accf ^ accp).sum(axis=1)
    op_hd = pc(xf ^ xp) + pc(yf ^ yp)

    act = np.stack((and_t, xor_t, acc_hd, op_hd), axis=1).reshape(n, N_STEPS, 4)
    prod = np.ascontiguousarray(acc[:, -1, :])
    return prod, act


karatsuba_cycles = karatsuba_cycles_numba if USE_NUMBA else karatsuba_cycles_numpy


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
