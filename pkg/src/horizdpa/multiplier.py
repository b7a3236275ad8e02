"""Cycle model of the 4-segment iterative Karatsuba field multiplier.

Operands are cut into four segments (59, 59, 59, 56 bits, low to high).
Each of 9 clock cycles feeds one XOR-combination of segments to a
59x59-bit classical partial multiplier; the 117-bit partial product is
XORed into the accumulator at one or more multiples of 59 bits and the
accumulator is reduced modulo f(t) in the same cycle.

Per cycle the model also reports gate activity:

* ``and_toggles`` -- Hamming distance between consecutive AND planes
  (59 x 59 bits, the plane holds ``x_i & y_k``);
* ``xor_toggles`` -- Hamming distance of the partial-product output times
  the XOR-tree depth ``ceil(log2 59) = 6``;
* ``accumulator_hd`` -- Hamming distance of consecutive accumulator values;
* ``operand_hd`` -- Hamming distance of consecutive partial-multiplier inputs.

``multiply`` is a readable pure-Python implementation; ``multiply_many``
runs the same model through the compiled kernel in :mod:`._kernels`.
"""

from __future__ import annotations

from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .field import M, MASK, reduce

SEG_WIDTHS = (59, 59, 59, 56)
SEG_OFFSETS = (0, 59, 118, 177)
PARTIAL_WIDTH = 59
N_STEPS = 9
AND_GATES = PARTIAL_WIDTH**2  # 3481
XOR_GATES = (PARTIAL_WIDTH - 1) ** 2  # 3364
XOR_DEPTH = _kernels.XOR_DEPTH


class OperandSegments(NamedTuple):
    s0: int
    s1: int
    s2: int
    s3: int

    def join(self) -> int:
        return self.s0 | (self.s1 << 59) | (self.s2 << 118) | (self.s3 << 177)


class PlanStep(NamedTuple):
    left: frozenset[int]
    right: frozenset[int]
    # bit offsets (multiples of 59) where the partial product is XORed in
    shifts: tuple[int, ...]


class GateActivity(NamedTuple):
    and_toggles: int = 0
    xor_toggles: int = 0
    accumulator_hd: int = 0
    operand_hd: int = 0


class MultiplierState(NamedTuple):
    accumulator: int = 0
    cycle_index: int = 0
    previous_accumulator: int = 0
    x: int = 0  # last partial-multiplier operands
    y: int = 0


class MultiplyResult(NamedTuple):
    product: int
    activity: tuple[GateActivity, ...]
    state: MultiplierState


def segment(a: int) -> OperandSegments:
    return OperandSegments(*((a >> off) & ((1 << w) - 1) for off, w in zip(SEG_OFFSETS, SEG_WIDTHS)))


# Fixed calculation order: diagonal products, pairwise sums, all four.
_SUBSETS = (
    (0,), (1,), (2,), (3,),
    (0, 1), (2, 3), (0, 2), (1, 3),
    (0, 1, 2, 3),
)


def _derive_shifts(subsets):
    """For each plan product, the coefficient positions it contributes to.

    Coefficient m of the segment product is XOR_{i+j=m} A_i B_j.  Each plan
    product (XOR_S A)(XOR_S B) covers the pairs S x S; pick, for every m,
    the unique subset of plan products whose pair sets XOR to the target.
    """
    covers = [frozenset((i, j) for i in s for j in s) for s in subsets]
    shifts = [[] for _ in subsets]
    for m in range(7):
        target = frozenset((i, j) for i in range(4) for j in range(4) if i + j == m)
        found = []
        for r in range(1, len(subsets) + 1):
            for combo in combinations(range(len(subsets)), r):
                acc = frozenset()
                for c in combo:
                    acc = acc ^ covers[c]
                if acc == target:
                    found.append(combo)
            if found:
                break
        if len(found) != 1:
            raise AssertionError(f"ambiguous Karatsuba recombination for coefficient {m}")
        for c in found[0]:
            shifts[c].append(m * PARTIAL_WIDTH)
    return [tuple(s) for s in shifts]


_PLAN = tuple(
    PlanStep(frozenset(s), frozenset(s), sh) for s, sh in zip(_SUBSETS, _derive_shifts(_SUBSETS))
)
_LEFT_MASKS = np.array([sum(1 << k for k in st.left) for st in _PLAN], dtype=np.int64)
_SHIFT_MASKS = np.array(
    [sum(1 << (off // PARTIAL_WIDTH) for off in st.shifts) for st in _PLAN], dtype=np.int64
)


def plan_partials() -> tuple[PlanStep, ...]:
    return _PLAN


def clmul(x: int, y: int) -> int:
    """Carry-less (GF(2)[t]) product of two non-negative ints."""
    c = 0
    i = 0
    while x >> i:
        if (x >> i) & 1:
            c ^= y << i
        i += 1
    return c


def _and_plane_hd(x, y, px, py):
    # row i of the plane is y when x_i is set, else 0
    both = (x & px).bit_count() * (y ^ py).bit_count()
    return both + (x & ~px).bit_count() * y.bit_count() + (px & ~x).bit_count() * py.bit_count()


def partial_multiply(x: int, y: int, prev_x: int = 0, prev_y: int = 0) -> tuple[int, GateActivity]:
    """59x59-bit classical product plus toggle counts against the previous inputs."""
    for v in (x, y, prev_x, prev_y):
        if not 0 <= v < (1 << PARTIAL_WIDTH):
            raise ValueError(f"partial multiplier operand wider than {PARTIAL_WIDTH} bits: {v:#x}")
    p = clmul(x, y)
    prev_p = clmul(prev_x, prev_y)
    activity = GateActivity(
        and_toggles=_and_plane_hd(x, y, prev_x, prev_y),
        xor_toggles=XOR_DEPTH * (p ^ prev_p).bit_count(),
        accumulator_hd=0,
        operand_hd=(x ^ prev_x).bit_count() + (y ^ prev_y).bit_count(),
    )
    return p, activity


def multiply(a: int, b: int, state: MultiplierState | None = None) -> MultiplyResult:
    """One 9-cycle field multiplication, reducing the accumulator every cycle."""
    if not (0 <= a <= MASK and 0 <= b <= MASK):
        raise ValueError("operands must be reduced GF(2^233) elements")
    if state is None:
        state = MultiplierState()
    sa, sb = segment(a), segment(b)
    px, py = state.x, state.y
    prev_acc = state.accumulator
    acc = 0
    activity = []
    for j, step in enumerate(_PLAN):
        x = y = 0
        for k in step.left:
            x ^= sa[k]
        for k in step.right:
            y ^= sb[k]
        p, act = partial_multiply(x, y, px, py)
        for off in step.shifts:
            acc ^= p << off
        acc = reduce(acc)
        activity.append(act._replace(accumulator_hd=(acc ^ prev_acc).bit_count()))
        px, py, prev_acc = x, y, acc
    new_state = MultiplierState(acc, N_STEPS - 1, state.accumulator, px, py)
    return MultiplyResult(acc, tuple(activity), new_state)


# --- batched kernel path ----------------------------------------------------

def to_limbs(values: Sequence[int]) -> np.ndarray:
    buf = b"".join(int(v).to_bytes(32, "little") for v in values)
    return np.frombuffer(buf, dtype="<u8").reshape(-1, 4).astype(np.uint64)


def from_limbs(limbs: np.ndarray) -> list[int]:
    raw = np.ascontiguousarray(limbs, dtype="<u8").tobytes()
    return [int.from_bytes(raw[i : i + 32], "little") for i in range(0, len(raw), 32)]


def multiply_many(
    a: Sequence[int], b: Sequence[int], state: MultiplierState | None = None, *, kernel=None
) -> tuple[list[int], np.ndarray, MultiplierState]:
    """Run ``len(a)`` multiplications back to back on one multiplier.

    Returns ``(products, activity, state)`` where ``activity`` has shape
    ``(N, 9, 4)`` with columns ordered as :class:`GateActivity`.
    """
    if len(a) != len(b):
        raise ValueError("operand sequences differ in length")
    for v in (*a, *b):
        if not 0 <= v <= MASK:
            raise ValueError("operands must be reduced GF(2^233) elements")
    if state is None:
        state = MultiplierState()
    kernel = kernel or _kernels.karatsuba_cycles
    if not len(a):
        return [], np.zeros((0, N_STEPS, 4), dtype=np.int64), state
    prod, act = kernel(
        to_limbs(a), to_limbs(b), _LEFT_MASKS, _SHIFT_MASKS,
        state.x, state.y, to_limbs([state.accumulator])[0],
    )
    products = from_limbs(prod)
    # last cycle operands of the final multiplication
    last = segment(a[-1]), segment(b[-1])
    x = y = 0
    for k in _PLAN[-1].left:
        x ^= last[0][k]
        y ^= last[1][k]
    prev_acc = products[-2] if len(products) > 1 else state.accumulator
    return products, act, MultiplierState(products[-1], N_STEPS - 1, prev_acc, x, y)


assert M == sum(SEG_WIDTHS)
