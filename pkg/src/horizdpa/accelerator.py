"""Cycle-accurate Montgomery-ladder kP engine for B-233.

The engine is a small register machine.  Every clock cycle executes at most
one micro-op (load, square, add-then-square, multiplier latch, multiplier
write-back) while the field multiplier runs its own 9-cycle schedule.  A
main-loop iteration ("slot") is six multiplications, 54 cycles:

    M1  T1 = AX * DZ           | c1  T3 = DX^2   c2  T4 = DZ^2
    M2  T2 = DX * AZ           |
    M3  T1 = T1 * T2           | c19 AZ = (T1 + T2)^2
    M4  AX = XP * AZ + T1      | c28 T5 = T3^2   c29 T6 = T4^2
    M5  DZ = T3 * T4           |
    M6  DX = BC * T6 + T5      |

(AX, AZ) is the pair receiving the differential addition and (DX, DZ) the
pair being doubled.  Key bit 1 maps them to (X1, Z1) and (X2, Z2); key bit
0 swaps the two.  The two schedules therefore differ only in register
addresses, which is the leakage a horizontal address-bit attack targets.

The ladder products are computed on the fly with :func:`field.mul`; the
recorded operand stream is then replayed through the Karatsuba multiplier
kernel to obtain per-cycle gate activity, and the two product streams are
checked against each other.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import field
from .field import AffinePoint, INFINITY, is_on_curve, mul, square
from .multiplier import N_STEPS, GateActivity, multiply_many

SLOT_LEN = 54
MULTS_PER_SLOT = 6

REGISTERS = {
    "X1": 0, "Z1": 1, "X2": 2, "Z2": 3,
    "T1": 4, "T2": 5, "T3": 6, "T4": 7, "T5": 8, "T6": 9, "T7": 10, "T8": 11,
    "XP": 12, "YP": 13, "BC": 14,
}
REGISTER_NAMES = {v: k for k, v in REGISTERS.items()}
_ADDR_BITS = 5
_MAX_SIG = 12


class MicroOp(NamedTuple):
    kind: str  # load | mov | sqr | addsqr | add | mul | wb
    dst: int | None
    srcs: tuple[int, ...] = ()
    const: str | None = None  # for load: "x", "y", "b", "one"


class ScheduleEntry(NamedTuple):
    cycle_in_slot: int | None
    multiplier_step: tuple[int, int] | None  # (multiplication index, cycle 0..8)
    reads: tuple[int, ...]
    writes: tuple[int, ...]
    op: MicroOp | None

    @property
    def bus_words(self) -> tuple[int, ...]:
        return self.reads + self.writes

    @property
    def addr_signature(self) -> tuple[int, ...]:
        return tuple(sorted(self.reads + self.writes))


class HardwareEvent(NamedTuple):
    global_cycle: int
    slot_index: int | None
    key_bit: int | None
    mult_activity: GateActivity
    addr_signature: tuple[int, ...]
    bus_hd: int


class LadderState(NamedTuple):
    """Projective ladder state: (X1:Z1) = kP, (X2:Z2) = (k+1)P, plus P."""

    X1: int
    Z1: int
    X2: int
    Z2: int
    x: int
    y: int


def _entry(op: MicroOp | None, cycle=None, mstep=None) -> ScheduleEntry:
    if op is None:
        return ScheduleEntry(cycle, mstep, (), (), None)
    reads = op.srcs
    writes = (op.dst,) if op.dst is not None and op.kind != "mul" else ()
    return ScheduleEntry(cycle, mstep, reads, writes, op)


@lru_cache(maxsize=2)
def schedule_slot(key_bit: int) -> tuple[ScheduleEntry, ...]:
    if key_bit not in (0, 1):
        raise ValueError("key bit must be 0 or 1")
    R = REGISTERS
    if key_bit:
        ax, az, dx, dz = R["X1"], R["Z1"], R["X2"], R["Z2"]
    else:
        ax, az, dx, dz = R["X2"], R["Z2"], R["X1"], R["Z1"]
    t1, t2, t3, t4, t5, t6 = (R[f"T{i}"] for i in range(1, 7))
    mults = [
        ((ax, dz), MicroOp("wb", t1)),
        ((dx, az), MicroOp("wb", t2)),
        ((t1, t2), MicroOp("wb", t1)),
        ((R["XP"], az), MicroOp("wb", ax, (t1,))),
        ((t3, t4), MicroOp("wb", dz)),
        ((R["BC"], t6), MicroOp("wb", dx, (t5,))),
    ]
    parallel = {
        1: MicroOp("sqr", t3, (dx,)),
        2: MicroOp("sqr", t4, (dz,)),
        19: MicroOp("addsqr", az, (t1, t2)),
        28: MicroOp("sqr", t5, (t3,)),
        29: MicroOp("sqr", t6, (t4,)),
    }
    entries = []
    for c in range(SLOT_LEN):
        m, s = divmod(c, N_STEPS)
        if s == 0:
            op = MicroOp("mul", None, mults[m][0])
        elif s == N_STEPS - 1:
            op = mults[m][1]
        else:
            op = parallel.get(c)
        entries.append(_entry(op, c, (m, s)))
    return tuple(entries)


def _preamble_program() -> list[ScheduleEntry]:
    R = REGISTERS
    ops = [
        MicroOp("load", R["XP"], const="x"),
        MicroOp("load", R["YP"], const="y"),
        MicroOp("load", R["BC"], const="b"),
        MicroOp("mov", R["X1"], (R["XP"],)),
        MicroOp("load", R["Z1"], const="one"),
        MicroOp("sqr", R["Z2"], (R["XP"],)),
        MicroOp("sqr", R["T1"], (R["Z2"],)),
        MicroOp("add", R["X2"], (R["T1"], R["BC"])),
    ]
    return [_entry(op) for op in ops]


def _mul_block(a: int, b: int, dst: int, mac: tuple[int, ...] = ()) -> list[ScheduleEntry]:
    out = [_entry(MicroOp("mul", None, (a, b)), None, (0, 0))]
    out += [_entry(None, None, (0, s)) for s in range(1, N_STEPS - 1)]
    out.append(_entry(MicroOp("wb", dst, mac), None, (0, N_STEPS - 1)))
    return out


@lru_cache(maxsize=1)
def _postamble_program() -> tuple[ScheduleEntry, ...]:
    """y-recovery (López-Dahab) with one Itoh-Tsujii inversion."""
    R = REGISTERS
    X1, Z1, X2, Z2, XP, YP = R["X1"], R["Z1"], R["X2"], R["Z2"], R["XP"], R["YP"]
    T1, T2, T3, T4, T5, T6, T7, T8 = (R[f"T{i}"] for i in range(1, 9))
    prog: list[ScheduleEntry] = []
    M = _mul_block
    op = lambda *a, **k: prog.append(_entry(MicroOp(*a, **k)))  # noqa: E731

    prog += M(Z1, Z2, T1)            # Z1 Z2
    prog += M(XP, T1, T2)            # D = x Z1 Z2
    prog += M(XP, Z1, T3, (X1,))     # X1 + x Z1
    prog += M(XP, Z2, T8)            # x Z2
    op("add", T4, (T8, X2))          # X2 + x Z2
    prog += M(T3, T4, T3)
    op("sqr", T5, (XP,))
    op("add", T5, (T5, YP))          # x^2 + y
    prog += M(T5, T1, T5)
    op("add", T3, (T3, T5))          # F
    # T6 = D^(2^k - 1) along the addition chain 1,2,3,6,7,14,28,29,58,116,232
    op("mov", T6, (T2,))
    for j, use_first in ((1, True), (1, True), (3, False), (1, True), (7, False),
                         (14, False), (1, True), (29, False), (58, False), (116, False)):
        op("sqr", T7, (T6,))
        for _ in range(j - 1):
            op("sqr", T7, (T7,))
        prog += M(T7, T2 if use_first else T6, T6)
    op("sqr", T6, (T6,))             # D^-1
    prog += M(T8, T6, T4)            # 1 / Z1
    prog += M(X1, T4, T4)            # x3
    op("add", T5, (T4, XP))
    prog += M(T5, T3, T5)
    prog += M(T5, T6, T5, (YP,))     # y3
    return tuple(prog)


def signature_code(sig: tuple[int, ...]) -> int:
    if len(sig) > _MAX_SIG:
        raise ValueError("address signature too long")
    code = 0
    for i, a in enumerate(sorted(sig)):
        code |= (a + 1) << (_ADDR_BITS * i)
    return code


def signature_from_code(code: int) -> tuple[int, ...]:
    out = []
    while code:
        out.append((code & ((1 << _ADDR_BITS) - 1)) - 1)
        code >>= _ADDR_BITS
    return tuple(out)


def signature_hash(codes) -> np.ndarray:
    """splitmix64 finaliser over packed address signatures (uint64 out)."""
    z = np.asarray(codes, dtype=np.uint64) + np.uint64(0x9E3779B97F4A7C15)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class KPExecution:
    result: AffinePoint
    num_slots: int
    slot_offset: int
    bit_length: int
    slot_index: np.ndarray  # int32, -1 outside the main loop
    key_bit: np.ndarray  # int8, -1 where no key bit is being processed
    activity: np.ndarray  # (cycles, 4) int64, GateActivity columns
    bus_hd: np.ndarray  # int64
    addr_code: np.ndarray  # int64 packed address multiset
    ladder_states: tuple[tuple[int, int, int, int], ...] = dc_field(default=(), repr=False)
    slot_len: int = SLOT_LEN

    @property
    def num_cycles(self) -> int:
        return len(self.bus_hd)

    def __len__(self):
        return self.num_cycles

    def event(self, c: int) -> HardwareEvent:
        si = int(self.slot_index[c])
        kb = int(self.key_bit[c])
        return HardwareEvent(
            c,
            None if si < 0 else si,
            None if kb < 0 else kb,
            GateActivity(*(int(v) for v in self.activity[c])),
            signature_from_code(int(self.addr_code[c])),
            int(self.bus_hd[c]),
        )

    @property
    def events(self) -> list[HardwareEvent]:
        return [self.event(c) for c in range(self.num_cycles)]

    def write_events_csv(self, path) -> None:
        hashes = signature_hash(self.addr_code)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cycle", "slot", "key_bit", "addr_hash", "accumulator_hd", "bus_hd"])
            for c in range(self.num_cycles):
                si, kb = int(self.slot_index[c]), int(self.key_bit[c])
                w.writerow([
                    c, "" if si < 0 else si, "" if kb < 0 else kb,
                    f"{int(hashes[c]):016x}", int(self.activity[c, 2]), int(self.bus_hd[c]),
                ])


class _Machine:
    """Register file plus bus; executes micro-ops and logs per-cycle data."""

    def __init__(self, x: int, y: int, regs=None):
        self.consts = {"x": x, "y": y, "b": field.CURVE.b, "one": 1}
        self.regs = list(regs) if regs is not None else [0] * len(REGISTERS)
        self.bus = 0
        self.pending = 0
        self.mult_a: list[int] = []
        self.mult_b: list[int] = []
        self.mult_p: list[int] = []
        self.mult_cycle: list[int] = []
        self.bus_hd: list[int] = []
        self.addr_code: list[int] = []

    def _move(self, value: int) -> int:
        hd = (value ^ self.bus).bit_count()
        self.bus = value
        return hd

    def step(self, e: ScheduleEntry) -> None:
        regs = self.regs
        hd = 0
        for a in e.reads:
            hd += self._move(regs[a])
        op = e.op
        if op is not None:
            k = op.kind
            if k == "mul":
                a, b = regs[op.srcs[0]], regs[op.srcs[1]]
                self.mult_a.append(a)
                self.mult_b.append(b)
                self.mult_cycle.append(len(self.bus_hd))
                self.pending = mul(a, b)
                self.mult_p.append(self.pending)
            else:
                if k == "wb":
                    v = self.pending
                    for s in op.srcs:
                        v ^= regs[s]
                elif k == "sqr":
                    v = square(regs[op.srcs[0]])
                elif k == "addsqr":
                    v = square(regs[op.srcs[0]] ^ regs[op.srcs[1]])
                elif k == "add":
                    v = regs[op.srcs[0]] ^ regs[op.srcs[1]]
                elif k == "mov":
                    v = regs[op.srcs[0]]
                elif k == "load":
                    v = self.consts[op.const]
                else:
                    raise AssertionError(k)
                regs[op.dst] = v
                hd += self._move(v)
        self.bus_hd.append(hd)
        self.addr_code.append(signature_code(e.addr_signature))

    def run(self, program) -> None:
        for e in program:
            self.step(e)

    def ladder(self) -> tuple[int, int, int, int]:
        R = REGISTERS
        return (self.regs[R["X1"]], self.regs[R["Z1"]], self.regs[R["X2"]], self.regs[R["Z2"]])


def _select_result(m: _Machine, x: int, y: int) -> AffinePoint:
    R = REGISTERS
    Z1, Z2 = m.regs[R["Z1"]], m.regs[R["Z2"]]
    if Z1 == 0:
        return INFINITY
    if Z2 == 0:
        # (k+1)P at infinity, so kP = -P
        return AffinePoint(x, x ^ y)
    return AffinePoint(m.regs[R["T4"]], m.regs[R["T5"]])


def finalize(state: LadderState) -> AffinePoint:
    """Convert a ladder state to the affine point (X1:Z1), recovering y."""
    m = _Machine(state.x, state.y)
    R = REGISTERS
    for name, v in zip(("X1", "Z1", "X2", "Z2", "XP", "YP", "BC"),
                       (state.X1, state.Z1, state.X2, state.Z2, state.x, state.y, field.CURVE.b)):
        m.regs[R[name]] = v
    m.run(_postamble_program())
    return _select_result(m, state.x, state.y)


def run_kp(k: int, P: AffinePoint = field.G, *, record_states: bool = False) -> KPExecution:
    if not 1 <= k < field.CURVE.r:
        raise ValueError(f"scalar out of range [1, r): {k:#x}")
    if P.infinity or not is_on_curve(P):
        raise ValueError("P must be a finite point on B-233")
    if P.x == 0:
        raise ValueError("P has order 2; not supported by the x-only ladder")
    bl = k.bit_length()
    num_slots = max(bl - 2, 0)

    m = _Machine(P.x, P.y)
    slot_idx: list[int] = []
    key_bits: list[int] = []
    pre = _preamble_program()
    m.run(pre)
    slot_idx += [-1] * len(pre)
    key_bits += [-1] * len(pre)
    if bl >= 2:
        # the top bit is implicit in the initial state; bit l-2 runs here
        b = (k >> (bl - 2)) & 1
        m.run(schedule_slot(b))
        slot_idx += [-1] * SLOT_LEN
        key_bits += [b] * SLOT_LEN
    slot_offset = len(slot_idx)
    states = [m.ladder()] if record_states else []
    for i in range(num_slots):
        b = (k >> (bl - 3 - i)) & 1
        m.run(schedule_slot(b))
        slot_idx += [i] * SLOT_LEN
        key_bits += [b] * SLOT_LEN
        if record_states:
            states.append(m.ladder())
    post = _postamble_program()
    m.run(post)
    slot_idx += [-1] * len(post)
    key_bits += [-1] * len(post)
    result = _select_result(m, P.x, P.y)

    n = len(m.bus_hd)
    products, act, _ = multiply_many(m.mult_a, m.mult_b)
    if products != m.mult_p:
        raise RuntimeError("Karatsuba multiplier disagrees with the field product")
    activity = np.zeros((n, 4), dtype=np.int64)
    starts = np.asarray(m.mult_cycle, dtype=np.int64)
    for s in range(N_STEPS):
        activity[starts + s] = act[:, s, :]

    return KPExecution(
        result=result,
        num_slots=num_slots,
        slot_offset=slot_offset,
        bit_length=bl,
        slot_index=np.asarray(slot_idx, dtype=np.int32),
        key_bit=np.asarray(key_bits, dtype=np.int8),
        activity=activity,
        bus_hd=np.asarray(m.bus_hd, dtype=np.int64),
        addr_code=np.asarray(m.addr_code, dtype=np.int64),
        ladder_states=tuple(states),
    )
