"""Trace containers, per-cycle compression and the HTRC file format.

HTRC layout (all little-endian)::

    4s   magic  b"HTRC"
    u16  version (1)
    u8   source tag
    u64  cycles
    u64  samples_per_cycle (0 for one value per cycle)
    u64  slot_offset
    u64  num_slots
    u64  slot_len
    f64  payload[cycles * max(samples_per_cycle, 1)]
"""

from __future__ import annotations

import csv
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"HTRC"
VERSION = 1
_HEADER = struct.Struct("<4sHB5Q")
SOURCES = {"simulated": 0, "raw": 1, "raw-mean": 2, "raw-msq": 3}
_SOURCE_NAMES = {v: k for k, v in SOURCES.items()}
DEFAULT_SLOT_LEN = 54


class TraceFileError(Exception):
    """Base class for malformed trace files."""


class BadMagicError(TraceFileError):
    pass


class VersionError(TraceFileError):
    pass


class TruncatedError(TraceFileError):
    pass


class PayloadError(TraceFileError):
    pass


class GeometryError(ValueError):
    pass


def _check_geometry(n_cycles, slot_offset, num_slots, slot_len):
    if min(slot_offset, num_slots, slot_len) < 0:
        raise GeometryError("slot geometry must be non-negative")
    end = slot_offset + num_slots * slot_len
    if end > n_cycles:
        raise GeometryError(
            f"slots end at cycle {end} (offset {slot_offset} + {num_slots} x {slot_len}) "
            f"but the trace has {n_cycles} cycles"
        )


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CompressedTrace:
    """One value per clock cycle plus the slot geometry of the main loop."""

    values: np.ndarray
    slot_offset: int = 0
    num_slots: int = 0
    slot_len: int = DEFAULT_SLOT_LEN
    source: str = "simulated"

    clock_period_ns = 50.0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values).reshape(-1))
        if self.source not in SOURCES:
            raise ValueError(f"unknown source tag {self.source!r}")
        _check_geometry(len(self.values), self.slot_offset, self.num_slots, self.slot_len)

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, CompressedTrace):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self.source == other.source
            and self.values.tobytes() == other.values.tobytes()
        )

    @property
    def geometry(self) -> tuple[int, int, int]:
        return self.slot_offset, self.num_slots, self.slot_len

    def with_values(self, values) -> CompressedTrace:
        return CompressedTrace(values, *self.geometry, source=self.source)


# the simulator's per-cycle output is already a compressed trace
PowerTrace = CompressedTrace


@dataclass(frozen=True, eq=False)
class RawTrace:
    """Oscilloscope-style samples, ``samples_per_cycle`` per clock cycle."""

    samples: np.ndarray
    samples_per_cycle: int = 625
    slot_offset: int = 0
    num_slots: int = 0
    slot_len: int = DEFAULT_SLOT_LEN

    source = "raw"

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(self.samples).reshape(-1))
        if self.samples_per_cycle < 1:
            raise ValueError("samples_per_cycle must be >= 1")
        if len(self.samples) % self.samples_per_cycle:
            raise GeometryError("sample count is not a multiple of samples_per_cycle")
        _check_geometry(self.num_cycles, self.slot_offset, self.num_slots, self.slot_len)

    @property
    def num_cycles(self) -> int:
        return len(self.samples) // self.samples_per_cycle

    @property
    def geometry(self) -> tuple[int, int, int]:
        return self.slot_offset, self.num_slots, self.slot_len

    def by_cycle(self) -> np.ndarray:
        return self.samples.reshape(self.num_cycles, self.samples_per_cycle)

    def __eq__(self, other):
        if not isinstance(other, RawTrace):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self.samples_per_cycle == other.samples_per_cycle
            and self.samples.tobytes() == other.samples.tobytes()
        )


def compress_mean(raw: RawTrace) -> CompressedTrace:
    return CompressedTrace(raw.by_cycle().mean(axis=1), *raw.geometry, source="raw-mean")


def compress_msq(raw: RawTrace) -> CompressedTrace:
    """Mean of squared samples per clock cycle."""
    s = raw.by_cycle()
    return CompressedTrace(np.mean(s * s, axis=1), *raw.geometry, source="raw-msq")


# --- files ------------------------------------------------------------------

def write_bytes_atomic(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_trace(trace: CompressedTrace | RawTrace) -> bytes:
    if isinstance(trace, RawTrace):
        payload, cycles, spc = trace.samples, trace.num_cycles, trace.samples_per_cycle
    else:
        payload, cycles, spc = trace.values, len(trace.values), 0
    if np.isnan(payload).any():
        raise PayloadError("refusing to write NaN samples")
    header = _HEADER.pack(MAGIC, VERSION, SOURCES[trace.source], cycles, spc, *trace.geometry)
    return header + payload.astype("<f8").tobytes()


def decode_trace(data: bytes) -> CompressedTrace | RawTrace:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError(f"not an HTRC file (magic {data[:4]!r})")
    if len(data) < _HEADER.size:
        raise TruncatedError(f"header needs {_HEADER.size} bytes, got {len(data)}")
    _, version, tag, cycles, spc, offset, nslots, slot_len = _HEADER.unpack_from(data)
    if version != VERSION:
        raise VersionError(f"HTRC version {version} not supported (expected {VERSION})")
    if tag not in _SOURCE_NAMES:
        raise PayloadError(f"unknown source tag {tag}")
    n = cycles * max(spc, 1)
    need = _HEADER.size + 8 * n
    if len(data) < need:
        raise TruncatedError(f"payload needs {need} bytes, file has {len(data)}")
    if len(data) > need:
        raise PayloadError(f"{len(data) - need} trailing bytes after payload")
    payload = np.frombuffer(data, dtype="<f8", count=n, offset=_HEADER.size).astype(np.float64)
    if np.isnan(payload).any():
        raise PayloadError("payload contains NaN")
    try:
        if spc:
            return RawTrace(payload, spc, offset, nslots, slot_len)
        return CompressedTrace(payload, offset, nslots, slot_len, source=_SOURCE_NAMES[tag])
    except (GeometryError, ValueError) as exc:
        raise PayloadError(str(exc)) from exc


def write_trace(path, trace: CompressedTrace | RawTrace) -> None:
    write_bytes_atomic(path, encode_trace(trace))


def read_trace(path) -> CompressedTrace | RawTrace:
    with open(path, "rb") as fh:
        return decode_trace(fh.read())


def write_csv(path, trace: CompressedTrace) -> None:
    """Export (cycle_index, value) rows for plotting; not a storage format."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    with os.fdopen(fd, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cycle_index", "value"])
        for i, v in enumerate(trace.values):
            w.writerow([i, repr(float(v))])
    os.replace(tmp, path)
