"""Single-trace horizontal DPA by comparison to the mean.

The compressed trace is cut into slots (one per processed key bit), the mean
slot is taken over all slots, and for every clock position ``j`` a key
candidate is read off by comparing each slot against the mean:
bit = 1 iff mean[j] >= slot[j].  Candidates are scored against the true
scalar as the percentage of matching bits, folded into [50, 100].

Slot ``i`` corresponds to key bit ``k_{l-3-i}`` (the ladder runs MSB first).
Clock positions are reported 1-based.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .traces import CompressedTrace, GeometryError

HIST_EDGES = tuple(range(50, 101, 5))


@dataclass(frozen=True)
class CandidateScore:
    j: int
    delta_raw: float
    delta: float
    polarity: str  # "direct" if the >= rule fits, "inverted" if its complement does
    matches: int = 0
    n_bits: int = 0


@dataclass(frozen=True)
class AttackReport:
    scores: tuple[CandidateScore, ...]
    provenance: dict = field(default_factory=dict)

    @property
    def best(self) -> CandidateScore:
        return max(self.scores, key=lambda s: (s.delta, -s.j))

    @property
    def deltas(self) -> np.ndarray:
        return np.array([s.delta for s in self.scores])

    def histogram(self) -> tuple[np.ndarray, np.ndarray]:
        return np.histogram(self.deltas, bins=np.array(HIST_EDGES, dtype=float))

    def count_at_least(self, threshold: float) -> int:
        return int(np.sum(self.deltas >= threshold))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "delta_raw", "delta", "polarity"])
        for s in self.scores:
            w.writerow([s.j, repr(s.delta_raw), repr(s.delta), s.polarity])
        return buf.getvalue()

    def summary(self) -> str:
        lines = []
        for k, v in self.provenance.items():
            lines.append(f"{k}: {v}")
        b = self.best
        lines.append(f"candidates: {len(self.scores)}")
        lines.append(f"best: j={b.j} delta={b.delta:.2f}% ({b.polarity})")
        for t in (90, 75, 70):
            lines.append(f"candidates with delta >= {t}%: {self.count_at_least(t)}")
        lines.append("correctness per clock cycle:")
        for s in self.scores:
            bar = "#" * int(round((s.delta - 50) / 2))
            lines.append(f"  j={s.j:3d}  {s.delta:6.2f}%  {bar}")
        return "\n".join(lines)


def fragment(trace: CompressedTrace) -> np.ndarray:
    """Slot matrix of shape (num_slots, slot_len); row i, column j-1 is v_i^j."""
    off, n, L = trace.slot_offset, trace.num_slots, trace.slot_len
    end = off + n * L
    if end > len(trace.values):
        raise GeometryError(f"slot_offset {off} + {n} slots x {L} = {end} > trace length {len(trace.values)}")
    return trace.values[off:end].reshape(n, L)


def mean_slot(m: np.ndarray) -> np.ndarray:
    """Column means, summed slot by slot in order."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0:
        raise ValueError("mean_slot needs at least one slot")
    acc = m[0].copy()
    for row in m[1:]:
        acc += row
    # rounding can push the quotient outside the column range; the true
    # mean cannot leave it, and a constant column must give back its value
    return np.clip(acc / m.shape[0], m.min(axis=0), m.max(axis=0))


def extract_candidates(m: np.ndarray, mean: np.ndarray) -> np.ndarray:
    """Candidate bits, shape (slot_len, num_slots): row j-1 is candidate j."""
    m = np.asarray(m)
    mean = np.asarray(mean)
    if m.ndim != 2 or mean.shape != (m.shape[1],):
        raise ValueError(f"shape mismatch: slots {m.shape}, mean {mean.shape}")
    return (mean[None, :] >= m).T.astype(np.uint8)


def key_bits(true_k: int, bit_length: int | None = None) -> np.ndarray:
    """Bits k_{l-3}, ..., k_0 in slot order."""
    l = bit_length if bit_length is not None else true_k.bit_length()
    return np.array([(true_k >> i) & 1 for i in range(l - 3, -1, -1)], dtype=np.uint8)


def score(candidate: Sequence[int], true_k: int, bit_length: int | None = None, j: int = 0) -> CandidateScore:
    l = bit_length if bit_length is not None else true_k.bit_length()
    truth = key_bits(true_k, l)
    cand = np.asarray(candidate, dtype=np.uint8)
    if cand.shape != truth.shape:
        raise ValueError(f"candidate has {cand.size} bits, expected l-2 = {truth.size}")
    if truth.size == 0:
        raise ValueError("scalar too short to score (needs bit length >= 3)")
    n = int(truth.size)
    matches = int(np.sum(cand == truth))
    raw = Fraction(100 * matches, n)
    folded = 50 + abs(50 - raw)
    return CandidateScore(
        j=j,
        delta_raw=float(raw),
        delta=float(folded),
        polarity="direct" if raw >= 50 else "inverted",
        matches=matches,
        n_bits=n,
    )


def recover_candidates(trace: CompressedTrace) -> np.ndarray:
    m = fragment(trace)
    return extract_candidates(m, mean_slot(m))


def run_attack(trace: CompressedTrace, true_k: int, provenance: dict | None = None) -> AttackReport:
    l = true_k.bit_length()
    if trace.num_slots != l - 2:
        raise GeometryError(
            f"trace has {trace.num_slots} slots but the scalar has bit length {l} (expects {l - 2})"
        )
    cands = recover_candidates(trace)
    scores = tuple(score(c, true_k, l, j=j + 1) for j, c in enumerate(cands))
    return AttackReport(scores, dict(provenance or {}))


def read_report_csv(text: str) -> list[CandidateScore]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or set(rows[0]) != {"j", "delta_raw", "delta", "polarity"}:
        raise ValueError("not an attack report CSV (expected columns j, delta_raw, delta, polarity)")
    return [
        CandidateScore(int(r["j"]), float(r["delta_raw"]), float(r["delta"]), r["polarity"]) for r in rows
    ]
