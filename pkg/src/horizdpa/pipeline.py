"""Run configuration and the simulate step shared by the CLI and tests."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, fields

from . import field
from .accelerator import KPExecution, run_kp
from .power import LeakageProfile, get_profile, simulate_power, synthesize_raw
from .traces import CompressedTrace, RawTrace

DEFAULT_SCALAR_BITS = 232


def random_scalar(seed: int, bits: int = DEFAULT_SCALAR_BITS) -> int:
    """Uniform scalar of exactly ``bits`` bits (top bit set)."""
    if not 3 <= bits <= field.CURVE.r.bit_length() - 1:
        raise ValueError(f"scalar bit length must be in [3, {field.CURVE.r.bit_length() - 1}]")
    return random.Random(seed).getrandbits(bits - 1) | (1 << (bits - 1))


def parse_scalar(text: str) -> int:
    t = text.strip().lower()
    if t.startswith("0x"):
        t = t[2:]
    try:
        return int(t, 16)
    except ValueError:
        raise ValueError(f"scalar must be hex or 'random', got {text!r}") from None


def parse_point(text: str | None) -> field.AffinePoint:
    if text is None or text.strip().upper() == "G":
        return field.G
    try:
        xs, ys = text.split(",")
        P = field.AffinePoint(int(xs, 16), int(ys, 16))
    except ValueError:
        raise ValueError(f"point must be 'G' or 'x_hex,y_hex', got {text!r}") from None
    if not field.is_on_curve(P):
        raise ValueError("point is not on B-233")
    return P


@dataclass
class RunConfig:
    scalar: str = "random"
    seed: int = 0
    scalar_bits: int = DEFAULT_SCALAR_BITS
    point: str = "G"
    profile: str = "noUltra"
    samples_per_cycle: int | None = None
    sample_noise: float = 0.0

    def resolve_scalar(self) -> int:
        if self.scalar == "random":
            return random_scalar(self.seed, self.scalar_bits)
        return parse_scalar(self.scalar)

    def resolve_point(self) -> field.AffinePoint:
        return parse_point(self.point)

    def resolve_profile(self) -> LeakageProfile:
        return get_profile(self.profile)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> RunConfig:
        with open(path) as fh:
            d = json.load(fh)
        return cls.from_json(d.get("config", d))


@dataclass
class SimulationRun:
    config: RunConfig
    scalar: int
    profile: LeakageProfile
    execution: KPExecution
    trace: CompressedTrace
    raw: RawTrace | None

    def metadata(self, redact: bool = False) -> dict:
        ex = self.execution
        meta = {
            "config": self.config.to_json(),
            "profile": self.profile.to_dict(),
            "bit_length": ex.bit_length,
            "num_cycles": ex.num_cycles,
            "slot_offset": ex.slot_offset,
            "num_slots": ex.num_slots,
            "slot_len": ex.slot_len,
            "mean_power": float(self.trace.values.mean()),
            "result": {"x": field.to_hex(ex.result.x), "y": field.to_hex(ex.result.y)}
            if not ex.result.infinity else "infinity",
        }
        if redact:
            # a random scalar is derivable from the seed, so drop both
            meta["config"]["scalar"] = "redacted"
            meta["config"]["seed"] = None
        else:
            meta["scalar"] = format(self.scalar, "x")
        return meta


def simulate(config: RunConfig) -> SimulationRun:
    k = config.resolve_scalar()
    P = config.resolve_point()
    profile = config.resolve_profile()
    execution = run_kp(k, P)
    trace = simulate_power(execution, profile, config.seed)
    raw = None
    if config.samples_per_cycle:
        raw = synthesize_raw(trace, config.samples_per_cycle, config.sample_noise, config.seed)
    return SimulationRun(config, k, profile, execution, trace, raw)
