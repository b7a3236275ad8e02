"""Phenomenological power model for kP executions.

Per clock cycle ``c``::

    p[c] = w_static + w_mult * (and_toggles + xor_toggles) + w_bus * bus_hd
           + w_addr * addr_term[c] + N(0, noise_sigma^2)

``addr_term`` hashes the multiset of register addresses touched in the cycle
to a fixed number in [0, 1).  None of the weights are physical; they only
set how strongly the address-dependent term stands out from the
data-dependent multiplier and bus activity.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .accelerator import KPExecution, signature_hash
from .traces import CompressedTrace, RawTrace

DEFAULT_SAMPLES_PER_CYCLE = 625
# fraction of the clock period carrying the current pulse
PULSE_FRACTION = 0.05
_WEIGHTS = ("w_mult", "w_addr", "w_bus", "w_static", "noise_sigma")


@dataclass(frozen=True)
class LeakageProfile:
    name: str
    w_mult: float
    w_addr: float
    w_bus: float
    w_static: float
    noise_sigma: float = 0.0

    def __post_init__(self):
        for k in _WEIGHTS:
            v = getattr(self, k)
            if not v >= 0:
                raise ValueError(f"{self.name}: {k} must be >= 0, got {v}")

    def scaled(self, c: float) -> LeakageProfile:
        return LeakageProfile(self.name, *(c * getattr(self, k) for k in _WEIGHTS))

    def to_dict(self) -> dict:
        return asdict(self)


def parse_profiles(text: str) -> dict[str, LeakageProfile]:
    """Parse ``[name]`` sections of ``key = value`` weight lines."""
    cp = configparser.ConfigParser()
    cp.read_string(text)
    out = {}
    for name in cp.sections():
        sec = cp[name]
        unknown = set(sec) - set(_WEIGHTS)
        if unknown:
            raise ValueError(f"profile {name!r}: unknown keys {sorted(unknown)}")
        try:
            out[name] = LeakageProfile(name, **{k: sec.getfloat(k, 0.0) for k in _WEIGHTS})
        except ValueError as exc:
            raise ValueError(f"profile {name!r}: {exc}") from exc
    return out


def load_profiles(path) -> dict[str, LeakageProfile]:
    return parse_profiles(Path(path).read_text())


def builtin_profiles() -> list[LeakageProfile]:
    text = resources.files(__package__).joinpath("profiles.ini").read_text()
    return list(parse_profiles(text).values())


def get_profile(name_or_path: str) -> LeakageProfile:
    """Builtin profile by name, or ``path`` / ``path:section`` of a profile file."""
    builtin = {p.name: p for p in builtin_profiles()}
    if name_or_path in builtin:
        return builtin[name_or_path]
    path, _, section = name_or_path.partition(":")
    if not Path(path).is_file():
        raise ValueError(f"unknown profile {name_or_path!r} (builtin: {sorted(builtin)})")
    profiles = load_profiles(path)
    if section:
        if section not in profiles:
            raise ValueError(f"no section [{section}] in {path}")
        return profiles[section]
    if len(profiles) != 1:
        raise ValueError(f"{path} holds {len(profiles)} profiles; use {path}:<name>")
    return next(iter(profiles.values()))


def addr_term(execution: KPExecution) -> np.ndarray:
    return signature_hash(execution.addr_code).astype(np.float64) / 2.0**64


def simulate_power(execution: KPExecution, profile: LeakageProfile, seed: int = 0) -> CompressedTrace:
    act = execution.activity
    values = (
        profile.w_static
        + profile.w_mult * (act[:, 0] + act[:, 1]).astype(np.float64)
        + profile.w_bus * execution.bus_hd.astype(np.float64)
        + profile.w_addr * addr_term(execution)
    )
    if profile.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        values = values + profile.noise_sigma * rng.standard_normal(len(values))
    return CompressedTrace(
        values, execution.slot_offset, execution.num_slots, execution.slot_len, source="simulated"
    )


def pulse_shape(samples_per_cycle: int) -> np.ndarray:
    """Raised-cosine current spike at the start of the cycle, mean square 1."""
    if samples_per_cycle < 1:
        raise ValueError("samples_per_cycle must be >= 1")
    width = max(1, round(PULSE_FRACTION * samples_per_cycle))
    p = np.zeros(samples_per_cycle)
    s = np.arange(width)
    p[:width] = 0.5 * (1.0 - np.cos(2.0 * np.pi * (s + 0.5) / width))
    return p / np.sqrt(np.mean(p * p))


def synthesize_raw(
    trace: CompressedTrace,
    samples_per_cycle: int = DEFAULT_SAMPLES_PER_CYCLE,
    sample_noise_sigma: float = 0.0,
    seed: int = 0,
) -> RawTrace:
    pulse = pulse_shape(samples_per_cycle)
    samples = trace.values[:, None] * pulse[None, :]
    if sample_noise_sigma > 0:
        rng = np.random.default_rng(seed)
        samples = samples + sample_noise_sigma * rng.standard_normal(samples.shape)
    return RawTrace(samples.reshape(-1), samples_per_cycle, *trace.geometry)
