"""B-233 kP accelerator model, power-leakage simulator and horizontal DPA."""

from .accelerator import KPExecution, run_kp
from .attack import AttackReport, run_attack
from .field import CURVE, G, AffinePoint, kp_oracle
from .power import LeakageProfile, builtin_profiles, simulate_power, synthesize_raw
from .traces import CompressedTrace, RawTrace, compress_mean, compress_msq, read_trace, write_trace

__all__ = [
    "AffinePoint", "AttackReport", "CURVE", "CompressedTrace", "G", "KPExecution",
    "LeakageProfile", "RawTrace", "builtin_profiles", "compress_mean", "compress_msq",
    "kp_oracle", "read_trace", "run_attack", "run_kp", "simulate_power", "synthesize_raw",
    "write_trace",
]
