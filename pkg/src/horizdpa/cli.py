"""Command-line front end.

    horizdpa simulate --scalar random --seed 0 --profile noUltra --out t.htrc
    horizdpa attack t.htrc --out report.csv
    horizdpa compare a.csv b.csv --out cmp.csv
    horizdpa export t.htrc --out t.csv

Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from .attack import read_report_csv, run_attack
from .pipeline import RunConfig, parse_scalar, simulate
from .traces import (
    GeometryError,
    RawTrace,
    TraceFileError,
    compress_mean,
    compress_msq,
    encode_trace,
    read_trace,
    write_bytes_atomic,
)

log = logging.getLogger("horizdpa")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def sidecar_path(trace_path) -> Path:
    return Path(f"{trace_path}.json")


def _write_text(path, text: str) -> None:
    write_bytes_atomic(path, text.encode())


def _trace_csv(trace) -> str:
    buf = io.StringIO()
    if isinstance(trace, RawTrace):
        buf.write("sample_index,value\n")
        vals = trace.samples
    else:
        buf.write("cycle_index,value\n")
        vals = trace.values
    for i, v in enumerate(vals):
        buf.write(f"{i},{float(v)!r}\n")
    return buf.getvalue()


def _encode(trace, fmt: str) -> bytes:
    return encode_trace(trace) if fmt == "htrc" else _trace_csv(trace).encode()


# --- simulate -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.config:
        try:
            cfg = RunConfig.load(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad config {args.config}: {exc}") from exc
    else:
        cfg = RunConfig()
    for name in ("scalar", "seed", "scalar_bits", "point", "profile", "samples_per_cycle", "sample_noise"):
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, name, v)
    if cfg.scalar in (None, "redacted") or cfg.seed is None:
        raise UsageError("config has a redacted scalar or seed; pass --scalar/--seed")
    try:
        run = simulate(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    out = Path(args.out)
    meta = run.metadata(redact=args.redact)
    files = {out: _encode(run.trace, args.format)}
    if run.raw is not None:
        raw_out = out.with_name(f"{out.stem}.raw{out.suffix}")
        files[raw_out] = _encode(run.raw, args.format)
        meta["raw_trace"] = raw_out.name
    for path, data in files.items():
        write_bytes_atomic(path, data)
        _write_text(sidecar_path(path), json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if args.events_csv:
        run.execution.write_events_csv(args.events_csv)

    ex = run.execution
    print(f"kP cycles: {ex.num_cycles}  slots: {ex.num_slots} x {ex.slot_len}  offset: {ex.slot_offset}")
    print(f"profile: {run.profile.name}  mean power: {meta['mean_power']:.3f}")
    print(f"wrote {', '.join(str(p) for p in files)}")
    return EXIT_OK


# --- attack -------------------------------------------------------------------

def _load_trace(path):
    try:
        return read_trace(path)
    except FileNotFoundError as exc:
        raise DataError(f"trace file not found: {path}") from exc
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except TraceFileError as exc:
        raise DataError(f"{path}: {type(exc).__name__}: {exc}") from exc


def _key_for(args) -> tuple[int, str]:
    if args.key:
        try:
            return parse_scalar(args.key), "--key"
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    side = Path(args.sidecar) if args.sidecar else sidecar_path(args.trace)
    try:
        meta = json.loads(side.read_text())
    except FileNotFoundError:
        raise DataError(f"missing key: no --key given and no sidecar at {side}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read sidecar {side}: {exc}") from exc
    if "scalar" not in meta:
        raise DataError(f"missing key: sidecar {side} is redacted; pass --key")
    return int(meta["scalar"], 16), str(side)


def cmd_attack(args) -> int:
    trace = _load_trace(args.trace)
    k, key_source = _key_for(args)
    compression = "none"
    if isinstance(trace, RawTrace):
        compression = args.compress
        trace = compress_msq(trace) if args.compress == "msq" else compress_mean(trace)
    provenance = {"trace": str(args.trace), "key_source": key_source, "compression": compression}
    side = sidecar_path(args.trace)
    if side.is_file():
        try:
            meta = json.loads(side.read_text())
            provenance["profile"] = meta.get("profile", {}).get("name")
            provenance["seed"] = meta.get("config", {}).get("seed")
        except (OSError, json.JSONDecodeError, AttributeError):
            pass
    try:
        report = run_attack(trace, k, provenance)
    except (GeometryError, ValueError) as exc:
        raise DataError(f"geometry mismatch: {exc}") from exc
    if args.out:
        _write_text(args.out, report.to_csv())
    print(report.summary())
    return EXIT_OK


# --- compare ------------------------------------------------------------------

def compare_reports(named: list[tuple[str, list]]) -> tuple[str, str]:
    """Return (table CSV, human summary) for reports given as (name, scores)."""
    n = len(named[0][1])
    for name, scores in named:
        if len(scores) != n:
            raise DataError(f"{name} has {len(scores)} candidates, {named[0][0]} has {n}")
    deltas = np.array([[s.delta for s in scores] for _, scores in named])
    buf = io.StringIO()
    buf.write("j," + ",".join(f"delta[{i}]" for i in range(len(named))) + ",spread\n")
    for j in range(n):
        row = deltas[:, j]
        buf.write(f"{named[0][1][j].j}," + ",".join(repr(float(v)) for v in row)
                  + f",{float(row.max() - row.min())!r}\n")
    lines = []
    for i, (name, _) in enumerate(named):
        b = int(np.argmax(deltas[i]))
        lines.append(f"[{i}] {name}: max delta {deltas[i, b]:.2f}% at j={named[i][1][b].j}, "
                     f">=75%: {int(np.sum(deltas[i] >= 75))}")
    for i in range(1, len(named)):
        diff = float(np.max(np.abs(deltas[i] - deltas[0])))
        if np.std(deltas[0]) > 0 and np.std(deltas[i]) > 0:
            corr = f"{float(np.corrcoef(deltas[0], deltas[i])[0, 1]):.3f}"
        else:
            corr = "n/a"
        lines.append(f"[0] vs [{i}]: max |diff| {diff:.2f}, correlation {corr}")
    return buf.getvalue(), "\n".join(lines)


def cmd_compare(args) -> int:
    if len(args.reports) < 2:
        raise UsageError("compare needs at least two reports")
    named = []
    for p in args.reports:
        try:
            named.append((p, read_report_csv(Path(p).read_text())))
        except FileNotFoundError as exc:
            raise DataError(f"report not found: {p}") from exc
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"{p}: {exc}") from exc
    table, summary = compare_reports(named)
    if args.out:
        _write_text(args.out, table)
    print(summary)
    return EXIT_OK


# --- export -------------------------------------------------------------------

def cmd_export(args) -> int:
    trace = _load_trace(args.trace)
    if isinstance(trace, RawTrace) and args.compress != "none":
        trace = compress_msq(trace) if args.compress == "msq" else compress_mean(trace)
    write_bytes_atomic(args.out, _encode(trace, args.format))
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="horizdpa", description="B-233 kP leakage simulation and horizontal DPA")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run kP and write a simulated power trace")
    s.add_argument("--config", help="JSON run config or sidecar of a previous run")
    s.add_argument("--scalar", help="hex scalar or 'random'")
    s.add_argument("--seed", type=int)
    s.add_argument("--scalar-bits", dest="scalar_bits", type=int, help="bit length of a random scalar")
    s.add_argument("--point", help="'G' or 'x_hex,y_hex'")
    s.add_argument("--profile", help="builtin profile name, or profile.ini[:section]")
    s.add_argument("--samples-per-cycle", dest="samples_per_cycle", type=int,
                   help="also write a raw sampled trace")
    s.add_argument("--sample-noise", dest="sample_noise", type=float)
    s.add_argument("--out", default="trace.htrc")
    s.add_argument("--format", choices=("htrc", "csv"), default="htrc")
    s.add_argument("--redact", action="store_true", help="leave the scalar out of the sidecar")
    s.add_argument("--events-csv", help="debug dump of per-cycle hardware events")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("attack", help="comparison-to-the-mean attack on one trace")
    a.add_argument("trace")
    a.add_argument("--key", help="true scalar (hex); default: read from the sidecar")
    a.add_argument("--sidecar")
    a.add_argument("--compress", choices=("msq", "mean"), default="msq",
                   help="compression for raw traces (default: mean of squares)")
    a.add_argument("--out", help="report CSV")
    a.set_defaults(func=cmd_attack)

    c = sub.add_parser("compare", help="tabulate delta per clock cycle across reports")
    c.add_argument("reports", nargs="+")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    e = sub.add_parser("export", help="convert a trace file")
    e.add_argument("trace")
    e.add_argument("--out", required=True)
    e.add_argument("--format", choices=("htrc", "csv"), default="csv")
    e.add_argument("--compress", choices=("none", "msq", "mean"), default="none")
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    log.debug("multiplier kernel backend: %s", _kernels.backend_name())
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"horizdpa: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"horizdpa: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"horizdpa: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
