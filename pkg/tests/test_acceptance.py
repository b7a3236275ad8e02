"""Exit criteria.  Each test records a one-line detail shown in the summary."""

import random
import time

import numpy as np
import pytest

from horizdpa import field
from horizdpa.accelerator import run_kp
from horizdpa.attack import extract_candidates, fragment, key_bits, mean_slot, run_attack, score
from horizdpa.multiplier import multiply, multiply_many
from horizdpa.pipeline import RunConfig, random_scalar, simulate
from horizdpa.power import get_profile, simulate_power, synthesize_raw
from horizdpa.traces import (
    CompressedTrace,
    PayloadError,
    RawTrace,
    compress_mean,
    compress_msq,
    decode_trace,
    encode_trace,
)

pytestmark = pytest.mark.slow

NULL_SEEDS = 100
SAMPLE_SIGMA = 7000.0  # per-sample noise for the compression comparison


@pytest.mark.acceptance("1", "multiplier equivalence")
def test_multiplier_equivalence(record_property):
    t0 = time.perf_counter()
    rnd = random.Random(1)
    a = [rnd.getrandbits(233) for _ in range(10_000)]
    b = [rnd.getrandbits(233) for _ in range(10_000)]
    prods, _, _ = multiply_many(a, b)
    assert prods == [field.mul_schoolbook(x, y) for x, y in zip(a, b)]
    for x, y in zip(a[:500], b[:500]):
        assert multiply(x, y).product == field.mul_schoolbook(x, y)
    small = [(x, y) for x in range(256) for y in range(256)]
    prods, _, _ = multiply_many([p[0] for p in small], [p[1] for p in small])
    assert prods == [field.mul_schoolbook(x, y) for x, y in small]
    dt = time.perf_counter() - t0
    record_property("detail", f"10000 random + 65536 exhaustive pairs exact, {dt:.1f} s")
    assert dt < 60


@pytest.mark.acceptance("2", "kP correctness")
def test_kp_correctness(record_property):
    t0 = time.perf_counter()
    rnd = random.Random(2)
    for _ in range(100):
        k = rnd.getrandbits(231) | (1 << 231)
        assert run_kp(k, field.G).result == field.kp_oracle(k, field.G)
    dt = time.perf_counter() - t0
    record_property("detail", f"100 random 232-bit scalars exact, {dt:.1f} s")
    assert dt < 600


@pytest.mark.acceptance("3", "slot geometry")
def test_slot_geometry(execution0, record_property):
    ex = execution0
    inside = ex.slot_index[ex.slot_index >= 0]
    counts = np.bincount(inside)
    record_property("detail", f"{ex.num_slots} slots x {set(counts.tolist())} events, {ex.num_cycles} cycles")
    assert ex.bit_length == 232
    assert ex.num_slots == 230 and len(counts) == 230
    assert (counts == 54).all()
    assert 12_420 <= ex.num_cycles <= 14_000


@pytest.mark.acceptance("4", "correctness metric unit suite")
def test_correctness_metric(record_property):
    k = random_scalar(4)
    truth = key_bits(k)
    perfect = score(truth, k)
    comp = score(1 - truth, k)
    half = truth.copy()
    half[::2] ^= 1
    h = score(half, k)
    record_property("detail", f"perfect {perfect.delta}, complement {comp.delta} (raw {comp.delta_raw}), half {h.delta}")
    assert perfect.delta_raw == 100.0 and perfect.delta == 100.0
    assert comp.delta_raw == 0.0 and comp.delta == 100.0
    assert h.delta_raw == 50.0 and h.delta == 50.0
    # exact arithmetic: 1 of 230 wrong is 100 * 229 / 230 to the last bit
    one_off = truth.copy()
    one_off[0] ^= 1
    assert score(one_off, k).delta_raw == float(100 * 229 / 230)
    with pytest.raises(ValueError):
        score(truth[1:], k)


@pytest.mark.acceptance("5", "mean-of-squares closure")
def test_msq_closure(execution0, record_property):
    t = simulate_power(execution0, get_profile("noUltra"))
    worst = 0.0
    for spc in (2, 125, 625):
        back = compress_msq(synthesize_raw(t, spc, 0.0)).values
        rel = np.max(np.abs(back - t.values**2) / t.values**2)
        worst = max(worst, rel)
    record_property("detail", f"max relative error {worst:.2e} over spc 2/125/625")
    assert worst <= 1e-9


def _max_and_counts(trace, k):
    r = run_attack(trace, k)
    return r.best.delta, r.count_at_least(75), r.count_at_least(70)


@pytest.mark.acceptance("6", "leakage contrast between profiles")
def test_leakage_contrast(execution0, scalar0, record_property):
    nu_p, u_p = get_profile("noUltra"), get_profile("ultra")
    nu = _max_and_counts(simulate_power(execution0, nu_p, 0), scalar0)
    u = _max_and_counts(simulate_power(execution0, u_p, 0), scalar0)
    wins = 0
    gaps = []
    for seed in range(1, 21):
        k = random_scalar(seed)
        ex = run_kp(k)
        a = _max_and_counts(simulate_power(ex, nu_p, seed), k)
        b = _max_and_counts(simulate_power(ex, u_p, seed), k)
        wins += a[0] > b[0] and a[1] >= b[1]
        gaps.append(a[0] - b[0])
    record_property(
        "detail",
        f"seed 0: noUltra max {nu[0]:.1f} (>=75: {nu[1]}), ultra max {u[0]:.1f} (>=70: {u[2]}); "
        f"ordering {wins}/20, min gap {min(gaps):.1f}",
    )
    assert nu[0] >= 90 and nu[1] >= 5
    assert u[0] <= 75 and u[2] <= 3
    assert wins == 20


def _balanced_key(rnd, bits=232):
    n = bits - 2
    body = [1] * (n // 2) + [0] * (n - n // 2)
    rnd.shuffle(body)
    k = (1 << (bits - 1)) | (rnd.getrandbits(1) << (bits - 2))
    for i, b in enumerate(body):
        k |= b << (n - 1 - i)
    return k


@pytest.mark.acceptance("7", "null attack on pure noise")
def test_null_attack(record_property):
    deltas = []
    for seed in range(NULL_SEEDS):
        rnd = random.Random(seed)
        k = _balanced_key(rnd)
        assert int(key_bits(k).sum()) == 115
        noise = np.random.default_rng(seed).standard_normal(62 + 230 * 54 + 100)
        r = run_attack(CompressedTrace(noise, 62, 230, 54), k)
        deltas.extend(r.deltas)
    m = float(np.mean(deltas))
    record_property("detail", f"mean delta {m:.2f} over {NULL_SEEDS} seeds x 54 candidates")
    assert 47 <= m <= 53


@pytest.mark.acceptance("8", "mean-of-squares compression beats mean under sample noise")
def test_noise_robustness(execution0, scalar0, record_property):
    t = simulate_power(execution0, get_profile("noUltra"))
    rows = []
    for seed in range(10):
        raw = synthesize_raw(t, 625, SAMPLE_SIGMA, seed)
        m = run_attack(compress_mean(raw), scalar0).best.delta
        q = run_attack(compress_msq(raw), scalar0).best.delta
        rows.append((m, q))
    ok = sum(m <= 65 and q >= m + 5 for m, q in rows)
    record_property(
        "detail",
        f"sigma {SAMPLE_SIGMA:g}: mean-path max {max(r[0] for r in rows):.1f}, "
        f"min msq lead {min(q - m for m, q in rows):.1f}, {ok}/10 seeds",
    )
    assert ok == 10


@pytest.mark.acceptance("9", "determinism and trace I/O")
def test_determinism_and_io(record_property):
    cfg = RunConfig(seed=9, profile="ultra", samples_per_cycle=4, sample_noise=50.0)
    a, b = simulate(cfg), simulate(RunConfig.from_json(cfg.to_json()))
    assert encode_trace(a.trace) == encode_trace(b.trace)
    assert encode_trace(a.raw) == encode_trace(b.raw)
    ra, rb = run_attack(a.trace, a.scalar).to_csv(), run_attack(b.trace, b.scalar).to_csv()
    assert ra == rb
    for t in (a.trace, a.raw, compress_msq(a.raw)):
        data = encode_trace(t)
        back = decode_trace(data)
        assert back == t and encode_trace(back) == data
    bad = bytearray(encode_trace(a.trace))
    bad[-8:] = np.array([np.nan]).tobytes()
    with pytest.raises(PayloadError):
        decode_trace(bytes(bad))
    with pytest.raises(PayloadError):
        encode_trace(RawTrace(np.array([1.0, np.nan]), 2))
    record_property("detail", "traces, raw samples and report CSV byte-identical; round-trip exact; NaN rejected")


@pytest.mark.acceptance("10", "invariance of candidate extraction")
def test_invariance(execution0, scalar0, record_property):
    t = simulate_power(execution0, get_profile("noUltra"))
    m = fragment(t)
    base = extract_candidates(m, mean_slot(m))
    base_delta = run_attack(t, scalar0).deltas
    checks = 0
    for a, b in [(2.0, 0.0), (0.5, -1000.0), (3.7, 12.25), (1e-3, 5.0), (1e3, -1e6)]:
        mt = a * m + b
        assert np.array_equal(extract_candidates(mt, mean_slot(mt)), base)
        checks += 1
    for shift in (-2000.0, 0.125, 6500.0**2):
        tt = t.with_values(t.values + shift)
        assert np.array_equal(run_attack(tt, scalar0).deltas, base_delta)
        checks += 1
    neg = t.with_values(-t.values)
    mn = fragment(neg)
    assert np.array_equal(extract_candidates(mn, mean_slot(mn)), 1 - base)
    assert np.array_equal(run_attack(neg, scalar0).deltas, base_delta)
    record_property("detail", f"{checks} affine/shift transforms plus negation on a simulated trace")
