import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horizdpa.power import (
    LeakageProfile,
    addr_term,
    builtin_profiles,
    get_profile,
    parse_profiles,
    pulse_shape,
    simulate_power,
    synthesize_raw,
)
from horizdpa.traces import CompressedTrace, compress_mean, compress_msq


@pytest.fixture(scope="module")
def profiles():
    return {p.name: p for p in builtin_profiles()}


def test_builtin_profiles(profiles):
    assert set(profiles) == {"noUltra", "ultra"}
    nu, u = profiles["noUltra"], profiles["ultra"]
    assert u.w_addr < nu.w_addr
    assert u.w_mult <= nu.w_mult
    assert u.w_static == nu.w_static


def test_zero_weights_give_zero_trace(execution0):
    t = simulate_power(execution0, LeakageProfile("zero", 0, 0, 0, 0, 0))
    assert not t.values.any()
    assert len(t) == execution0.num_cycles
    assert t.geometry == (execution0.slot_offset, 230, 54)


def test_static_only(execution0):
    t = simulate_power(execution0, LeakageProfile("s", 0, 0, 0, 7.5))
    assert (t.values == 7.5).all()


def test_deterministic(execution0, profiles):
    p = profiles["noUltra"]
    assert simulate_power(execution0, p) == simulate_power(execution0, p)
    noisy = LeakageProfile("n", 1, 1, 1, 0, 3.0)
    assert simulate_power(execution0, noisy, 4) == simulate_power(execution0, noisy, 4)
    assert simulate_power(execution0, noisy, 4) != simulate_power(execution0, noisy, 5)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 100))
def test_linear_in_weights(execution0, c):
    p = get_profile("ultra")
    base = simulate_power(execution0, p).values
    np.testing.assert_allclose(simulate_power(execution0, p.scaled(c)).values, c * base, rtol=1e-12)


def test_components_add(execution0):
    a = simulate_power(execution0, LeakageProfile("a", 1, 0, 0, 0)).values
    b = simulate_power(execution0, LeakageProfile("b", 0, 1, 0, 0)).values
    c = simulate_power(execution0, LeakageProfile("c", 0, 0, 1, 0)).values
    abc = simulate_power(execution0, LeakageProfile("abc", 1, 1, 1, 0)).values
    np.testing.assert_allclose(a + b + c, abc, rtol=1e-12)
    assert np.array_equal(a, execution0.activity[:, 0] + execution0.activity[:, 1])
    assert np.array_equal(c, execution0.bus_hd)
    assert ((b >= 0) & (b < 1)).all()
    assert np.array_equal(b, addr_term(execution0))


def test_ultra_draws_less_power(execution0, profiles):
    nu = simulate_power(execution0, profiles["noUltra"]).values.mean()
    u = simulate_power(execution0, profiles["ultra"]).values.mean()
    assert u < nu


def test_parse_profiles():
    ps = parse_profiles("[a]\nw_mult = 2\nw_addr = 3\n\n[b]\nw_static = 1.5\n")
    assert ps["a"] == LeakageProfile("a", 2.0, 3.0, 0.0, 0.0, 0.0)
    assert ps["b"].w_static == 1.5
    with pytest.raises(ValueError):
        parse_profiles("[a]\nw_foo = 1\n")
    with pytest.raises(ValueError):
        parse_profiles("[a]\nw_mult = -1\n")
    with pytest.raises(ValueError):
        LeakageProfile("x", float("nan"), 0, 0, 0)


def test_get_profile_from_file(tmp_path):
    f = tmp_path / "p.ini"
    f.write_text("[one]\nw_mult = 1\n")
    assert get_profile(str(f)).name == "one"
    f.write_text("[one]\nw_mult = 1\n[two]\nw_addr = 2\n")
    assert get_profile(f"{f}:two").w_addr == 2.0
    with pytest.raises(ValueError):
        get_profile(str(f))
    with pytest.raises(ValueError):
        get_profile(f"{f}:three")
    with pytest.raises(ValueError):
        get_profile("nonexistent")


@pytest.mark.parametrize("spc", [1, 2, 7, 125, 625])
def test_pulse_shape_unit_mean_square(spc):
    p = pulse_shape(spc)
    assert p.shape == (spc,)
    assert np.mean(p * p) == pytest.approx(1.0, rel=1e-12)
    assert (p >= 0).all()


def test_pulse_shape_rejects_zero():
    with pytest.raises(ValueError):
        pulse_shape(0)


@pytest.mark.parametrize("spc", [2, 125, 625])
def test_msq_closure(execution0, spc):
    t = simulate_power(execution0, get_profile("noUltra"))
    raw = synthesize_raw(t, spc)
    assert len(raw.samples) == spc * len(t)
    assert raw.geometry == t.geometry
    np.testing.assert_allclose(compress_msq(raw).values, t.values**2, rtol=1e-9)


def test_mean_compression_is_proportional():
    t = CompressedTrace([1.0, 2.0, 4.0])
    raw = synthesize_raw(t, 100)
    m = compress_mean(raw).values
    np.testing.assert_allclose(m / m[0], [1.0, 2.0, 4.0], rtol=1e-12)


def test_sample_noise_is_seeded():
    t = CompressedTrace(np.ones(10))
    a = synthesize_raw(t, 4, 1.0, seed=1)
    assert a == synthesize_raw(t, 4, 1.0, seed=1)
    assert a != synthesize_raw(t, 4, 1.0, seed=2)


def test_constant_trace_closure():
    t = CompressedTrace(np.full(5, 2345.5))
    np.testing.assert_allclose(compress_msq(synthesize_raw(t, 625)).values, 2345.5**2, rtol=1e-12)
