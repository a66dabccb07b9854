import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from conftest import N_SC, pdps
from ofdma_selectivity.analytics import rho_sc_table, selectivity_measure
from ofdma_selectivity.channel import (
    CddConfig,
    ChannelRealization,
    FrequencyResponse,
    OfdmConfig,
    PowerDelayProfile,
    cdd_compose_pdp,
    cdd_compose_taps,
    cdd_freq_response,
    exponential_pdp_for_eff_paths,
    freq_response,
    make_exponential_pdp,
    sample_channel,
    sample_taps,
    snr_grid,
    uniform_pdp,
)
from ofdma_selectivity.errors import InvalidParameterError


def _eff(pdp):
    return 1.0 / np.sum(pdp.powers**2)


# --- types -----------------------------------------------------------------


def test_pdp_requires_unit_power():
    with pytest.raises(InvalidParameterError):
        PowerDelayProfile(np.array([1.0, 1.0]))
    with pytest.raises(InvalidParameterError):
        PowerDelayProfile.from_powers([-1.0, 2.0])
    with pytest.raises(InvalidParameterError):
        PowerDelayProfile.from_powers([])
    with pytest.raises(InvalidParameterError):
        PowerDelayProfile.from_powers([0.0, 0.0])


def test_pdp_is_read_only():
    p = uniform_pdp(4)
    with pytest.raises(ValueError):
        p.gains[0] = 1.0


@given(pdps())
def test_constructors_conserve_power(p):
    assert abs(np.sum(p.powers) - 1.0) <= 1e-12
    assert np.all(p.gains >= 0)


def test_ofdm_config_validation():
    cfg = OfdmConfig(1024, 32, 1.0)
    assert cfg.n_rb * cfg.block_size == cfg.n_sc == 1024
    for bad in [(1000, 8, 1.0), (1024, 24, 1.0), (1024, 32, 0.0), (1024, 32, -1.0)]:
        with pytest.raises(InvalidParameterError):
            OfdmConfig(*bad)


def test_cdd_config_validation():
    assert CddConfig.linear(3, 4).delays == (0, 3, 6, 9)
    with pytest.raises(InvalidParameterError):
        CddConfig((1, 2))
    with pytest.raises(InvalidParameterError):
        CddConfig((0, -1))
    with pytest.raises(InvalidParameterError):
        CddConfig((0, 1024)).check(1024)


# --- exponential profiles ----------------------------------------------------


def test_exponential_small_tau_is_single_tap():
    p = make_exponential_pdp(1e-3, max_taps=4)
    assert p.gains[0] == pytest.approx(1.0, abs=1e-12)
    assert np.sum(p.powers[1:]) < 1e-12


def test_exponential_large_tau_is_near_uniform():
    p = make_exponential_pdp(1e6, max_taps=8)
    assert p.n_taps == 8
    assert np.allclose(p.powers, 1 / 8, rtol=1e-4)


def test_exponential_shape_and_truncation():
    p = make_exponential_pdp(3.0, max_taps=64)
    ratios = p.gains[1:] / p.gains[:-1]
    assert np.allclose(ratios, np.exp(-1 / 3.0))
    # truncation keeps 99.99 % of the untruncated power and no more than needed
    r = np.exp(-2 / 3.0)
    assert 1 - r**p.n_taps >= 0.9999
    assert 1 - r ** (p.n_taps - 1) < 0.9999


def test_exponential_rejects_bad_tau():
    for tau in (0.0, -1.0):
        with pytest.raises(InvalidParameterError):
            make_exponential_pdp(tau)


def test_exponential_for_reference_channel():
    p = exponential_pdp_for_eff_paths(1.6246)
    assert _eff(p) == pytest.approx(1.6246, abs=1e-3)


@given(st.floats(1.05, 60.0))
def test_exponential_for_eff_paths_hits_target(target):
    assert _eff(exponential_pdp_for_eff_paths(target)) == pytest.approx(target, rel=1e-5)


def test_eff_paths_at_or_above_max_taps_is_uniform():
    assert exponential_pdp_for_eff_paths(64.0) == uniform_pdp(64)


# --- sampling ----------------------------------------------------------------


def test_single_tap_power_is_unit_exponential():
    taps = sample_taps(uniform_pdp(1), np.random.default_rng(1), 100_000)[:, 0]
    power = np.abs(taps) ** 2
    assert power.mean() == pytest.approx(1.0, abs=0.01)
    assert stats.kstest(power, "expon").pvalue > 0.01


def test_total_tap_power_is_unit():
    p = make_exponential_pdp(2.0)
    taps = sample_taps(p, np.random.default_rng(2), 100_000)
    assert np.mean(np.sum(np.abs(taps) ** 2, axis=-1)) == pytest.approx(1.0, abs=0.01)


def test_sampling_is_seed_deterministic():
    p = make_exponential_pdp(2.0)
    a = sample_channel(p, 42, size=3)
    b = sample_channel(p, 42, size=3)
    assert isinstance(a, ChannelRealization) and a.rng_seed == 42
    assert np.array_equal(a.taps, b.taps)
    assert a.taps.shape == (3, p.n_taps)


# --- frequency response -------------------------------------------------------


def test_flat_response():
    fr = freq_response(np.array([1.0 + 0j]), N_SC)
    assert isinstance(fr, FrequencyResponse) and fr.n_sc == N_SC
    assert np.allclose(fr.values, 1.0)


def test_zero_taps_give_zero_response():
    assert np.all(freq_response(np.zeros(5, complex), 64).values == 0)


def test_fft_and_direct_sum_agree():
    p = uniform_pdp(64)
    ch = sample_channel(p, 7, size=4)
    a = freq_response(ch, N_SC, "fft").values
    b = freq_response(ch, N_SC, "direct").values
    assert np.max(np.abs(a - b)) <= 1e-9


def test_two_equal_taps_direct_vs_fft():
    taps = np.array([1.0, 1.0]) / np.sqrt(2)
    a = freq_response(taps, N_SC).values
    b = freq_response(taps, N_SC, "direct").values
    assert np.max(np.abs(a - b)) <= 1e-9
    n = np.arange(N_SC)
    assert np.allclose(np.abs(a) ** 2, 1 + np.cos(2 * np.pi * n / N_SC))


def test_too_many_taps_rejected():
    with pytest.raises(InvalidParameterError):
        freq_response(np.ones(65), 64)


def test_snr_grid():
    cfg = OfdmConfig(64, 8, 10.0)
    assert np.allclose(snr_grid(np.ones(64), cfg), 10.0)


def test_snr_marginal_is_exponential():
    cfg = OfdmConfig(N_SC, 32, 10.0)
    p = make_exponential_pdp(4.0)
    resp = np.fft.fft(sample_taps(p, np.random.default_rng(3), 100_000), n=N_SC, axis=-1)
    g = snr_grid(resp[:, :8], cfg)
    assert g.mean() == pytest.approx(10.0, rel=0.01)
    assert stats.kstest(g[:10_000, 0] / 10.0, "expon").pvalue > 0.01


# --- CDD composition ----------------------------------------------------------


@pytest.mark.parametrize("L,D", [(8, 3), (16, 1), (16, 15), (5, 4)])
def test_compose_uniform_piecewise(L, D):
    p = cdd_compose_pdp([uniform_pdp(L)] * 2, CddConfig((0, D)), N_SC)
    expect = np.full(L + D, 1 / L)
    expect[:D] = expect[L:] = 1 / (2 * L)
    assert np.allclose(p.powers, expect, atol=1e-15)


def test_compose_disjoint_copies():
    L, D = 6, 9
    p = cdd_compose_pdp([uniform_pdp(L)] * 2, CddConfig((0, D)), N_SC)
    assert np.allclose(p.powers[:L], 1 / (2 * L))
    assert np.allclose(p.powers[L:D], 0)
    assert np.allclose(p.powers[D:], 1 / (2 * L))


@given(pdps())
def test_compose_zero_delay_is_identity(p):
    q = cdd_compose_pdp([p, p], CddConfig((0, 0)), N_SC)
    assert np.allclose(q.powers, p.trimmed().powers, atol=1e-15)


def test_compose_wraps_around():
    p = cdd_compose_pdp([uniform_pdp(4)] * 2, CddConfig((0, 62)), 64)
    assert p.n_taps == 64
    assert np.allclose(p.powers[[0, 1]], 1 / 4)
    assert np.allclose(p.powers[[2, 3, 62, 63]], 1 / 8)


@given(pdps(), pdps(), st.integers(0, 40))
def test_compose_conserves_power(p, q, d):
    r = cdd_compose_pdp([p, q], CddConfig((0, d)), N_SC)
    assert abs(np.sum(r.powers) - 1) <= 1e-12


def test_compose_antenna_count_mismatch():
    with pytest.raises(InvalidParameterError):
        cdd_compose_pdp([uniform_pdp(2)], CddConfig((0, 1)), N_SC)
    with pytest.raises(InvalidParameterError):
        cdd_freq_response([np.ones(8)], CddConfig((0, 1)), 8)


def test_cdd_response_single_antenna_is_identity():
    h = freq_response(sample_channel(uniform_pdp(3), 1), N_SC)
    out = cdd_freq_response([h], CddConfig((0,)), N_SC)
    assert np.allclose(out.values, h.values)


def test_cdd_response_zero_delay_sum():
    rng = np.random.default_rng(4)
    taps = sample_taps(uniform_pdp(1), rng, (100_000, 2))
    h = np.fft.fft(taps, n=16, axis=-1)
    out = cdd_freq_response(h, CddConfig((0, 0)), 16).values
    assert np.allclose(out, (h[:, 0] + h[:, 1]) / np.sqrt(2))
    assert np.var(out[:, 0]) == pytest.approx(1.0, rel=0.01)


def test_cdd_time_and_frequency_routes_agree():
    rng = np.random.default_rng(5)
    p = make_exponential_pdp(2.0)
    taps = sample_taps(p, rng, (3, 2))
    cdd = CddConfig((0, 7))
    a = np.fft.fft(cdd_compose_taps(taps, cdd, N_SC), axis=-1)
    b = cdd_freq_response(np.fft.fft(taps, n=N_SC, axis=-1), cdd, N_SC).values
    assert np.max(np.abs(a - b)) <= 1e-9


def _empirical_rho(h, offsets):
    g = np.abs(h) ** 2
    return np.array([np.corrcoef(g[:, 0], g[:, d])[0, 1] for d in offsets])


def test_cdd_marginal_and_correlation_match_composed_pdp():
    # superposing per-antenna draws and drawing from the composed PDP give the
    # same second-order statistics
    rng = np.random.default_rng(6)
    p = make_exponential_pdp(1.5, 16)
    cdd = CddConfig((0, 5))
    taps = sample_taps(p, rng, (100_000, 2))
    h_direct = np.fft.fft(cdd_compose_taps(taps, cdd, N_SC), axis=-1)[:, :64]
    composed = cdd_compose_pdp([p, p], cdd, N_SC)
    h_comp = np.fft.fft(sample_taps(composed, rng, 100_000), n=N_SC, axis=-1)[:, :64]
    offsets = [1, 4, 16, 48, 63]
    assert np.max(np.abs(_empirical_rho(h_direct, offsets) - _empirical_rho(h_comp, offsets))) < 0.02
    assert np.max(np.abs(_empirical_rho(h_direct, offsets) - rho_sc_table(composed, N_SC)[offsets])) < 0.02
    g = np.abs(h_direct[:, 0]) ** 2
    assert g.mean() == pytest.approx(1.0, rel=0.02)
    assert g.var() == pytest.approx(1.0, rel=0.05)


def test_selectivity_of_composed_channel_exceeds_siso():
    p = make_exponential_pdp(1.0)
    q = cdd_compose_pdp([p, p], CddConfig((0, 3)), N_SC)
    assert selectivity_measure(q, N_SC) > selectivity_measure(p, N_SC)
