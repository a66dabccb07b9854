import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import N_SC
from ofdma_selectivity.analytics import correlation_summary, rho_sc_table, sum_sc_from_rho
from ofdma_selectivity.channel import OfdmConfig, make_exponential_pdp, sample_taps, uniform_pdp
from ofdma_selectivity.errors import InvalidParameterError
from ofdma_selectivity.scheduler import block_throughputs
from ofdma_selectivity.throughput import (
    _second_order_b,
    cb_moments,
    delta_coefficients,
    exp_integral_e1,
    gaussian_gain_factor,
    max_cb_gaussian,
    max_cb_os_bound,
    mean_cb,
    os_gain_factor,
    var_cb_first_order,
    var_cb_second_order,
    var_gamma_ratio,
)

LN2 = math.log(2)


# --- exponential integral -------------------------------------------------------


def test_e1_quadrature_values():
    assert exp_integral_e1(1.0) == pytest.approx(0.21938393439552, rel=1e-12)
    assert exp_integral_e1(0.1) == pytest.approx(1.82292395841939, rel=1e-12)


def test_e1_quadrature_oracle():
    for x in (0.3, 2.0, 7.5):
        q = mpmath.quad(lambda t: mpmath.exp(-x * t) / t, [1, mpmath.inf])
        assert exp_integral_e1(x) == pytest.approx(float(q), rel=1e-10)


@given(st.floats(1e-8, 700.0))
def test_e1_matches_mpmath(x):
    assert exp_integral_e1(x) == pytest.approx(float(mpmath.e1(x)), rel=1e-10, abs=1e-300)
    scaled = float(mpmath.e1(x) * mpmath.exp(x))
    assert exp_integral_e1(x, scaled=True) == pytest.approx(scaled, rel=1e-10)


@given(st.floats(1.0, 700.0))
def test_e1_upper_asymptote(x):
    assert exp_integral_e1(x) <= math.exp(-x) / x


def test_e1_scaled_stays_finite():
    assert exp_integral_e1(1e5, scaled=True) == pytest.approx(1 / (1e5 + 1), rel=1e-4)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_e1_domain(x):
    with pytest.raises(InvalidParameterError):
        exp_integral_e1(x)


# --- mean ---------------------------------------------------------------------


def test_mean_cb_unit_snr():
    assert mean_cb(1.0) == pytest.approx(math.e * exp_integral_e1(1.0) / LN2, rel=1e-14)
    # e * E1(1) / ln 2 evaluates to 0.8603474, not the rounder 0.86003 sometimes quoted
    assert mean_cb(1.0) == pytest.approx(0.8603473823, abs=1e-10)


def test_mean_cb_quadrature():
    for g in (0.5, 3.0, 100.0):
        q = mpmath.quad(lambda x: mpmath.log(1 + g * x, 2) * mpmath.exp(-x), [0, mpmath.inf])
        assert mean_cb(g) == pytest.approx(float(q), rel=1e-10)


def test_mean_cb_monte_carlo():
    g = np.random.default_rng(5).exponential(1.0, 1_000_000)
    assert mean_cb(1.0) == pytest.approx(np.mean(np.log2(1 + g)), rel=0.005)


def test_mean_cb_vanishes_at_low_snr():
    assert mean_cb(1e-9) < 2e-9
    assert mean_cb(1e-3) < mean_cb(1e-2) < mean_cb(1.0)


# --- variances -------------------------------------------------------------------


def test_first_order_flat_unit_snr():
    assert var_cb_first_order(1.0, 1.0) == pytest.approx((1 / (2 * LN2)) ** 2, rel=1e-14)
    assert var_cb_first_order(1.0, 1.0) == pytest.approx(0.5203422453, abs=1e-10)
    assert var_cb_first_order(1.0, 0.0) == 0.0


def test_delta_coefficients_unit_snr():
    _, a2, a3 = delta_coefficients(1.0)
    assert a2 == pytest.approx(1 / (2 * LN2) + 1 / (4 * LN2), rel=1e-14)
    assert a3 == pytest.approx(-1 / (8 * LN2), rel=1e-14)


@given(st.floats(0.01, 1000.0), st.floats(0.0, 1.0))
def test_taylor_expansion_matches_log_near_mean(g, u):
    a1, a2, a3 = delta_coefficients(g)
    x = g * (1 + 1e-3 * (u - 0.5))
    quad = a1 + a2 * x + a3 * x * x
    assert quad == pytest.approx(math.log2(1 + x), abs=1e-6 * max(1.0, math.log2(1 + g)))


def test_second_order_zero_inputs():
    assert var_cb_second_order(1.0, 0.0, 0.0) == 0.0


def test_second_order_rejects_inverted_sums():
    with pytest.raises(InvalidParameterError):
        var_cb_second_order(1.0, 0.3, 0.5)


@given(st.floats(0.01, 1000.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_second_order_nonnegative(g, s1, frac):
    assert var_cb_second_order(g, s1, s1 * frac) >= 0.0


@given(st.floats(0.01, 1000.0), st.floats(0.0, 1.0))
def test_second_order_reduces_to_first_without_quadratic_term(g, s1):
    b1, b2 = _second_order_b(g, second_order=False)
    assert b2 == 0.0
    assert b1 * s1 == pytest.approx(var_cb_first_order(g, s1), rel=1e-12)


def test_moment_bundle():
    m = cb_moments(1.0, 0.5, 0.3)
    assert m.var_fo == pytest.approx(m.v1 * 0.5)
    assert m.mean == m.e1 > 0
    assert m.var_so == var_cb_second_order(1.0, 0.5, 0.3)
    assert cb_moments(1.0, 0.5).var_so == m.var_fo


def _mc_block_variance(pdp, snr, n=50_000, seed=9, s=32):
    cfg = OfdmConfig(N_SC, s, snr)
    h = np.fft.fft(sample_taps(pdp, np.random.default_rng(seed), n), n=N_SC, axis=-1)
    return block_throughputs(snr * np.abs(h) ** 2, cfg).var(axis=0).mean()


def _sums(pdp, s=32):
    rho = rho_sc_table(pdp, N_SC)
    return sum_sc_from_rho(rho, 1, 0, s), sum_sc_from_rho(rho, 2, 0, s)


@pytest.mark.parametrize("tau_o", [0.5, 4.0, 20.0])
def test_first_order_variance_at_low_snr(tau_o):
    p = make_exponential_pdp(tau_o)
    s1, _ = _sums(p)
    assert var_cb_first_order(0.01, s1) == pytest.approx(_mc_block_variance(p, 0.01, 20_000), rel=0.1)


def test_first_order_variance_biased_high_at_unit_snr():
    # the linear expansion ignores the concavity of log2(1 + g)
    p = make_exponential_pdp(2.0)
    s1, s2 = _sums(p)
    mc = _mc_block_variance(p, 1.0, 20_000)
    assert var_cb_first_order(1.0, s1) > 1.25 * mc
    assert abs(var_cb_second_order(1.0, s1, s2) - mc) < abs(var_cb_first_order(1.0, s1) - mc)


# --- approximations of the maximum ------------------------------------------------


def test_no_gain_for_single_effective_block():
    m = cb_moments(10.0, 0.7)
    assert max_cb_os_bound(m, 1.0) == m.e1
    assert max_cb_gaussian(m, phi=1.0) == m.e1


def test_os_reduces_to_classic_bound():
    n_rb = 32
    m = cb_moments(10.0, 1.0)
    classic = m.e1 + (n_rb - 1) / math.sqrt(2 * n_rb - 1) * math.sqrt(m.v1)
    assert max_cb_os_bound(m, 1 / n_rb) == pytest.approx(classic, rel=1e-14)


def test_table_ii_gain_terms():
    n_rb, s = 32, 32
    g = 10.0
    scale = math.sqrt(2 * var_gamma_ratio(g))

    def gain(s_intra, phi):
        m = cb_moments(g, s_intra)
        return (max_cb_gaussian(m, phi=phi) - m.e1) / scale

    ch_a, ch_b, ch_c = gain(1.0, 1.0), gain(1 / s, 1 / n_rb), gain(1.0, 1 / n_rb)
    assert ch_a == 0.0
    assert ch_b == pytest.approx(math.sqrt(math.log(n_rb) / s), rel=1e-12)
    assert ch_c == pytest.approx(math.sqrt(math.log(n_rb)), rel=1e-12)
    assert ch_c / ch_b == pytest.approx(math.sqrt(s), rel=1e-12)
    assert ch_c == pytest.approx(5.657 * ch_b, rel=1e-3)


@given(st.integers(2, 512))
def test_ch_c_maximizes_gaussian_objective(s):
    n_rb = 32
    m_a, m_c = cb_moments(1.0, 1.0), cb_moments(1.0, 1.0)
    m_b = cb_moments(1.0, 1 / s)
    best = max_cb_gaussian(m_c, phi=1 / n_rb)
    assert best > max_cb_gaussian(m_a, phi=1.0)
    assert best > max_cb_gaussian(m_b, phi=1 / n_rb)


@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_approximations_monotone(s_lo, s_hi, phi_lo, phi_hi):
    s_lo, s_hi = sorted((s_lo, s_hi))
    phi_lo, phi_hi = sorted((phi_lo, phi_hi))
    for f in (lambda m, p: max_cb_gaussian(m, phi=p), max_cb_os_bound):
        # increasing in s_sc_intra at fixed phi
        assert f(cb_moments(10.0, s_hi), phi_lo) >= f(cb_moments(10.0, s_lo), phi_lo)
        # increasing in 1/phi at fixed s_sc_intra
        assert f(cb_moments(10.0, s_lo), phi_lo) >= f(cb_moments(10.0, s_lo), phi_hi)


def test_gain_factors_validate_phi():
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(InvalidParameterError):
            os_gain_factor(bad)
        with pytest.raises(InvalidParameterError):
            gaussian_gain_factor(bad)


def test_second_order_flag_switches_variance():
    p = make_exponential_pdp(3.0)
    cs = correlation_summary(p, 32, N_SC)
    s1, s2 = _sums(p)
    m = cb_moments(1.0, s1, s2)
    lo = max_cb_gaussian(m, phi=cs.phi, second_order=True)
    hi = max_cb_gaussian(m, phi=cs.phi)
    assert lo < hi
    assert max_cb_os_bound(m, cs.phi, second_order=True) < max_cb_os_bound(m, cs.phi)


def test_flat_channel_gaussian_equals_mean():
    cs = correlation_summary(uniform_pdp(1), 32, N_SC)
    m = cb_moments(10.0, cs.s_sc_intra)
    assert max_cb_gaussian(m, phi=cs.phi) == pytest.approx(mean_cb(10.0))
