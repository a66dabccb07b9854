import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ofdma_selectivity.analytics import DelaySpreadStats, rms_delay, tau_max
from ofdma_selectivity.cdd import (
    DelayDecision,
    calibrate_k_c,
    closed_form_delay,
    closed_form_delay_for_pdp,
    delay_objective,
    delay_objective_curve,
    search_delay,
)
from ofdma_selectivity.channel import (
    OfdmConfig,
    exponential_pdp_for_eff_paths,
    make_exponential_pdp,
    uniform_pdp,
)
from ofdma_selectivity.errors import InvalidParameterError

CFG = OfdmConfig(1024, 32, 10.0)
FLAT = uniform_pdp(1)
PAPER_CHANNEL = exponential_pdp_for_eff_paths(1.6246)


def _stats(tau, mu=0.0):
    return DelaySpreadStats(mu=mu, tau_rms=tau, tau_max=tau_max(tau), kappa=0.9)


# --- search -----------------------------------------------------------------------


@pytest.mark.parametrize("objective", ["gaussian", "os"])
def test_flat_channel_gains_from_first_delay(objective):
    curve = delay_objective_curve(FLAT, CFG, 2, objective)
    assert curve[1][1] > curve[0][1]
    assert search_delay(FLAT, CFG, 2, objective).d_star >= 1


@pytest.mark.parametrize("objective", ["gaussian", "os"])
def test_curve_contract(objective):
    dec = search_delay(PAPER_CHANNEL, CFG, 2, objective)
    curve = dec.objective_curve
    assert [d for d, _ in curve] == list(range(len(curve)))
    assert len(curve) == dec.params["search_range"][1] + 1
    assert dec.method == f"{objective}_search"
    assert tuple(delay_objective_curve(PAPER_CHANNEL, CFG, 2, objective)) == curve


def test_search_ties_go_to_smaller_delay():
    # a single-antenna "CDD" has only D = 0 available
    assert search_delay(FLAT, CFG, 1).d_star == 0


def test_search_argmax_of_curve():
    dec = search_delay(PAPER_CHANNEL, CFG, 2, "gaussian")
    vals = [v for _, v in dec.objective_curve]
    assert dec.d_star == int(np.argmax(vals))
    assert vals[dec.d_star] > vals[0]


def test_search_stop_rule_prunes_tail():
    dec = search_delay(PAPER_CHANNEL, CFG, 2, "gaussian")
    assert dec.params["search_range"][1] < 64


def test_strongly_selective_channel_gains_little():
    # the closed form switches CDD off; the analytic search still finds a
    # marginal gain from edge smoothing of the composed profile
    p = uniform_pdp(64)
    curve = delay_objective_curve(p, CFG, 2, "gaussian")
    best = max(v for _, v in curve)
    assert best / curve[0][1] - 1 < 1e-3
    assert closed_form_delay_for_pdp(p, CFG).d_star == 0


def test_search_rejects_bad_inputs():
    with pytest.raises(InvalidParameterError):
        search_delay(FLAT, CFG, 0)
    with pytest.raises(InvalidParameterError):
        search_delay(FLAT, CFG, 2, "median")
    with pytest.raises(InvalidParameterError):
        delay_objective(0.5, 0.5, "median", 1.0)


def test_search_accepts_per_antenna_list():
    a = search_delay([PAPER_CHANNEL, PAPER_CHANNEL], CFG, 2)
    b = search_delay(PAPER_CHANNEL, CFG, 2)
    assert a == b


# --- closed form ----------------------------------------------------------------


def test_closed_form_flat_channel():
    dec = closed_form_delay(_stats(0.0), 32, kappa=0.9)
    assert dec.d_max == 1
    assert dec.d_star == 1
    assert dec.method == "rms_closed_form"


def test_closed_form_large_spread_switches_off():
    k_c = 2 * math.pi / 1024
    tau = 2.0 / (k_c * 32)
    dec = closed_form_delay(_stats(tau), 32, k_c)
    assert dec.d_bc == 0 and dec.d_star == 0


@given(st.floats(0.0, 30.0), st.sampled_from([8, 16, 32, 64, 128]), st.integers(2, 4),
       st.floats(1e-3, 0.05))
def test_closed_form_identical_antennas_reduction(tau, s, n_tx, k_c):
    dec = closed_form_delay([_stats(tau, mu=1.3)] * n_tx, s, k_c, 0.9, n_tx)
    rad = 12.0 / (n_tx**2 - 1) * (1 / (k_c * s) ** 2 - tau**2)
    d_bc = math.floor(math.sqrt(max(rad, 0.0)) + 1e-9)
    assert dec.d_bc == d_bc
    assert dec.d_max == tau_max(tau, 0.9)
    assert dec.d_star == min(d_bc, dec.d_max)


@given(st.floats(0.0, 20.0))
def test_closed_form_nonincreasing_in_block_size(tau):
    ds = [closed_form_delay(_stats(tau), s).d_star for s in (4, 8, 16, 32, 64, 128, 256, 512)]
    assert all(a >= b for a, b in zip(ds, ds[1:]))


def test_closed_form_rises_then_falls_with_spread():
    ds = [closed_form_delay_for_pdp(make_exponential_pdp(t), CFG).d_star
          for t in (0.05, 0.4, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)]
    peak = int(np.argmax(ds))
    assert 0 < peak < len(ds) - 1
    assert all(a <= b for a, b in zip(ds[:peak], ds[1 : peak + 1]))
    assert all(a >= b for a, b in zip(ds[peak:], ds[peak + 1 :]))


def test_closed_form_decision_fields():
    dec = closed_form_delay_for_pdp(PAPER_CHANNEL, CFG)
    assert isinstance(dec, DelayDecision)
    assert dec.d_star == min(dec.d_bc, dec.d_max)
    assert 0 <= dec.d_star <= CFG.n_sc - 1
    d = dec.to_dict()
    assert d["k_c"] == pytest.approx(2 * math.pi / 1024) and d["kappa"] == 0.9


def test_closed_form_validation():
    with pytest.raises(InvalidParameterError):
        closed_form_delay(_stats(1.0), 32, n_tx=1)
    with pytest.raises(InvalidParameterError):
        closed_form_delay(_stats(1.0), 32, k_c=0.0)
    with pytest.raises(InvalidParameterError):
        closed_form_delay(_stats(1.0), 32, kappa=1.0)
    with pytest.raises(InvalidParameterError):
        closed_form_delay([_stats(1.0)] * 3, 32, n_tx=2)


def test_closed_form_distinct_antennas():
    a, b = rms_delay(make_exponential_pdp(1.0)), rms_delay(make_exponential_pdp(4.0))
    dec = closed_form_delay([a, b], 32)
    # only the antennas before the last bound the overlap window
    assert dec.d_max == a.tau_max


def test_all_methods_agree_flat_needs_delay():
    for dec in (search_delay(FLAT, CFG, 2, "gaussian"), search_delay(FLAT, CFG, 2, "os"),
                closed_form_delay_for_pdp(FLAT, CFG)):
        assert dec.d_star >= 1


# --- calibration ---------------------------------------------------------------


def test_calibrate_k_c_improves_on_default():
    refs = [make_exponential_pdp(t) for t in (0.5, 1.0, 2.0, 4.0)]
    k_c, score = calibrate_k_c(refs, CFG)
    base = 2 * math.pi / 1024
    targets = [search_delay(p, CFG).d_star for p in refs]
    default_score = np.mean([abs(closed_form_delay_for_pdp(p, CFG, k_c=base).d_star - t)
                             for p, t in zip(refs, targets)])
    assert score <= default_score
    fitted = np.mean([abs(closed_form_delay_for_pdp(p, CFG, k_c=k_c).d_star - t)
                      for p, t in zip(refs, targets)])
    assert fitted == pytest.approx(score)


def test_calibrate_needs_channels():
    with pytest.raises(InvalidParameterError):
        calibrate_k_c([], CFG)
