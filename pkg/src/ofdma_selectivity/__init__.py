"""Frequency selectivity, multiuser diversity and cyclic delay selection for block OFDMA.

The analytic layer (``channel``, ``analytics``, ``throughput``, ``cdd``) is
deterministic; ``scheduler`` supplies the Monte Carlo ground truth and
``experiments`` / ``cli`` turn both into sweep data files.
"""

__version__ = "0.1.0"

from .analytics import (
    CorrelationSummary,
    DelaySpreadStats,
    cdd_rms_delay,
    correlation_summary,
    effective_paths_cdd,
    rho_rb,
    rho_sc,
    rho_sc_cdd,
    rms_delay,
    selectivity_measure,
    sum_sc,
    tau_max,
)
from .cdd import DelayDecision, closed_form_delay, closed_form_delay_for_pdp, search_delay
from .channel import (
    CddConfig,
    OfdmConfig,
    PowerDelayProfile,
    cdd_compose_pdp,
    exponential_pdp_for_eff_paths,
    freq_response,
    make_exponential_pdp,
    sample_channel,
    uniform_pdp,
)
from .errors import (
    ConfigError,
    InvalidParameterError,
    UnsupportedConfigurationError,
    UnsupportedOrderError,
)
from .scheduler import ChannelSpec, empirical_max_cb, pf_schedule_slot, run_campaign
from .throughput import CbMoments, cb_moments, max_cb_gaussian, max_cb_os_bound, mean_cb

__all__ = [name for name in dir() if not name.startswith("_")]
