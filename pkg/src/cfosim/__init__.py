"""Link-level simulation and analysis of multiuser CFO estimation with TR-MRC.

The package splits into five layers:

- sysmodel: frame layout, channel/CFO statistics, and signal synthesis
- estimators: the spatially averaged periodogram and correlation CFO
  estimators, with operation-count models
- receiver: impulse-pilot channel estimation, time-reversal MRC, and
  empirical SINR measurement of the full chain
- analysis: analytic SINR / information rate, phasor-mean profiles, MSE
  slope fits, grid-exponent selection, and required-SNR search
- xharness: seeded Monte Carlo experiments with CSV/JSON emission (also
  exposed through the `cfosim` console script)
"""

from .analysis import (
    MseResult,
    PhasorMeanProfile,
    RateResult,
    RequiredSnr,
    SinrProfile,
    analytic_sinr,
    broadcast_profile,
    db_to_linear,
    find_alpha_star,
    fit_loglog_slope,
    info_rate,
    linear_to_db,
    mse_and_slope,
    phasor_mean,
    phasor_profile,
    required_snr,
    scan_alpha_star,
    sinr_profile,
)
from .errors import (
    AlphaSearchError,
    BracketError,
    CfoSimError,
    DegenerateFitError,
    FrameError,
    InsufficientTrialsError,
    OverlapError,
    PilotLengthError,
)
from .estimators import (
    CfoEstimate,
    FrequencyGrid,
    OpCount,
    build_grid,
    counted_correlation_estimate,
    counted_periodogram_estimate,
    estimate_cfo_correlation,
    estimate_cfo_periodogram,
    grid_resolves,
    op_count_correlation,
    op_count_periodogram,
    periodogram_value,
)
from .receiver import (
    ChannelEstimate,
    DetectedSymbols,
    EmpiricalSinr,
    combine_at,
    estimate_channel,
    measure_empirical_sinr,
    trmrc_detect,
)
from .sysmodel import (
    CfoVector,
    ChannelRealization,
    FramePlan,
    PowerDelayProfile,
    ReceivedSignal,
    SignalPhase,
    SystemConfig,
    derive_delta_max,
    draw_cfos,
    draw_channel,
    draw_data_symbols,
    effective_gain,
    substream,
    synth_ce_pilot_rx,
    synth_data_rx,
    synth_data_rx_window,
    synth_impulse_pilot_rx,
    synth_impulse_train_rx,
    validate_config,
)
from .xharness import (
    DEFAULT_DELTA_MAX,
    EXPERIMENTS,
    ExperimentSpec,
    ResultRow,
    cfo_residuals,
    emit_results,
    run_experiment,
    validate_spec,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaSearchError",
    "BracketError",
    "CfoEstimate",
    "CfoSimError",
    "CfoVector",
    "ChannelEstimate",
    "ChannelRealization",
    "DEFAULT_DELTA_MAX",
    "DegenerateFitError",
    "DetectedSymbols",
    "EXPERIMENTS",
    "EmpiricalSinr",
    "ExperimentSpec",
    "FrameError",
    "FramePlan",
    "FrequencyGrid",
    "InsufficientTrialsError",
    "MseResult",
    "OpCount",
    "OverlapError",
    "PhasorMeanProfile",
    "PilotLengthError",
    "PowerDelayProfile",
    "RateResult",
    "ReceivedSignal",
    "RequiredSnr",
    "ResultRow",
    "SignalPhase",
    "SinrProfile",
    "SystemConfig",
    "analytic_sinr",
    "broadcast_profile",
    "build_grid",
    "cfo_residuals",
    "combine_at",
    "counted_correlation_estimate",
    "counted_periodogram_estimate",
    "db_to_linear",
    "derive_delta_max",
    "draw_cfos",
    "draw_channel",
    "draw_data_symbols",
    "effective_gain",
    "emit_results",
    "estimate_cfo_correlation",
    "estimate_cfo_periodogram",
    "estimate_channel",
    "find_alpha_star",
    "fit_loglog_slope",
    "grid_resolves",
    "info_rate",
    "linear_to_db",
    "measure_empirical_sinr",
    "mse_and_slope",
    "op_count_correlation",
    "op_count_periodogram",
    "periodogram_value",
    "phasor_mean",
    "phasor_profile",
    "required_snr",
    "run_experiment",
    "scan_alpha_star",
    "sinr_profile",
    "substream",
    "synth_ce_pilot_rx",
    "synth_data_rx",
    "synth_data_rx_window",
    "synth_impulse_pilot_rx",
    "synth_impulse_train_rx",
    "trmrc_detect",
    "validate_config",
    "validate_spec",
]
