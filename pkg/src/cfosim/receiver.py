"""Channel estimation and time-reversal maximum-ratio combining.

The channel estimate comes from the impulse pilot block: sample k*L + l of
the slot is sqrt(K*L*p_u) * h[m, k, l] * exp(j*omega_k*(k*L + l)) plus
noise, so after derotating with the estimated CFO,

    h_hat[m, k, l] = r[m, k*L + l] * exp(-j*omega_hat_k*(k*L + l)) / sqrt(K*L*p_u)

which equals h[m, k, l] * exp(-j*(omega_hat_k - omega_k)*(k*L + l)) plus a
noise term of variance 1/(K*L*gamma) per entry.  The residual-CFO twist on
the estimate is what the analytic SINR model tracks through the phasor mean.

Detection runs the estimate time-reversed against the derotated data slot:

    x_hat_k[t] = sqrt(p_u) * sum_m sum_l conj(h_hat[m, k, l]) * r[m, t + l]
                 * exp(-j*omega_hat_k*(t + l))

for t across the data span.  With a perfect estimate and no noise the
combiner returns p_u * sum|h|^2 * x_k[t] (both the transmit scaling in r and
the combiner's own sqrt(p_u) contribute).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientTrialsError
from .estimators import CfoEstimate, FrequencyGrid, build_grid, estimate_cfo_periodogram
from .sysmodel import (
    STREAM_CFO,
    STREAM_CHANNEL,
    STREAM_NOISE_CE,
    STREAM_NOISE_IMPULSE,
    STREAM_PROBE,
    STREAM_SYMBOLS,
    FramePlan,
    PowerDelayProfile,
    ReceivedSignal,
    SignalPhase,
    SystemConfig,
    draw_channel,
    draw_cfos,
    draw_data_symbols,
    substream,
    synth_ce_pilot_rx,
    synth_data_rx_window,
    synth_impulse_pilot_rx,
)


@dataclass(frozen=True)
class ChannelEstimate:
    """Derotated maximum-likelihood impulse-pilot estimate, h_hat[m, k, l]."""

    h_hat: np.ndarray


@dataclass(frozen=True)
class DetectedSymbols:
    """Combiner outputs x_hat[k, t] for t in [t0, t0 + N_D - 1]."""

    x_hat: np.ndarray
    t0: int


@dataclass(frozen=True)
class EmpiricalSinr:
    """Regression decomposition of combiner outputs against the true symbols.

    signal_coeff is the least-squares coefficient a in x_hat ~ a * x, and
    noise_var the mean squared residual around that fit, so sinr = |a|^2 / v
    for unit-power symbols.  Dividing a by the combiner's deterministic scale
    p_u * M * theta_k recovers the phasor mean the analytic model uses.
    """

    signal_coeff: complex
    noise_var: float
    sinr: float
    trials: int
    stderr: float


def estimate_channel(
    sig: ReceivedSignal, cfo_est: CfoEstimate, cfg: SystemConfig
) -> ChannelEstimate:
    """Per-tap channel estimates from the impulse pilot block."""
    if sig.phase is not SignalPhase.IMPULSE_PILOT:
        raise ValueError(f"expected an impulse pilot block, got {sig.phase}")
    r = sig.samples.reshape(cfg.M, cfg.K, cfg.L)
    t = (np.arange(cfg.K) * cfg.L)[:, None] + np.arange(cfg.L)[None, :]
    derot = np.exp(-1j * cfo_est.omega_hat[:, None] * t)
    scale = math.sqrt(cfg.K * cfg.L * cfg.p_u)
    return ChannelEstimate(h_hat=r * derot[None, :, :] / scale)


def trmrc_detect(
    sig_data: ReceivedSignal,
    chan_est: ChannelEstimate,
    cfo_est: CfoEstimate,
    cfg: SystemConfig,
    frame: FramePlan,
) -> DetectedSymbols:
    """Time-reversal MRC over the whole data span."""
    if sig_data.phase is not SignalPhase.DATA:
        raise ValueError(f"expected a data slot, got {sig_data.phase}")
    r = sig_data.samples
    n_d = frame.N_D
    t0 = frame.data_start
    out = np.zeros((cfg.K, n_d), dtype=complex)
    tfull = np.arange(cfg.N_u)
    for k in range(cfg.K):
        derot = r * np.exp(-1j * cfo_est.omega_hat[k] * tfull)[None, :]
        acc = np.zeros(n_d, dtype=complex)
        for l in range(cfg.L):
            acc += np.conj(chan_est.h_hat[:, k, l]) @ derot[:, t0 + l : t0 + l + n_d]
        out[k] = math.sqrt(cfg.p_u) * acc
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("combiner produced non-finite outputs")
    return DetectedSymbols(x_hat=out, t0=t0)


def combine_at(
    r_window: np.ndarray,
    window_times: np.ndarray,
    chan_est: ChannelEstimate,
    cfo_est: CfoEstimate,
    cfg: SystemConfig,
    k: int,
    t: int,
) -> complex:
    """Single-symbol combiner output from a windowed slice of the data slot.

    r_window holds columns of the data slot at the given window_times; the
    slice must cover t .. t + L - 1.  Equals the corresponding trmrc_detect
    output exactly when fed the same samples.
    """
    pos = {int(tt): i for i, tt in enumerate(window_times)}
    acc = 0.0 + 0.0j
    for l in range(cfg.L):
        col = pos[t + l]
        ph = np.exp(-1j * cfo_est.omega_hat[k] * (t + l))
        acc += np.vdot(chan_est.h_hat[:, k, l], r_window[:, col] * ph)
    return math.sqrt(cfg.p_u) * acc


def measure_empirical_sinr(
    cfg: SystemConfig,
    frame: FramePlan,
    pdp: PowerDelayProfile,
    k: int,
    t: int | list[int] | tuple[int, ...],
    trials: int,
    seed: int,
    grid: FrequencyGrid | None = None,
    cfo_reuse: int = 1,
) -> EmpiricalSinr | list[EmpiricalSinr]:
    """Monte Carlo SINR of the full chain at symbol position t for user k.

    Each coherence interval draws a fresh channel, symbols, and noise.  CFOs
    and their periodogram estimates are redrawn every `cfo_reuse` intervals
    (default: every interval), so with the default the measured averages run
    over the CFO phase as well.  The returned regression pair (a, v) uses
    the true transmitted symbols as the reference.

    Only the probed samples of the data slot are synthesized; the windowed
    synthesis is checked against the full slot in the test suite.

    Pass a list of symbol positions to measure several t from the same
    trials (one list entry per t in the result).
    """
    if trials < 100:
        raise InsufficientTrialsError(f"need at least 100 trials, got {trials}")
    if cfo_reuse < 1:
        raise ValueError("cfo_reuse must be at least 1")
    t_list = [t] if isinstance(t, (int, np.integer)) else list(t)
    for tt in t_list:
        if not (frame.data_start <= tt <= frame.data_end):
            raise ValueError(f"t={tt} outside the data span [{frame.data_start}, {frame.data_end}]")
    if grid is None:
        grid = build_grid(cfg)

    window = np.unique(np.concatenate([np.arange(tt, tt + cfg.L) for tt in t_list]))
    xhat = np.empty((trials, len(t_list)), dtype=complex)
    xtrue = np.empty((trials, len(t_list)), dtype=complex)

    cfos = None
    est = None
    for i in range(trials):
        if i % cfo_reuse == 0:
            cfos = draw_cfos(cfg, substream(seed, i, STREAM_CFO))
            h_pilot = draw_channel(cfg, pdp, substream(seed, i, STREAM_CHANNEL, 1))
            ce = synth_ce_pilot_rx(cfg, h_pilot, cfos, substream(seed, i, STREAM_NOISE_CE))
            est = estimate_cfo_periodogram(ce, cfg, grid)
        h = draw_channel(cfg, pdp, substream(seed, i, STREAM_CHANNEL, 0))
        pilot = synth_impulse_pilot_rx(cfg, h, cfos, substream(seed, i, STREAM_NOISE_IMPULSE))
        h_hat = estimate_channel(pilot, est, cfg)
        symbols = draw_data_symbols(cfg, frame, substream(seed, i, STREAM_SYMBOLS))
        rwin = synth_data_rx_window(
            cfg, frame, h, cfos, symbols, window, substream(seed, i, STREAM_PROBE)
        )
        for j, tt in enumerate(t_list):
            xhat[i, j] = combine_at(rwin, window, h_hat, est, cfg, k, tt)
            xtrue[i, j] = symbols[k, tt]

    results = []
    for j in range(len(t_list)):
        results.append(_regress_sinr(xhat[:, j], xtrue[:, j]))
    return results[0] if isinstance(t, (int, np.integer)) else results


def _regress_sinr(xhat: np.ndarray, xtrue: np.ndarray) -> EmpiricalSinr:
    n = xhat.size
    a = np.vdot(xtrue, xhat) / np.vdot(xtrue, xtrue)
    resid = xhat - a * xtrue
    v = float(np.mean(np.abs(resid) ** 2))
    sinr = float(np.abs(a) ** 2 / v)
    # Standard error from batch means; 20 batches is plenty for a scalar.
    nb = 20
    cut = n - n % nb
    bh = xhat[:cut].reshape(nb, -1)
    bx = xtrue[:cut].reshape(nb, -1)
    vals = []
    for b in range(nb):
        ab = np.vdot(bx[b], bh[b]) / np.vdot(bx[b], bx[b])
        vb = np.mean(np.abs(bh[b] - ab * bx[b]) ** 2)
        vals.append(np.abs(ab) ** 2 / vb)
    stderr = float(np.std(vals, ddof=1) / math.sqrt(nb))
    return EmpiricalSinr(signal_coeff=complex(a), noise_var=v, sinr=sinr, trials=n, stderr=stderr)
