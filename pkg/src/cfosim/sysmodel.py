"""System model for a single-cell massive MIMO uplink with per-user carrier offsets.

A base station with M antennas serves K single-antenna users over a
frequency-selective block-fading channel with L taps.  Each user's uplink
signal is rotated by its own carrier frequency offset (CFO), a normalized
angular increment omega_k in [-delta_max, +delta_max] rad/sample that stays
fixed for the duration of a frame.

Frame layout (one uplink slot of N_u samples, 0-based time indices):

  [0, K*L - 1]                 impulse pilots, one per user, for channel
                               estimation.  User k fires at t = k*L and the
                               channel spreads it over [k*L, k*L + L - 1];
                               user supports never overlap.
  [K*L, K*L + L - 2]           preamble symbols (i.i.d. like data) so the
                               first detected symbol sees a full ISI pattern.
  [K*L + L - 1, N_u - L]       the N_D data symbols.
  [N_u - L + 1, N_u - 1]       postamble symbols, same role at the far edge.

CFO estimation happens in a separate slot, before data communication, using
one of two pilot formats of length N <= N_u:

  * a constant-envelope tone per user, p_k[t] = exp(j*2*pi*k*t/K), giving
    each user its own spectral band (synth_ce_pilot_rx), or
  * a periodic impulse train with period K*L (synth_impulse_train_rx) for
    the low-complexity correlation estimator.

Time origin convention: every synthesized slot puts t = 0 at its own first
sample.  User and tap indices are 0-based everywhere, so user k's pilot tone
sits at 2*pi*k/K rad/sample.

Randomness: all draws flow through numpy Generators.  `substream(seed, *path)`
derives independent, reproducible streams from a master seed and an integer
path (for example (grid_point, trial, STREAM_CHANNEL)) via
numpy.random.SeedSequence spawn keys.  The derivation depends only on the
seed and the path, never on worker count or call order, which is what makes
parallel experiment runs byte-identical to serial ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import FrameError, OverlapError, PilotLengthError

# Stream labels used as the last element of a substream path.  Fixed numbers,
# not an enum, so the derivation is stable even if labels are added later.
STREAM_CHANNEL = 0
STREAM_CFO = 1
STREAM_NOISE_CE = 2
STREAM_NOISE_IMPULSE = 3
STREAM_NOISE_TRAIN = 4
STREAM_SYMBOLS = 5
STREAM_NOISE_DATA = 6
STREAM_PROBE = 7


def substream(seed: int, *path: int) -> np.random.Generator:
    """Derive an independent generator from a master seed and an integer path."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(path)))


def complex_normal(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian draws with the given total variance.

    Real and imaginary parts are drawn separately, each with variance var/2,
    in a fixed order so results are reproducible for a given stream.
    """
    scale = math.sqrt(var / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * scale


class SignalPhase(Enum):
    """Which phase of the uplink a ReceivedSignal belongs to."""

    CE_PILOT = "ce_pilot"
    IMPULSE_PILOT = "impulse_pilot"
    IMPULSE_TRAIN = "impulse_train"
    DATA = "data"


@dataclass(frozen=True)
class SystemConfig:
    """Static system parameters for one simulation configuration.

    gamma is the per-user transmit SNR p_u / sigma2.  The transmit power is
    derived (p_u = gamma * sigma2) so the identity holds exactly; with the
    default sigma2 = 1 the two are numerically equal.
    """

    M: int            # base station antennas
    K: int            # single-antenna users
    L: int            # channel taps
    N: int            # CFO pilot length, samples
    N_u: int          # uplink slot length, samples
    alpha: float      # periodogram grid exponent, grid step 2*pi/N**alpha
    gamma: float      # per-user transmit SNR, linear
    delta_max: float  # CFO magnitude bound, rad/sample
    sigma2: float = 1.0   # receiver noise variance
    N_c: int | None = None  # coherence interval in slots, informational

    @property
    def p_u(self) -> float:
        return self.gamma * self.sigma2

    def __post_init__(self):
        for name in ("M", "K", "L", "N", "N_u"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v <= 0:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.gamma <= 0 or self.sigma2 <= 0:
            raise ValueError("gamma and sigma2 must be positive")
        if self.delta_max < 0:
            raise ValueError("delta_max must be nonnegative")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class FramePlan:
    """Derived index arithmetic for the data slot."""

    N_u: int
    K: int
    L: int
    N_D: int
    data_start: int   # first data symbol index, K*L + L - 1
    data_end: int     # last data symbol index, N_u - L

    def chanest_pilot_index(self, k: int, l: int) -> int:
        """Slot index where tap l of user k's channel-estimation pilot lands."""
        if not (0 <= k < self.K and 0 <= l < self.L):
            raise ValueError(f"pilot index out of range: k={k}, l={l}")
        return k * self.L + l

    def data_times(self) -> np.ndarray:
        return np.arange(self.data_start, self.data_end + 1)


@dataclass(frozen=True)
class PowerDelayProfile:
    """Per-user, per-tap channel power sigma2_h[k, l]; theta[k] is the row sum."""

    sigma2_h: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.sigma2_h, dtype=float)
        if arr.ndim != 2:
            raise ValueError("sigma2_h must be a (K, L) array")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr.sum(axis=1) <= 0):
            raise ValueError("tap powers must be finite, nonnegative, with positive row sums")
        object.__setattr__(self, "sigma2_h", arr)

    @property
    def theta(self) -> np.ndarray:
        return self.sigma2_h.sum(axis=1)

    @classmethod
    def uniform(cls, K: int, L: int, theta: float = 1.0) -> "PowerDelayProfile":
        """Equal-power taps with total gain theta for every user."""
        return cls(np.full((K, L), theta / L))


@dataclass(frozen=True)
class ChannelRealization:
    """One block-fading draw, h[m, k, l]."""

    h: np.ndarray


@dataclass(frozen=True)
class CfoVector:
    """Per-user CFO omega[k], rad/sample."""

    omega: np.ndarray


@dataclass(frozen=True)
class ReceivedSignal:
    """Baseband samples at the array for one slot or pilot block.

    samples has shape (M, T).  origin is the slot index of column 0; all
    synthesis routines in this module use origin 0.
    """

    phase: SignalPhase
    samples: np.ndarray
    origin: int = 0


def validate_config(cfg: SystemConfig) -> FramePlan:
    """Check cross-field invariants and return the frame plan.

    Raises OverlapError when delta_max >= pi/K (neighboring user bands could
    collide) and FrameError when the pilot or data spans do not fit the slot.
    """
    if cfg.delta_max >= math.pi / cfg.K:
        raise OverlapError(
            f"delta_max={cfg.delta_max:.6g} must stay below pi/K={math.pi / cfg.K:.6g} "
            "to keep user bands disjoint"
        )
    if cfg.N > cfg.N_u:
        raise FrameError(f"CFO pilot length N={cfg.N} exceeds slot length N_u={cfg.N_u}")
    n_data = cfg.N_u - cfg.K * cfg.L - 2 * (cfg.L - 1)
    if n_data < 1:
        raise FrameError(
            f"slot too short: N_u={cfg.N_u} leaves {n_data} data symbols after "
            f"pilots ({cfg.K * cfg.L}) and ambles ({2 * (cfg.L - 1)})"
        )
    return FramePlan(
        N_u=cfg.N_u,
        K=cfg.K,
        L=cfg.L,
        N_D=n_data,
        data_start=cfg.K * cfg.L + cfg.L - 1,
        data_end=cfg.N_u - cfg.L,
    )


def derive_delta_max(carrier_hz: float, bw_hz: float, osc_accuracy: float) -> float:
    """CFO bound implied by oscillator accuracy, as a normalized angular increment.

    osc_accuracy is fractional (0.1 ppm -> 1e-7).  The worst-case frequency
    error osc_accuracy * carrier_hz, sampled at bw_hz, gives
    2*pi*osc_accuracy*carrier_hz/bw_hz rad/sample.
    """
    if carrier_hz <= 0 or bw_hz <= 0 or osc_accuracy < 0:
        raise ValueError("carrier, bandwidth must be positive; accuracy nonnegative")
    return 2.0 * math.pi * osc_accuracy * carrier_hz / bw_hz


def draw_channel(cfg: SystemConfig, pdp: PowerDelayProfile, rng: np.random.Generator) -> ChannelRealization:
    """One Rayleigh block-fading draw, h[m, k, l] ~ CN(0, sigma2_h[k, l])."""
    if pdp.sigma2_h.shape != (cfg.K, cfg.L):
        raise ValueError(f"PDP shape {pdp.sigma2_h.shape} does not match (K, L)=({cfg.K}, {cfg.L})")
    g = complex_normal(rng, (cfg.M, cfg.K, cfg.L))
    return ChannelRealization(h=g * np.sqrt(pdp.sigma2_h)[None, :, :])


def draw_cfos(cfg: SystemConfig, rng: np.random.Generator) -> CfoVector:
    """CFOs drawn independently, uniform on [-delta_max, +delta_max]."""
    return CfoVector(omega=rng.uniform(-cfg.delta_max, cfg.delta_max, cfg.K))


def draw_data_symbols(cfg: SystemConfig, frame: FramePlan, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance circular Gaussian symbols for the amble + data span.

    Returns a (K, N_u) array; entries over the channel-estimation pilot block
    [0, K*L - 1] are zero because that part of the slot carries no symbols.
    """
    x = np.zeros((cfg.K, cfg.N_u), dtype=complex)
    head = cfg.K * cfg.L
    x[:, head:] = complex_normal(rng, (cfg.K, cfg.N_u - head))
    return x


def effective_gain(cfg: SystemConfig, channel: ChannelRealization, k: int) -> np.ndarray:
    """Per-antenna complex gain of user k's pilot tone.

    The tone of user k rides on the phase ramp 2*pi*k/K, so the taps combine
    as sum_l h[m, k, l] * exp(-j*2*pi*k*l/K).
    """
    l = np.arange(cfg.L)
    w = np.exp(-2j * np.pi * k * l / cfg.K)
    return channel.h[:, k, :] @ w


def synth_ce_pilot_rx(
    cfg: SystemConfig,
    channel: ChannelRealization,
    cfos: CfoVector,
    rng: np.random.Generator,
) -> ReceivedSignal:
    """Received constant-envelope pilot block, N samples at M antennas.

    Each user's L-tap convolution collapses onto its tone, so the block is a
    sum of K complex exponentials at 2*pi*q/K + omega_q with per-antenna
    gains `effective_gain`, plus noise.
    """
    t = np.arange(cfg.N)
    l = np.arange(cfg.L)
    k = np.arange(cfg.K)
    w = np.exp(-2j * np.pi * np.outer(k, l) / cfg.K)          # (K, L)
    gains = np.einsum("mkl,kl->mk", channel.h, w)             # (M, K)
    freqs = 2.0 * np.pi * k / cfg.K + cfos.omega              # (K,)
    phasors = np.exp(1j * np.outer(freqs, t))                 # (K, N)
    r = math.sqrt(cfg.p_u) * (gains @ phasors)
    r += complex_normal(rng, (cfg.M, cfg.N), cfg.sigma2)
    return ReceivedSignal(SignalPhase.CE_PILOT, r)


def synth_impulse_pilot_rx(
    cfg: SystemConfig,
    channel: ChannelRealization,
    cfos: CfoVector,
    rng: np.random.Generator,
) -> ReceivedSignal:
    """Received channel-estimation pilot block, K*L samples at M antennas.

    User k transmits amplitude sqrt(K*L*p_u) at t = k*L and nothing else, so
    sample k*L + l is sqrt(K*L*p_u) * h[m, k, l] * exp(j*omega_k*(k*L + l))
    plus noise.  User supports are disjoint by construction.
    """
    amp = math.sqrt(cfg.K * cfg.L * cfg.p_u)
    t = (np.arange(cfg.K) * cfg.L)[:, None] + np.arange(cfg.L)[None, :]   # (K, L)
    ph = np.exp(1j * cfos.omega[:, None] * t)                             # (K, L)
    r = (amp * channel.h * ph[None, :, :]).reshape(cfg.M, cfg.K * cfg.L)
    r = r + complex_normal(rng, (cfg.M, cfg.K * cfg.L), cfg.sigma2)
    return ReceivedSignal(SignalPhase.IMPULSE_PILOT, r)


def synth_impulse_train_rx(
    cfg: SystemConfig,
    channel: ChannelRealization,
    cfos: CfoVector,
    rng: np.random.Generator,
) -> ReceivedSignal:
    """Received periodic impulse-train pilot, N samples at M antennas.

    The train repeats the channel-estimation pilot block with period K*L:
    user k fires amplitude sqrt(K*L*p_u) at t = b*K*L + k*L for every block
    b.  N must tile into whole blocks.
    """
    period = cfg.K * cfg.L
    if cfg.N % period != 0:
        raise PilotLengthError(f"N={cfg.N} is not a multiple of the train period K*L={period}")
    nblocks = cfg.N // period
    amp = math.sqrt(cfg.K * cfg.L * cfg.p_u)
    # Sample index b*K*L + k*L + l is exactly the row-major order of (b, k, l).
    t = (
        np.arange(nblocks)[:, None, None] * period
        + np.arange(cfg.K)[None, :, None] * cfg.L
        + np.arange(cfg.L)[None, None, :]
    )
    ph = np.exp(1j * cfos.omega[None, :, None] * t)                       # (B, K, L)
    sig = amp * channel.h[:, None, :, :] * ph[None, :, :, :]              # (M, B, K, L)
    r = sig.reshape(cfg.M, cfg.N) + complex_normal(rng, (cfg.M, cfg.N), cfg.sigma2)
    return ReceivedSignal(SignalPhase.IMPULSE_TRAIN, r)


def synth_data_rx(
    cfg: SystemConfig,
    frame: FramePlan,
    channel: ChannelRealization,
    cfos: CfoVector,
    symbols: np.ndarray,
    rng: np.random.Generator,
) -> ReceivedSignal:
    """Received data slot, N_u samples at M antennas.

    r[m, t] = sqrt(p_u) * sum_q sum_l h[m, q, l] * x_q[t - l] * exp(j*omega_q*t)
    plus noise.  `symbols` is the (K, N_u) array from draw_data_symbols; the
    pilot block at the head of the slot carries no symbols here because
    synth_impulse_pilot_rx owns that region, and the receiver never reads
    this signal below the preamble.
    """
    if symbols.shape != (cfg.K, cfg.N_u):
        raise ValueError(f"symbols must have shape (K, N_u)=({cfg.K}, {cfg.N_u})")
    t = np.arange(cfg.N_u)
    conv = np.zeros((cfg.M, cfg.N_u), dtype=complex)
    for q in range(cfg.K):
        xq = np.zeros((cfg.L, cfg.N_u), dtype=complex)
        for l in range(cfg.L):
            xq[l, l:] = symbols[q, : cfg.N_u - l]
        rot = np.exp(1j * cfos.omega[q] * t)
        conv += (channel.h[:, q, :] @ xq) * rot[None, :]
    r = math.sqrt(cfg.p_u) * conv + complex_normal(rng, (cfg.M, cfg.N_u), cfg.sigma2)
    return ReceivedSignal(SignalPhase.DATA, r)


def synth_data_rx_window(
    cfg: SystemConfig,
    frame: FramePlan,
    channel: ChannelRealization,
    cfos: CfoVector,
    symbols: np.ndarray,
    t_index: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Data-slot samples restricted to the given slot indices, shape (M, len(t_index)).

    Same signal model as synth_data_rx; noise is drawn only for the probed
    samples, from this call's own stream.  With sigma2 = 0 the result equals
    the corresponding columns of the full synthesis exactly (tested), which
    is what lets per-symbol probes skip building whole slots.
    """
    t_index = np.asarray(t_index)
    if np.any(t_index < 0) or np.any(t_index >= cfg.N_u):
        raise ValueError("probe indices outside the slot")
    conv = np.zeros((cfg.M, t_index.size), dtype=complex)
    for q in range(cfg.K):
        sym_at = np.zeros((cfg.L, t_index.size), dtype=complex)
        for l in range(cfg.L):
            src = t_index - l
            ok = src >= 0
            sym_at[l, ok] = symbols[q, src[ok]]
        rot = np.exp(1j * cfos.omega[q] * t_index)
        conv += (channel.h[:, q, :] @ sym_at) * rot[None, :]
    noise = complex_normal(rng, (cfg.M, t_index.size), cfg.sigma2) if cfg.sigma2 > 0 else 0.0
    return math.sqrt(cfg.p_u) * conv + noise
