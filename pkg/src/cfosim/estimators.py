"""CFO estimators: spatially averaged periodogram and lag-correlation baseline.

The periodogram estimator searches a uniform frequency grid around each
user's pilot tone.  For user k the objective is

    P_k(theta) = (1/M) * sum_m (1/N) * | sum_t r[m, t] * exp(-j*(2*pi*k/K + theta)*t) |^2

maximized over theta in the grid {i * 2*pi/N**alpha : |i| <= T0}, with
T0 = ceil(delta_max / (2*pi) * N**alpha) so the grid covers the whole CFO
range.  Averaging the per-antenna periodograms is what buys the estimator
its accuracy at low SNR: the channel never needs to be known.

The correlation baseline instead receives a periodic impulse train (period
K*L) and reads each user's CFO from the phase advance between consecutive
blocks:

    omega_hat_k = angle( sum_m sum_{b>=1} sum_l r[m, t_bkl] * conj(r[m, t_(b-1)kl]) ) / (K*L)

where t_bkl = b*K*L + k*L + l.  One pass of lag products serves all users,
which is why its operation count is independent of K.

Operation-count model.  Counts describe the direct evaluation strategy, not
the vectorized numpy path (which computes the same sums in the same order
per output element and is checked against the loop reference in tests):

  periodogram, per (user, grid point, antenna): N complex multiplies to
  advance the demodulation phasor recursively, N multiply-accumulates for
  the products (the fused add is not double counted), and 1 magnitude
  square, i.e. 2N + 1 ops in the multiply bucket.  Spatial averaging adds M
  ops per (user, grid point) and the argmax scan one comparison per grid
  point, both tallied in the add bucket.  Totals:

      mults = K * (2*T0 + 1) * M * (2*N + 1)
      adds  = K * (2*T0 + 1) * M  +  K * (2*T0 + 1)

  correlation: one multiply-accumulate per lag product, M * (N - K*L) over
  all users together, plus K phase extractions tallied in the add bucket.

`counted_periodogram_estimate` and `counted_correlation_estimate` run the
literal loops with instrumented counters; tests assert the closed forms
above match those counters exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PilotLengthError
from .sysmodel import ReceivedSignal, SystemConfig


@dataclass(frozen=True)
class FrequencyGrid:
    """Symmetric search grid for the periodogram, offsets[i] = (i - T0) * spacing."""

    alpha: float
    T0: int
    spacing: float
    offsets: np.ndarray

    @property
    def size(self) -> int:
        return 2 * self.T0 + 1


@dataclass(frozen=True)
class CfoEstimate:
    """Per-user estimates; grid_index is the signed grid multiple for grid
    estimators and None for the correlation baseline.  residual holds
    omega_hat - omega when the true CFOs were supplied."""

    omega_hat: np.ndarray
    grid_index: np.ndarray | None = None
    residual: np.ndarray | None = None


@dataclass(frozen=True)
class OpCount:
    """Complex-arithmetic budget of one estimator invocation."""

    complex_mults: int
    complex_adds: int

    @property
    def total(self) -> int:
        return self.complex_mults + self.complex_adds


def build_grid(cfg: SystemConfig) -> FrequencyGrid:
    """Search grid with step 2*pi/N**alpha covering [-delta_max, +delta_max].

    T0 is the ceiling of delta_max/spacing; if floating-point rounding left
    the edge short of delta_max the half-width is bumped by one step.
    """
    spacing = 2.0 * math.pi / float(cfg.N) ** cfg.alpha
    t0 = math.ceil(cfg.delta_max / (2.0 * math.pi) * float(cfg.N) ** cfg.alpha)
    if t0 * spacing < cfg.delta_max:
        t0 += 1
    offsets = np.arange(-t0, t0 + 1) * spacing
    return FrequencyGrid(alpha=cfg.alpha, T0=t0, spacing=spacing, offsets=offsets)


def periodogram_value(sig: ReceivedSignal, cfg: SystemConfig, k: int, theta: float) -> float:
    """Spatially averaged periodogram of user k at offset theta from its tone."""
    r = sig.samples
    t = np.arange(r.shape[1])
    dem = np.exp(-1j * (2.0 * np.pi * k / cfg.K + theta) * t)
    s = r @ dem
    return float(np.mean(np.abs(s) ** 2) / r.shape[1])


def _tie_rank(offsets: np.ndarray) -> np.ndarray:
    # Rank grid points by the tie-break preference: smaller |theta| first,
    # negative before positive at equal magnitude.
    order = sorted(range(offsets.size), key=lambda i: (abs(offsets[i]), offsets[i]))
    rank = np.empty(offsets.size, dtype=int)
    rank[order] = np.arange(offsets.size)
    return rank


def estimate_cfo_periodogram_many(
    r_batch: np.ndarray,
    cfg: SystemConfig,
    grid: FrequencyGrid,
) -> np.ndarray:
    """Vectorized periodogram estimates for a stack of pilot blocks.

    r_batch has shape (R, M, N); returns omega_hat with shape (R, K).  Each
    trial gets exactly the estimate the single-signal path would produce;
    the batch exists so Monte Carlo sweeps spend their time inside a few
    large matrix products instead of many small ones.
    """
    nr, m, n = r_batch.shape
    if n != cfg.N or m != cfg.M:
        raise ValueError(f"batch shape {r_batch.shape} does not match (R, M={cfg.M}, N={cfg.N})")
    t = np.arange(n)
    rank = _tie_rank(grid.offsets)
    flat = r_batch.reshape(nr * m, n)
    out = np.empty((nr, cfg.K))
    for k in range(cfg.K):
        freqs = 2.0 * np.pi * k / cfg.K + grid.offsets
        dem = np.exp(-1j * np.outer(t, freqs))              # (N, G)
        s = flat @ dem                                      # (R*M, G)
        p = (np.abs(s) ** 2).reshape(nr, m, grid.size).mean(axis=1) / n
        best = p.max(axis=1, keepdims=True)
        masked = np.where(p == best, rank[None, :], grid.size)
        idx = masked.argmin(axis=1)
        out[:, k] = grid.offsets[idx]
    return out


def estimate_cfo_periodogram(
    sig: ReceivedSignal,
    cfg: SystemConfig,
    grid: FrequencyGrid,
    true_cfos: np.ndarray | None = None,
) -> CfoEstimate:
    """Grid argmax of the spatially averaged periodogram, independently per user.

    Ties are broken toward the smaller |theta|, negative before positive, so
    degenerate inputs resolve the same way on every run.
    """
    omega = estimate_cfo_periodogram_many(sig.samples[None, :, :], cfg, grid)[0]
    idx = np.rint(omega / grid.spacing).astype(int) if grid.spacing > 0 else np.zeros(cfg.K, int)
    res = omega - np.asarray(true_cfos) if true_cfos is not None else None
    return CfoEstimate(omega_hat=omega, grid_index=idx, residual=res)


def estimate_cfo_correlation_many(r_batch: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """Vectorized correlation estimates for a stack of impulse-train blocks.

    r_batch has shape (R, M, N); returns omega_hat with shape (R, K).
    """
    period = cfg.K * cfg.L
    nr, m, n = r_batch.shape
    if n != cfg.N or m != cfg.M:
        raise ValueError(f"batch shape {r_batch.shape} does not match (R, M={cfg.M}, N={cfg.N})")
    if n % period != 0:
        raise PilotLengthError(f"N={n} is not a multiple of the train period K*L={period}")
    nblocks = n // period
    if nblocks < 2:
        raise PilotLengthError("correlation estimator needs at least two impulse blocks")
    z = r_batch.reshape(nr, m, nblocks, cfg.K, cfg.L)
    prod = z[:, :, 1:, :, :] * np.conj(z[:, :, :-1, :, :])
    acc = prod.sum(axis=(1, 2, 4))                          # (R, K)
    return np.angle(acc) / period


def estimate_cfo_correlation(
    sig: ReceivedSignal,
    cfg: SystemConfig,
    true_cfos: np.ndarray | None = None,
) -> CfoEstimate:
    """Lag-K*L correlation estimate from a periodic impulse train.

    Unbiased only while |omega_k| * K*L stays inside (-pi, pi), which the
    delta_max < pi/K validation guarantees with margin.
    """
    omega = estimate_cfo_correlation_many(sig.samples[None, :, :], cfg)[0]
    res = omega - np.asarray(true_cfos) if true_cfos is not None else None
    return CfoEstimate(omega_hat=omega, grid_index=None, residual=res)


def grid_resolves(cfg: SystemConfig) -> bool:
    """Whether the search grid can tell any admissible CFO from zero.

    When half the grid spacing reaches delta_max, every CFO in the prior
    quantizes to the zero offset in the noiseless limit: the estimator is
    blind, and its (flat) rate says nothing about saturation in alpha.
    Exponent-ladder scans skip such rungs.
    """
    return math.pi / cfg.N**cfg.alpha < cfg.delta_max


def op_count_periodogram(cfg: SystemConfig, grid: FrequencyGrid) -> OpCount:
    """Closed-form operation count of the direct periodogram search."""
    g = grid.size
    mults = cfg.K * g * cfg.M * (2 * cfg.N + 1)
    adds = cfg.K * g * cfg.M + cfg.K * g
    return OpCount(complex_mults=mults, complex_adds=adds)


def op_count_correlation(cfg: SystemConfig) -> OpCount:
    """Closed-form operation count of the correlation estimator.

    Independent of K up to the K phase extractions: every received sample
    past the first block enters exactly one lag product no matter how the
    users partition the block.
    """
    period = cfg.K * cfg.L
    if cfg.N % period != 0:
        raise PilotLengthError(f"N={cfg.N} is not a multiple of the train period K*L={period}")
    if cfg.N // period < 2:
        raise PilotLengthError("correlation estimator needs at least two impulse blocks")
    return OpCount(complex_mults=cfg.M * (cfg.N - period), complex_adds=cfg.K)


def counted_periodogram_estimate(
    sig: ReceivedSignal, cfg: SystemConfig, grid: FrequencyGrid
) -> tuple[CfoEstimate, OpCount]:
    """Loop reference for the periodogram: literal phase recursion, instrumented.

    Slow and only meant for small instances; tests use it to pin the closed
    form of op_count_periodogram and to cross-check the vectorized path.
    """
    r = sig.samples
    n = r.shape[1]
    mults = 0
    adds = 0
    omega = np.empty(cfg.K)
    rank = _tie_rank(grid.offsets)
    for k in range(cfg.K):
        values = np.empty(grid.size)
        for gi, theta in enumerate(grid.offsets):
            step = np.exp(-1j * (2.0 * np.pi * k / cfg.K + theta))
            total = 0.0
            for m in range(cfg.M):
                acc = 0.0 + 0.0j
                ph = 1.0 + 0.0j
                for t in range(n):
                    acc += r[m, t] * ph   # one multiply-accumulate
                    ph *= step            # one multiply to advance the phasor
                    mults += 2
                total += abs(acc) ** 2 / n
                mults += 1                # magnitude square
                adds += 1                 # fold this antenna into the average
            values[gi] = total / cfg.M
        best = values.max()
        cand = np.flatnonzero(values == best)
        omega[k] = grid.offsets[cand[np.argmin(rank[cand])]]
        adds += grid.size                 # argmax comparisons
    idx = np.rint(omega / grid.spacing).astype(int) if grid.spacing > 0 else np.zeros(cfg.K, int)
    return CfoEstimate(omega_hat=omega, grid_index=idx), OpCount(mults, adds)


def counted_correlation_estimate(
    sig: ReceivedSignal, cfg: SystemConfig
) -> tuple[CfoEstimate, OpCount]:
    """Loop reference for the correlation estimator, instrumented."""
    period = cfg.K * cfg.L
    r = sig.samples
    n = r.shape[1]
    if n % period != 0:
        raise PilotLengthError(f"N={n} is not a multiple of the train period K*L={period}")
    nblocks = n // period
    if nblocks < 2:
        raise PilotLengthError("correlation estimator needs at least two impulse blocks")
    mults = 0
    adds = 0
    omega = np.empty(cfg.K)
    for k in range(cfg.K):
        acc = 0.0 + 0.0j
        for m in range(cfg.M):
            for b in range(1, nblocks):
                for l in range(cfg.L):
                    t_now = b * period + k * cfg.L + l
                    t_prev = t_now - period
                    acc += r[m, t_now] * np.conj(r[m, t_prev])
                    mults += 1            # one multiply-accumulate
        omega[k] = np.angle(acc) / period
        adds += 1                         # phase extraction
    return CfoEstimate(omega_hat=omega, grid_index=None), OpCount(mults, adds)
