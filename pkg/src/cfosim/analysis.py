"""Analytic SINR, information rate, and estimator-quality post-processing.

The analytic model
------------------
With residual CFO error Delta_k = omega_hat_k - omega_k, the combiner's
useful coefficient at symbol time t carries a common phase exp(-j*Delta_k*tau)
across all antennas, where tau = t - k*L is the lag since user k's impulse
pilot.  Averaging over the residual distribution leaves the phasor mean

    phi_k(tau) = E[cos(Delta_k * tau)]

as the only trace of the estimator in the rate expression (the imaginary
part vanishes because the residual is symmetrically distributed).  For unit
symbol power the post-combining SINR of user k at lag tau is

    SINR = phi^2 / [ (1 - phi^2)
                     + 1/(M*K*gamma^2*theta_k^2)
                     + 1/(M*gamma*theta_k)
                     + S/(M*K*gamma*theta_k^2)
                     + S/(M*theta_k) ]

with S = sum_q theta_q.  The five denominator terms are, in order: phase
jitter of the useful coefficient (common across antennas, so it does not
shrink with M), channel-estimate noise times receiver noise, channel times
receiver noise, channel-estimate noise times the other users' transmit
streams, and multiuser plus inter-symbol interference.  The phi^2 factor and
the (1 - phi^2) term are exact given phi; the remaining terms drop a
relative O(1/L) fading correction.

Perfect synchronization is phi = 1, which collapses the first term and
makes the rate an upper bound for any estimator.

Information rate per user averages log2(1 + SINR) over the data span and
normalizes by the whole slot length, so pilot overhead shows up as a
multiplicative (N_D / N_u)-style penalty without further bookkeeping.

Estimator post-processing
-------------------------
The remaining helpers turn Monte Carlo residuals into the summary numbers
the experiments report: pooled mean squared error with a log-log slope fit,
the phasor-mean profile over lag, the smallest grid exponent whose rate has
converged, and the SNR required to hit a target rate (bisection).
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphaSearchError,
    BracketError,
    DegenerateFitError,
    InsufficientTrialsError,
)
from .sysmodel import FramePlan, PowerDelayProfile, SystemConfig


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError("dB of a non-positive value")
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class PhasorMeanProfile:
    """Monte Carlo phasor mean phi_k(tau) on the lag grid tau = 0 .. T.

    phi has shape (K, T + 1); row k holds E[cos(Delta_k * tau)].  stderr has
    the same shape.  draws is the number of residual samples behind each row.
    phi[:, 0] is exactly 1 by construction.  A single-row profile stands for
    a residual population pooled across users and answers lookups for any k.
    """

    phi: np.ndarray
    stderr: np.ndarray
    draws: int

    @property
    def max_lag(self) -> int:
        return self.phi.shape[1] - 1

    def at(self, k: int, tau: int) -> float:
        if not (0 <= tau <= self.max_lag):
            raise ValueError(f"lag {tau} outside profile range 0..{self.max_lag}")
        row = 0 if self.phi.shape[0] == 1 else k
        return float(self.phi[row, tau])

    @classmethod
    def constant(cls, n_users: int, max_lag: int, value: float = 1.0) -> "PhasorMeanProfile":
        """Deterministic profile, e.g. value=1.0 for perfect synchronization."""
        phi = np.full((n_users, max_lag + 1), float(value))
        phi[:, 0] = 1.0
        return cls(phi=phi, stderr=np.zeros_like(phi), draws=0)


def phasor_profile(
    residuals: np.ndarray, max_lag: int, check_imag: bool = True
) -> PhasorMeanProfile:
    """Empirical phi_k(tau) from per-user residual draws, shape (R, K).

    Pass residuals of shape (R,) for a single pooled residual population;
    the result is then a one-row profile that answers lookups for every
    user.  The sine counterpart of each mean must be statistically zero
    (the residual law is symmetric); it is checked against its own standard
    error and then discarded.  The check runs at four standard errors, not
    three: the statistics are almost perfectly correlated across lags (for
    small residuals sin(d*tau) ~ d*tau, so every lag tests the same sample
    mean), and a three-sigma cut would abort a fraction of a percent of
    honest runs on noise alone.  Sub-population calls made only for error
    bars may pass check_imag=False once the full population has been vetted.

    The lag axis is processed in chunks so the trig workspace stays small
    for long frames and large draw counts.
    """
    res = np.asarray(residuals, dtype=float)
    if res.ndim == 1:
        res = res[:, None]
    if res.ndim != 2:
        raise ValueError("residuals must be (R,) or (R, K)")
    draws, n_users = res.shape
    if draws < 100:
        raise InsufficientTrialsError(f"need at least 100 residual draws, got {draws}")
    phi = np.empty((n_users, max_lag + 1))
    stderr = np.empty_like(phi)
    scale = 1.0 / math.sqrt(draws)
    chunk = max(1, (1 << 22) // max(1, draws * n_users))
    for lo in range(0, max_lag + 1, chunk):
        tau = np.arange(lo, min(lo + chunk, max_lag + 1))
        arg = res[:, :, None] * tau[None, None, :]
        c = np.cos(arg)
        phi[:, tau] = c.mean(axis=0)
        stderr[:, tau] = c.std(axis=0, ddof=1) * scale
        if check_imag:
            s = np.sin(arg)
            s_mean = np.abs(s.mean(axis=0))
            s_err = s.std(axis=0, ddof=1) * scale
            bad = s_mean > 4.0 * s_err + 1e-12
            if np.any(bad):
                k_bad, i_bad = np.unravel_index(np.argmax(s_mean - 4.0 * s_err), s_mean.shape)
                raise ValueError(
                    "imaginary part of the phasor mean does not vanish "
                    f"(user {k_bad}, lag {tau[i_bad]}): residuals look asymmetric"
                )
    return PhasorMeanProfile(phi=phi, stderr=stderr, draws=draws)


def phasor_mean(
    residuals: np.ndarray, frame: FramePlan, k: int | None = None
) -> PhasorMeanProfile:
    """Phasor-mean profile over the full lag range of a frame.

    residuals is (R,) pooled, or (R, K) per user; pass k to keep a single
    user's column from a per-user array.  Lags run 0 .. data_end, covering
    tau = t - k*L for every user and data-span time.
    """
    res = np.asarray(residuals, dtype=float)
    if k is not None and res.ndim == 2:
        res = res[:, k]
    return phasor_profile(res, frame.data_end)


def broadcast_profile(profile: PhasorMeanProfile, n_users: int) -> PhasorMeanProfile:
    """Replicate a single-row (pooled) profile to all users."""
    if profile.phi.shape[0] == n_users:
        return profile
    if profile.phi.shape[0] != 1:
        raise ValueError("can only broadcast a single-row profile")
    return PhasorMeanProfile(
        phi=np.repeat(profile.phi, n_users, axis=0),
        stderr=np.repeat(profile.stderr, n_users, axis=0),
        draws=profile.draws,
    )


def _muin_var(cfg: SystemConfig, pdp: PowerDelayProfile, k: int) -> float:
    """The phi-independent denominator terms (noise and interference)."""
    theta = pdp.theta
    th_k = float(theta[k])
    s_all = float(theta.sum())
    g = cfg.gamma
    m = cfg.M
    return (
        1.0 / (m * cfg.K * g * g * th_k * th_k)
        + (1.0 / (m * g)) * (1.0 + s_all / (cfg.K * th_k * th_k))
        + s_all / (m * th_k)
    )


def _sinr_from_phi(
    cfg: SystemConfig, pdp: PowerDelayProfile, phi: np.ndarray | float, k: int
) -> np.ndarray | float:
    p2 = np.square(phi)
    return p2 / ((1.0 - p2) + _muin_var(cfg, pdp, k))


def analytic_sinr(
    cfg: SystemConfig,
    pdp: PowerDelayProfile,
    phi: PhasorMeanProfile | float,
    k: int,
    t: int,
) -> float:
    """Post-combining SINR of user k at slot time t.

    phi may be a profile (looked up at lag t - k*L) or a bare number when
    the phasor mean at this lag is already known.
    """
    tau = t - k * cfg.L
    if tau < 0:
        raise ValueError(f"t={t} precedes user {k}'s pilot position {k * cfg.L}")
    val = phi.at(k, tau) if isinstance(phi, PhasorMeanProfile) else float(phi)
    return float(_sinr_from_phi(cfg, pdp, val, k))


@dataclass(frozen=True)
class SinrProfile:
    """Analytic SINR over the data span; sinr[k, i] is at t = t0 + i.

    sif_var[k, i] is the phase-jitter variance 1 - phi^2 at the same time,
    muin_var[k] the time-invariant noise-plus-interference denominator, and
    signal_scale[k] = p_u * M * theta_k the deterministic coefficient the
    normalized expression divides out.
    """

    sinr: np.ndarray
    sif_var: np.ndarray
    muin_var: np.ndarray
    signal_scale: np.ndarray
    t0: int


def sinr_profile(
    cfg: SystemConfig,
    frame: FramePlan,
    pdp: PowerDelayProfile,
    profile: PhasorMeanProfile,
) -> SinrProfile:
    """Vectorized analytic SINR for all users across the data span."""
    prof = broadcast_profile(profile, cfg.K)
    t = np.arange(frame.data_start, frame.data_end + 1)
    out = np.empty((cfg.K, t.size))
    sif = np.empty((cfg.K, t.size))
    muin = np.empty(cfg.K)
    for k in range(cfg.K):
        tau = t - k * cfg.L
        if tau[-1] > prof.max_lag:
            raise ValueError(
                f"profile covers lags up to {prof.max_lag}, need {tau[-1]} for user {k}"
            )
        p2 = np.square(prof.phi[k, tau])
        muin[k] = _muin_var(cfg, pdp, k)
        sif[k] = 1.0 - p2
        out[k] = p2 / (sif[k] + muin[k])
    scale = cfg.p_u * cfg.M * pdp.theta
    return SinrProfile(sinr=out, sif_var=sif, muin_var=muin, signal_scale=scale, t0=frame.data_start)


@dataclass(frozen=True)
class RateResult:
    """Per-user information rate in bits per slot symbol.

    per_t holds the log2(1 + SINR) addends across the data span; their sum
    divided by N_u is rate, so the pilot overhead is part of the normalization.
    """

    k: int
    rate: float
    per_t: np.ndarray


def info_rate(cfg: SystemConfig, frame: FramePlan, sprof: SinrProfile, k: int) -> RateResult:
    addends = np.log2(1.0 + sprof.sinr[k])
    return RateResult(k=k, rate=float(addends.sum() / cfg.N_u), per_t=addends)


def fit_loglog_slope(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and intercept of log10(y) against log10(x)."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.size != ya.size or xa.size < 2:
        raise ValueError("need at least two matching points")
    if np.any(xa <= 0):
        raise ValueError("x values must be positive")
    if np.any(ya <= 0):
        raise DegenerateFitError("non-positive y value, nothing to fit on a log scale")
    slope, intercept = np.polyfit(np.log10(xa), np.log10(ya), 1)
    return float(slope), float(intercept)


@dataclass(frozen=True)
class MseResult:
    """Pooled MSE per pilot length with its fitted log-log slope."""

    n: np.ndarray
    mse: np.ndarray
    stderr: np.ndarray
    trials: np.ndarray
    slope: float
    intercept: float


def mse_and_slope(points: Sequence[tuple[int, np.ndarray]]) -> MseResult:
    """Mean squared residual at each pilot length and the decay slope.

    Each entry pairs a pilot length N with the pooled residual draws
    (flattened across trials and users) collected at that length.
    """
    if len(points) < 3:
        raise ValueError(f"need at least 3 pilot lengths for a slope, got {len(points)}")
    ns, mses, errs, counts = [], [], [], []
    for n, res in points:
        arr = np.asarray(res, dtype=float).ravel()
        if arr.size < 100:
            raise InsufficientTrialsError(
                f"need at least 100 residual draws at N={n}, got {arr.size}"
            )
        sq = arr * arr
        mse = float(sq.mean())
        if mse == 0.0:
            raise DegenerateFitError(f"zero MSE at N={n}; slope fit would be degenerate")
        ns.append(int(n))
        mses.append(mse)
        errs.append(float(sq.std(ddof=1) / math.sqrt(sq.size)))
        counts.append(arr.size)
    if len(set(ns)) != len(ns):
        raise ValueError("pilot lengths must be distinct")
    slope, intercept = fit_loglog_slope(ns, mses)
    return MseResult(
        n=np.array(ns),
        mse=np.array(mses),
        stderr=np.array(errs),
        trials=np.array(counts),
        slope=slope,
        intercept=intercept,
    )


def find_alpha_star(
    sweep: Sequence[tuple[float, float]], delta: float = 0.02, step: float = 0.1
) -> float:
    """Smallest grid exponent whose rate is within delta of the next rung.

    sweep pairs each exponent with its achieved rate; entries are sorted
    here, and a rung qualifies when the next entry sits one `step` above it
    and the relative rate change is below delta.
    """
    pts = sorted(sweep, key=lambda p: p[0])
    if len(pts) < 2:
        raise AlphaSearchError("need at least two exponent rungs to compare")
    for (a0, r0), (a1, r1) in zip(pts, pts[1:]):
        if abs((a1 - a0) - step) > 1e-9:
            continue
        if r0 <= 0:
            continue
        if abs(r1 - r0) / r0 < delta:
            return float(a0)
    raise AlphaSearchError(
        f"no exponent in {pts[0][0]:g}..{pts[-1][0]:g} converged within {delta:g}"
    )


def scan_alpha_star(
    evaluate: Callable[[float], float],
    ladder: Sequence[float],
    delta: float = 0.02,
    step: float = 0.1,
    resolves: Callable[[float], bool] | None = None,
) -> tuple[float, list[tuple[float, float]]]:
    """Walk an exponent ladder lazily, stopping at the first converged rung.

    evaluate(alpha) -> rate is called rung by rung, cheapest grids first,
    and the scan returns as soon as a consecutive pair passes the delta
    test, so the expensive high-exponent rungs are only computed when the
    rate is still moving.  Rungs failing the optional `resolves` predicate
    are skipped without evaluation: a grid too coarse to separate any CFO
    from zero yields a flat rate segment that has nothing to do with
    saturation.  Returns (alpha_star, evaluated sweep); raises
    AlphaSearchError when the ladder ends without convergence.
    """
    sweep: list[tuple[float, float]] = []
    for a in ladder:
        a = float(a)
        if resolves is not None and not resolves(a):
            continue
        sweep.append((a, float(evaluate(a))))
        if len(sweep) >= 2:
            try:
                return find_alpha_star(sweep, delta=delta, step=step), sweep
            except AlphaSearchError:
                pass
    raise AlphaSearchError(
        f"rate not converged within delta={delta:g} on the ladder "
        f"{float(ladder[0]):g}..{float(ladder[-1]):g}"
    )


@dataclass(frozen=True)
class RequiredSnr:
    """Bisection output: the smallest SNR (dB) meeting the rate target."""

    gamma_db: float
    rate: float
    iterations: int


def required_snr(
    evaluate: Callable[[float], float],
    target: float,
    lo_db: float = -25.0,
    hi_db: float = 0.0,
    tol_db: float = 0.05,
    max_iter: int = 40,
) -> RequiredSnr:
    """Bisect a monotone rate-vs-SNR curve for the SNR achieving `target`.

    evaluate maps an SNR in dB to a rate.  For a Monte Carlo evaluator, use
    common random numbers across calls so the curve stays monotone.
    """
    if hi_db <= lo_db:
        raise ValueError("empty bracket")
    r_lo = evaluate(lo_db)
    if r_lo >= target:
        raise BracketError(
            f"target {target:g} already met at the low end ({lo_db:g} dB gives {r_lo:g})"
        )
    r_hi = evaluate(hi_db)
    if r_hi < target:
        raise BracketError(
            f"target {target:g} unreachable at the high end ({hi_db:g} dB gives {r_hi:g})"
        )
    iters = 0
    rate_hi = r_hi
    while hi_db - lo_db > tol_db and iters < max_iter:
        mid = 0.5 * (lo_db + hi_db)
        r_mid = evaluate(mid)
        if r_mid >= target:
            hi_db, rate_hi = mid, r_mid
        else:
            lo_db = mid
        iters += 1
    return RequiredSnr(gamma_db=0.5 * (lo_db + hi_db), rate=rate_hi, iterations=iters)
