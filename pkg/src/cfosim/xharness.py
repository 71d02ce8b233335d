"""Seeded Monte Carlo experiment harness with CSV/JSON emission.

Experiments
-----------
mse-sweep            MSE of the CFO estimators vs pilot length N, plus the
                     fitted log-log decay slope per estimator.
tradeoff             Rate vs operation count across the grid-exponent ladder
                     at fixed N, the converged exponent alpha_star, and the
                     correlation baseline (which gets the whole slot as its
                     pilot; see _run_tradeoff).
rate-vs-nd           Rate vs slot duration N_u for three synchronization
                     scenarios (zero CFO, periodogram, correlation) with the
                     staleness loss of each estimator; the grid exponent is
                     re-selected per slot duration.
array-gain           Required SNR (bisection over gamma in dB) to reach a
                     target per-user rate, per antenna count M.
phasor-convergence   Phasor mean at the last data index vs M with the SNR
                     scaled as 1/sqrt(M); real and imaginary parts reported.
validate-sinr        Full-chain empirical SINR against the analytic value.

Determinism contract
--------------------
Every random draw is keyed by (grid-point seed, trial index, stream label),
where the grid-point seed is derived from the master seed and small
structural integers naming the grid point.  Results are therefore bitwise
independent of the worker count and of other grid points' trial budgets.
Workers are threads: the hot loops sit in BLAS/ufunc kernels that release
the GIL, and each trial touches no shared mutable state.

Emission
--------
emit_results writes one row per (grid point, metric): a CSV with the fixed
header (experiment, sorted parameter names, metric, value, stderr, trials,
seed), RFC-4180 quoting and LF line ends, or a JSON array of objects with
identical keys.  Numeric values are rounded to 12 significant digits in
both formats so the two serializations parse back to equal row sets and
reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (
    PhasorMeanProfile,
    analytic_sinr,
    db_to_linear,
    find_alpha_star,
    info_rate,
    mse_and_slope,
    phasor_profile,
    required_snr,
    scan_alpha_star,
    sinr_profile,
)
from .errors import AlphaSearchError, CfoSimError
from .estimators import (
    build_grid,
    estimate_cfo_correlation,
    estimate_cfo_periodogram,
    grid_resolves,
    op_count_correlation,
    op_count_periodogram,
)
from .receiver import measure_empirical_sinr
from .sysmodel import (
    STREAM_CFO,
    STREAM_CHANNEL,
    STREAM_NOISE_CE,
    STREAM_NOISE_TRAIN,
    PowerDelayProfile,
    SystemConfig,
    derive_delta_max,
    draw_cfos,
    draw_channel,
    substream,
    synth_ce_pilot_rx,
    synth_impulse_train_rx,
    validate_config,
)

# Carrier 2 GHz, bandwidth 1 MHz, oscillators accurate to 0.1 ppm.
DEFAULT_DELTA_MAX = derive_delta_max(2.0e9, 1.0e6, 1.0e-7)

ALPHA_LADDER = tuple(round(1.0 + 0.1 * i, 1) for i in range(11))

EXPERIMENTS = (
    "mse-sweep",
    "tradeoff",
    "rate-vs-nd",
    "array-gain",
    "phasor-convergence",
    "validate-sinr",
)

_COMMON = {"K": 10, "L": 5, "delta_max": DEFAULT_DELTA_MAX}

_DEFAULT_PARAMS: dict[str, dict] = {
    "mse-sweep": {
        **_COMMON,
        "M": 80,
        "gamma_db": -10.0,
        "alpha": 1.6,
        "N_u": 5000,
        "n_values": (500, 1000, 2000, 4000),
        "estimator": "both",
    },
    "tradeoff": {
        **_COMMON,
        "M": 80,
        "gamma_db": -12.0,
        "N": 1000,
        "N_u": 5000,
        "alphas": ALPHA_LADDER,
        "delta": 0.02,
        "corr_pilot_len": None,
        "stop_after_alpha_star": False,
    },
    "rate-vs-nd": {
        **_COMMON,
        "M": 40,
        "gamma_db": -10.0,
        "N": 2000,
        "n_u_values": (2000, 3000, 4000, 5000),
        "alphas": ALPHA_LADDER,
        "delta": 0.02,
    },
    "array-gain": {
        **_COMMON,
        "m_values": (40, 80),
        "N": 2000,
        "N_u": 5000,
        "target_rate": 1.0,
        "lo_db": -25.0,
        "hi_db": 0.0,
        "tol_db": 0.05,
        "alphas": ALPHA_LADDER,
        "delta": 0.02,
    },
    "phasor-convergence": {
        **_COMMON,
        "m_values": (20, 40, 80, 160),
        "N": 2000,
        "N_u": 5000,
        "gamma0_db": -14.0,
        "m0": 20,
        "alpha": 1.6,
    },
    "validate-sinr": {
        **_COMMON,
        "M": 40,
        "gamma_db": -10.0,
        "N": 2000,
        "N_u": 2000,
        "alpha": 1.6,
        "t_points": ("start", "end"),
        "cfo_reuse": 1,
        "phi_trials": 400,
    },
}

_DEFAULT_TRIALS = {
    "mse-sweep": 200,
    "tradeoff": 200,
    "rate-vs-nd": 200,
    "array-gain": 200,
    "phasor-convergence": 1000,
    "validate-sinr": 10000,
}

# Leading integers of grid-point seed keys, one namespace per grid family.
_KEY_MSE_PERIODOGRAM = 0
_KEY_MSE_CORRELATION = 1
_KEY_ALPHA_SWEEP = 2
_KEY_CORR_BASELINE = 3
_KEY_BISECTION = 4
_KEY_PHASOR = 5
_KEY_CHAIN = 6
_KEY_CHAIN_PHI = 7

_TRIAL_BLOCK = 32


@dataclass
class ExperimentSpec:
    """A runnable experiment: id, parameter overrides, and budgets."""

    experiment: str
    params: dict = field(default_factory=dict)
    trials: int | None = None
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    params: dict
    metric: str
    value: float
    stderr: float
    trials: int
    seed: int


def _gp_seed(master_seed: int, *key: int) -> int:
    """Integer seed for one grid point, stable across runs and workers."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def _alpha_key(alpha: float) -> int:
    return int(round(alpha * 10))


def _mk_cfg(p: dict, n: int, alpha: float, gamma_db: float, m: int, n_u: int) -> SystemConfig:
    return SystemConfig(
        M=m,
        K=p["K"],
        L=p["L"],
        N=n,
        N_u=n_u,
        alpha=alpha,
        gamma=db_to_linear(gamma_db),
        delta_max=p["delta_max"],
    )


def _uniform_pdp(p: dict) -> PowerDelayProfile:
    return PowerDelayProfile.uniform(p["K"], p["L"])


def cfo_residuals(
    cfg: SystemConfig,
    pdp: PowerDelayProfile,
    estimator: str,
    trials: int,
    seed: int,
    workers: int = 1,
) -> np.ndarray:
    """Monte Carlo residuals omega_hat - omega, shape (trials, K).

    estimator is "periodogram" (run on the constant-envelope pilot slot) or
    "correlation" (run on the periodic impulse train of the same length N).
    Trials are split into fixed blocks dispatched to a thread pool; every
    draw is keyed by (seed, trial, stream), so the output is bitwise
    identical for any worker count.
    """
    if estimator not in ("periodogram", "correlation"):
        raise ValueError(f"unknown estimator {estimator!r}")
    if trials < 1:
        raise ValueError("trials must be positive")
    grid = build_grid(cfg) if estimator == "periodogram" else None

    def run_block(idx: range) -> np.ndarray:
        out = np.empty((len(idx), cfg.K))
        for row, i in enumerate(idx):
            h = draw_channel(cfg, pdp, substream(seed, i, STREAM_CHANNEL))
            cfos = draw_cfos(cfg, substream(seed, i, STREAM_CFO))
            if estimator == "periodogram":
                r = synth_ce_pilot_rx(cfg, h, cfos, substream(seed, i, STREAM_NOISE_CE))
                est = estimate_cfo_periodogram(r, cfg, grid)
            else:
                r = synth_impulse_train_rx(cfg, h, cfos, substream(seed, i, STREAM_NOISE_TRAIN))
                est = estimate_cfo_correlation(r, cfg)
            out[row] = est.omega_hat - cfos.omega
        return out

    blocks = [range(b, min(b + _TRIAL_BLOCK, trials)) for b in range(0, trials, _TRIAL_BLOCK)]
    if workers <= 1 or len(blocks) == 1:
        parts = [run_block(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_block, blocks))
    return np.concatenate(parts, axis=0)


def _rate_from_residuals(
    cfg: SystemConfig,
    pdp: PowerDelayProfile,
    residuals: np.ndarray,
    k: int = 0,
    with_stderr: bool = True,
) -> tuple[float, float]:
    """Per-user rate implied by a residual population, pooled across users.

    The profile is built from the pooled draws (users share a PDP in every
    experiment default, so their residuals are exchangeable).  The error bar
    comes from batch means over trial batches; pass with_stderr=False inside
    optimization loops that only need the value.
    """
    frame = validate_config(cfg)
    pooled = residuals.ravel()
    prof = phasor_profile(pooled, frame.data_end)
    rate = info_rate(cfg, frame, sinr_profile(cfg, frame, pdp, prof), k).rate
    if not with_stderr:
        return rate, 0.0
    n_trials = residuals.shape[0] if residuals.ndim == 2 else residuals.size
    per_trial = pooled.size // n_trials
    n_batches = min(10, (pooled.size // 100), n_trials)
    if n_batches < 2:
        return rate, 0.0
    rows_per = n_trials // n_batches
    vals = []
    for b in range(n_batches):
        chunk = pooled[b * rows_per * per_trial : (b + 1) * rows_per * per_trial]
        bprof = phasor_profile(chunk, frame.data_end, check_imag=False)
        vals.append(info_rate(cfg, frame, sinr_profile(cfg, frame, pdp, bprof), k).rate)
    return rate, float(np.std(vals, ddof=1) / math.sqrt(n_batches))


def _zero_cfo_rate(cfg: SystemConfig, pdp: PowerDelayProfile, k: int = 0) -> float:
    frame = validate_config(cfg)
    prof = PhasorMeanProfile.constant(cfg.K, frame.data_end)
    return info_rate(cfg, frame, sinr_profile(cfg, frame, pdp, prof), k).rate


def _row_factory(experiment: str, seed: int):
    def row(metric: str, params: dict, value: float, stderr: float, trials: int) -> ResultRow:
        return ResultRow(
            experiment=experiment,
            params=params,
            metric=metric,
            value=float(value),
            stderr=float(stderr),
            trials=int(trials),
            seed=seed,
        )

    return row


def _run_mse_sweep(p: dict, trials: int, seed: int, workers: int) -> list[ResultRow]:
    row = _row_factory("mse-sweep", seed)
    pdp = _uniform_pdp(p)
    which = (
        ("periodogram", "correlation") if p["estimator"] == "both" else (str(p["estimator"]),)
    )
    rows = []
    for est in which:
        key0 = _KEY_MSE_PERIODOGRAM if est == "periodogram" else _KEY_MSE_CORRELATION
        points = []
        for n in p["n_values"]:
            cfg = _mk_cfg(p, int(n), p["alpha"], p["gamma_db"], p["M"], p["N_u"])
            validate_config(cfg)
            res = cfo_residuals(cfg, pdp, est, trials, _gp_seed(seed, key0, int(n)), workers)
            pooled = res.ravel()
            sq = pooled * pooled
            params = {"estimator": est, "N": int(n), "M": p["M"], "gamma_db": p["gamma_db"]}
            if est == "periodogram":
                params["alpha"] = p["alpha"]
            rows.append(
                row(
                    "mse",
                    params,
                    sq.mean(),
                    sq.std(ddof=1) / math.sqrt(sq.size),
                    trials,
                )
            )
            points.append((int(n), pooled))
        fit = mse_and_slope(points)
        params = {"estimator": est, "M": p["M"], "gamma_db": p["gamma_db"]}
        if est == "periodogram":
            params["alpha"] = p["alpha"]
        rows.append(row("slope", params, fit.slope, 0.0, trials))
    return rows


def _run_tradeoff(p: dict, trials: int, seed: int, workers: int) -> list[ResultRow]:
    row = _row_factory("tradeoff", seed)
    pdp = _uniform_pdp(p)
    n = int(p["N"])
    rows = []
    rate_cache: dict[float, tuple[float, float]] = {}

    def rung_cfg(alpha: float) -> SystemConfig:
        return _mk_cfg(p, n, alpha, p["gamma_db"], p["M"], p["N_u"])

    def rung_rate(alpha: float) -> float:
        cfg = rung_cfg(alpha)
        res = cfo_residuals(
            cfg, pdp, "periodogram", trials, _gp_seed(seed, _KEY_ALPHA_SWEEP, _alpha_key(alpha)), workers
        )
        rate_cache[alpha] = _rate_from_residuals(cfg, pdp, res)
        return rate_cache[alpha][0]

    if p["stop_after_alpha_star"]:
        a_star, sweep = scan_alpha_star(
            rung_rate,
            p["alphas"],
            delta=p["delta"],
            resolves=lambda a: grid_resolves(rung_cfg(a)),
        )
    else:
        # Emit the full ladder for the rate/op-count figure, but anchor the
        # saturation search on rungs whose grid actually resolves the prior.
        sweep = [(float(a), rung_rate(float(a))) for a in p["alphas"]]
        usable = [(a, r) for a, r in sweep if grid_resolves(rung_cfg(a))]
        a_star = find_alpha_star(usable, delta=p["delta"])
    for a, _rate in sweep:
        cfg = _mk_cfg(p, n, a, p["gamma_db"], p["M"], p["N_u"])
        oc = op_count_periodogram(cfg, build_grid(cfg))
        params = {"estimator": "periodogram", "N": n, "alpha": a}
        rate, se = rate_cache[a]
        rows.append(row("rate", params, rate, se, trials))
        rows.append(row("op_count", params, float(oc.total), 0.0, 0))
    rows.append(row("alpha_star", {"estimator": "periodogram", "N": n}, a_star, 0.0, trials))

    # Correlation baseline.  Its natural operating mode stretches the
    # periodic pilot across the entire slot, so by default it gets N_u
    # samples; override with corr_pilot_len to study a shorter train.
    n_corr = int(p["corr_pilot_len"] or p["N_u"])
    cfg_c = _mk_cfg(p, n_corr, p["alphas"][0], p["gamma_db"], p["M"], p["N_u"])
    res_c = cfo_residuals(
        cfg_c, pdp, "correlation", trials, _gp_seed(seed, _KEY_CORR_BASELINE, n_corr), workers
    )
    rate_c, se_c = _rate_from_residuals(cfg_c, pdp, res_c)
    params_c = {"estimator": "correlation", "N": n_corr}
    rows.append(row("rate", params_c, rate_c, se_c, trials))
    rows.append(row("op_count", params_c, float(op_count_correlation(cfg_c).total), 0.0, 0))
    return rows


def _run_rate_vs_nd(p: dict, trials: int, seed: int, workers: int) -> list[ResultRow]:
    row = _row_factory("rate-vs-nd", seed)
    pdp = _uniform_pdp(p)
    n = int(p["N"])
    rows = []
    res_cache: dict[float, np.ndarray] = {}
    corr_res: np.ndarray | None = None
    for n_u in p["n_u_values"]:
        n_u = int(n_u)
        cfg0 = _mk_cfg(p, n, p["alphas"][0], p["gamma_db"], p["M"], n_u)
        frame = validate_config(cfg0)
        r0 = _zero_cfo_rate(cfg0, pdp)
        base = {"N_u": n_u, "N_D": frame.N_D}
        rows.append(row("rate", {**base, "scenario": "zero-cfo"}, r0, 0.0, 0))

        def rung_rate(alpha: float) -> float:
            cfg = _mk_cfg(p, n, alpha, p["gamma_db"], p["M"], n_u)
            if alpha not in res_cache:
                # Residuals depend on (N, alpha) but not on N_u, so they are
                # shared across the slot-duration grid.
                res_cache[alpha] = cfo_residuals(
                    cfg,
                    pdp,
                    "periodogram",
                    trials,
                    _gp_seed(seed, _KEY_ALPHA_SWEEP, _alpha_key(alpha)),
                    workers,
                )
            return _rate_from_residuals(cfg, pdp, res_cache[alpha], with_stderr=False)[0]

        try:
            a_star, _sweep = scan_alpha_star(
                rung_rate,
                p["alphas"],
                delta=p["delta"],
                resolves=lambda a: grid_resolves(
                    _mk_cfg(p, n, a, p["gamma_db"], p["M"], n_u)
                ),
            )
        except AlphaSearchError as e:
            raise AlphaSearchError(f"N_u={n_u}: {e}") from e
        cfg_p = _mk_cfg(p, n, a_star, p["gamma_db"], p["M"], n_u)
        rate_p, se_p = _rate_from_residuals(cfg_p, pdp, res_cache[a_star])
        sc_p = {**base, "scenario": "periodogram", "alpha": a_star}
        rows.append(row("alpha_star", {**base, "scenario": "periodogram"}, a_star, 0.0, trials))
        rows.append(row("rate", sc_p, rate_p, se_p, trials))
        rows.append(row("loss_pct", sc_p, 100.0 * (r0 - rate_p) / r0, 100.0 * se_p / r0, trials))

        if corr_res is None:
            corr_res = cfo_residuals(
                cfg0, pdp, "correlation", trials, _gp_seed(seed, _KEY_CORR_BASELINE, n), workers
            )
        rate_c, se_c = _rate_from_residuals(cfg0, pdp, corr_res)
        sc_c = {**base, "scenario": "correlation"}
        rows.append(row("rate", sc_c, rate_c, se_c, trials))
        rows.append(row("loss_pct", sc_c, 100.0 * (r0 - rate_c) / r0, 100.0 * se_c / r0, trials))
    return rows


def _run_array_gain(p: dict, trials: int, seed: int, workers: int) -> list[ResultRow]:
    row = _row_factory("array-gain", seed)
    pdp = _uniform_pdp(p)
    n = int(p["N"])
    rows = []
    for m in p["m_values"]:
        m = int(m)
        base = {"M": m, "N": n, "target_rate": p["target_rate"]}

        def rate_zero(gamma_db: float) -> float:
            return _zero_cfo_rate(_mk_cfg(p, n, p["alphas"][0], gamma_db, m, p["N_u"]), pdp)

        ideal = required_snr(
            rate_zero, p["target_rate"], p["lo_db"], p["hi_db"], p["tol_db"]
        )
        rows.append(
            row("zero_cfo_required_snr_db", base, ideal.gamma_db, p["tol_db"] / 2, 0)
        )

        def rung_rate(alpha: float) -> float:
            cfg = _mk_cfg(p, n, alpha, ideal.gamma_db, m, p["N_u"])
            res = cfo_residuals(
                cfg,
                pdp,
                "periodogram",
                trials,
                _gp_seed(seed, _KEY_ALPHA_SWEEP, m, _alpha_key(alpha)),
                workers,
            )
            return _rate_from_residuals(cfg, pdp, res, with_stderr=False)[0]

        try:
            a_star, _sweep = scan_alpha_star(
                rung_rate,
                p["alphas"],
                delta=p["delta"],
                resolves=lambda a: grid_resolves(
                    _mk_cfg(p, n, a, ideal.gamma_db, m, p["N_u"])
                ),
            )
        except AlphaSearchError as e:
            raise AlphaSearchError(f"M={m}: {e}") from e
        rows.append(row("alpha_star", base, a_star, 0.0, trials))

        # Common random numbers: the same grid-point seed at every gamma
        # keeps the Monte Carlo rate monotone in gamma for the bisection.
        crn_seed = _gp_seed(seed, _KEY_BISECTION, m)

        def rate_mc(gamma_db: float) -> float:
            cfg = _mk_cfg(p, n, a_star, gamma_db, m, p["N_u"])
            res = cfo_residuals(cfg, pdp, "periodogram", trials, crn_seed, workers)
            return _rate_from_residuals(cfg, pdp, res, with_stderr=False)[0]

        found = required_snr(rate_mc, p["target_rate"], p["lo_db"], p["hi_db"], p["tol_db"])
        rows.append(
            row(
                "required_snr_db",
                {**base, "alpha": a_star},
                found.gamma_db,
                p["tol_db"] / 2,
                trials,
            )
        )
    return rows


def _run_phasor_convergence(p: dict, trials: int, seed: int, workers: int) -> list[ResultRow]:
    row = _row_factory("phasor-convergence", seed)
    pdp = _uniform_pdp(p)
    n = int(p["N"])
    rows = []
    for m in p["m_values"]:
        m = int(m)
        # SNR scaled as 1/sqrt(M) from the anchor point (m0, gamma0_db).
        gamma_db = p["gamma0_db"] - 5.0 * math.log10(m / p["m0"])
        cfg = _mk_cfg(p, n, p["alpha"], gamma_db, m, p["N_u"])
        frame = validate_config(cfg)
        res = cfo_residuals(
            cfg, pdp, "periodogram", trials, _gp_seed(seed, _KEY_PHASOR, m), workers
        )
        pooled = res.ravel()
        tau = frame.data_end  # last data index as seen by the first user
        c = np.cos(pooled * tau)
        s = np.sin(pooled * tau)
        params = {"M": m, "gamma_db": round(gamma_db, 6), "tau": tau}
        scale = 1.0 / math.sqrt(pooled.size)
        rows.append(row("phi_final_real", params, c.mean(), c.std(ddof=1) * scale, trials))
        rows.append(row("phi_final_imag", params, s.mean(), s.std(ddof=1) * scale, trials))
    return rows


def _run_validate_sinr(p: dict, trials: int, seed: int, workers: int) -> list[ResultRow]:
    row = _row_factory("validate-sinr", seed)
    pdp = _uniform_pdp(p)
    cfg = _mk_cfg(p, int(p["N"]), p["alpha"], p["gamma_db"], p["M"], p["N_u"])
    frame = validate_config(cfg)
    resolve = {"start": frame.data_start, "end": frame.data_end}
    ts = [int(resolve.get(t, t) if isinstance(t, str) else t) for t in p["t_points"]]
    grid = build_grid(cfg)
    measured = measure_empirical_sinr(
        cfg,
        frame,
        pdp,
        k=0,
        t=ts,
        trials=trials,
        seed=_gp_seed(seed, _KEY_CHAIN, 0),
        grid=grid,
        cfo_reuse=int(p["cfo_reuse"]),
    )
    res = cfo_residuals(
        cfg,
        pdp,
        "periodogram",
        int(p["phi_trials"]),
        _gp_seed(seed, _KEY_CHAIN_PHI, 0),
        workers,
    )
    prof = phasor_profile(res.ravel(), frame.data_end)
    rows = []
    for t, emp in zip(ts, measured):
        ana = analytic_sinr(cfg, pdp, prof, 0, t)
        params = {"t": t, "M": p["M"], "gamma_db": p["gamma_db"]}
        rows.append(row("empirical_sinr", params, emp.sinr, emp.stderr, trials))
        rows.append(row("analytic_sinr", params, ana, 0.0, int(p["phi_trials"])))
        rows.append(
            row("rel_err_pct", params, 100.0 * abs(emp.sinr - ana) / ana, 0.0, trials)
        )
    return rows


_RUNNERS = {
    "mse-sweep": _run_mse_sweep,
    "tradeoff": _run_tradeoff,
    "rate-vs-nd": _run_rate_vs_nd,
    "array-gain": _run_array_gain,
    "phasor-convergence": _run_phasor_convergence,
    "validate-sinr": _run_validate_sinr,
}


def resolve_spec(spec: ExperimentSpec) -> tuple[dict, int, int]:
    """Merged parameters, trial count, and worker count for a spec.

    Raises ValueError for an unknown experiment, unknown parameter names,
    or non-positive budgets, before any compute starts.
    """
    if spec.experiment not in _RUNNERS:
        raise ValueError(
            f"unknown experiment {spec.experiment!r}; choose from {', '.join(EXPERIMENTS)}"
        )
    defaults = _DEFAULT_PARAMS[spec.experiment]
    unknown = set(spec.params) - set(defaults)
    if unknown:
        raise ValueError(
            f"unknown parameter(s) for {spec.experiment}: {', '.join(sorted(unknown))}"
        )
    params = {**defaults, **spec.params}
    trials = _DEFAULT_TRIALS[spec.experiment] if spec.trials is None else spec.trials
    if trials <= 0:
        raise ValueError("trials must be positive")
    if spec.workers < 1:
        raise ValueError("workers must be at least 1")
    return params, trials, spec.workers


def validate_spec(spec: ExperimentSpec) -> None:
    """Check the spec and construct every static grid point's SystemConfig."""
    p, _trials, _workers = resolve_spec(spec)
    exp = spec.experiment
    if exp == "mse-sweep":
        for n in p["n_values"]:
            validate_config(_mk_cfg(p, int(n), p["alpha"], p["gamma_db"], p["M"], p["N_u"]))
    elif exp == "tradeoff":
        for a in p["alphas"]:
            validate_config(_mk_cfg(p, int(p["N"]), float(a), p["gamma_db"], p["M"], p["N_u"]))
        n_corr = int(p["corr_pilot_len"] or p["N_u"])
        validate_config(_mk_cfg(p, n_corr, p["alphas"][0], p["gamma_db"], p["M"], p["N_u"]))
    elif exp == "rate-vs-nd":
        for n_u in p["n_u_values"]:
            for a in p["alphas"]:
                validate_config(_mk_cfg(p, int(p["N"]), float(a), p["gamma_db"], p["M"], int(n_u)))
    elif exp == "array-gain":
        for m in p["m_values"]:
            for a in p["alphas"]:
                validate_config(_mk_cfg(p, int(p["N"]), float(a), p["hi_db"], int(m), p["N_u"]))
    elif exp == "phasor-convergence":
        for m in p["m_values"]:
            gamma_db = p["gamma0_db"] - 5.0 * math.log10(int(m) / p["m0"])
            validate_config(_mk_cfg(p, int(p["N"]), p["alpha"], gamma_db, int(m), p["N_u"]))
    elif exp == "validate-sinr":
        cfg = _mk_cfg(p, int(p["N"]), p["alpha"], p["gamma_db"], p["M"], p["N_u"])
        frame = validate_config(cfg)
        for t in p["t_points"]:
            if isinstance(t, str) and t not in ("start", "end"):
                raise ValueError(f"t_points entries must be ints or 'start'/'end', got {t!r}")
            if isinstance(t, int) and not (frame.data_start <= t <= frame.data_end):
                raise ValueError(f"t={t} outside the data span")


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    """Validate and execute one experiment, returning its result rows."""
    params, trials, workers = resolve_spec(spec)
    try:
        return _RUNNERS[spec.experiment](params, trials, spec.seed, workers)
    except CfoSimError as e:
        raise type(e)(f"{spec.experiment}: {e}") from e


def _fmt_number(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return _fmt_number(v)


def _json_cell(v):
    if v is None or isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(f"{float(v):.12g}")


def emit_results(rows: list[ResultRow], fmt: str = "csv", path: str | None = None) -> str:
    """Serialize rows to CSV or JSON; write to path if given.

    Returns the serialized text either way.  Values are rounded to 12
    significant digits in both formats, so CSV and JSON parse back to the
    same numbers and repeated runs emit identical bytes.
    """
    if not rows:
        raise ValueError("no rows to emit")
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    param_keys: set[str] = set()
    for r in rows:
        param_keys.update(r.params)
    keys = sorted(param_keys)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["experiment", *keys, "metric", "value", "stderr", "trials", "seed"])
        for r in rows:
            writer.writerow(
                [
                    r.experiment,
                    *[_csv_cell(r.params.get(k)) for k in keys],
                    r.metric,
                    _fmt_number(r.value),
                    _fmt_number(r.stderr),
                    str(r.trials),
                    str(r.seed),
                ]
            )
        text = buf.getvalue()
    else:
        objs = []
        for r in rows:
            obj = {"experiment": r.experiment}
            for k in keys:
                obj[k] = _json_cell(r.params.get(k))
            obj.update(
                metric=r.metric,
                value=_json_cell(r.value),
                stderr=_json_cell(r.stderr),
                trials=r.trials,
                seed=r.seed,
            )
            objs.append(obj)
        text = json.dumps(objs, indent=2) + "\n"
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as e:
            raise OSError(f"could not write results to {path}: {e}") from e
    return text
