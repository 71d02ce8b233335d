"""Channel estimation, TR-MRC detection, and the empirical SINR probe."""

import math

import numpy as np
import pytest

from cfosim import (
    CfoEstimate,
    CfoVector,
    ChannelEstimate,
    EmpiricalSinr,
    InsufficientTrialsError,
    PowerDelayProfile,
    ReceivedSignal,
    SignalPhase,
    SystemConfig,
    analytic_sinr,
    combine_at,
    draw_cfos,
    draw_channel,
    draw_data_symbols,
    estimate_channel,
    measure_empirical_sinr,
    substream,
    synth_data_rx,
    synth_impulse_pilot_rx,
    trmrc_detect,
    validate_config,
)
from cfosim.receiver import _regress_sinr
from cfosim.sysmodel import complex_normal


def mk_cfg(**kw):
    base = dict(M=4, K=2, L=2, N=40, N_u=120, alpha=1.3,
                gamma=2.0, delta_max=0.1)
    base.update(kw)
    return SystemConfig(**base)


def zero_est(k):
    return CfoEstimate(omega_hat=np.zeros(k))


def test_channel_estimate_requires_impulse_phase():
    cfg = mk_cfg()
    bad = ReceivedSignal(SignalPhase.DATA, np.zeros((cfg.M, cfg.K * cfg.L), complex))
    with pytest.raises(ValueError):
        estimate_channel(bad, zero_est(cfg.K), cfg)


def test_channel_estimate_exact_when_synchronized():
    """Noiseless pilot with the true CFO handed to the estimator returns h."""
    cfg = mk_cfg()
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    ch = draw_channel(cfg, pdp, substream(50, 0))
    cfos = draw_cfos(cfg, substream(50, 1))
    rx = synth_impulse_pilot_rx(cfg, ch, cfos, substream(50, 2))
    clean = rx.samples - complex_normal(substream(50, 2), (cfg.M, cfg.K * cfg.L), cfg.sigma2)
    sig = ReceivedSignal(SignalPhase.IMPULSE_PILOT, clean)
    est = estimate_channel(sig, CfoEstimate(omega_hat=cfos.omega), cfg)
    assert np.max(np.abs(est.h_hat - ch.h)) < 1e-12


def test_channel_estimate_residual_rotation():
    # a CFO mismatch leaves each tap spun by the residual at its pilot time
    cfg = mk_cfg()
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    ch = draw_channel(cfg, pdp, substream(51, 0))
    cfos = draw_cfos(cfg, substream(51, 1))
    rx = synth_impulse_pilot_rx(cfg, ch, cfos, substream(51, 2))
    clean = rx.samples - complex_normal(substream(51, 2), (cfg.M, cfg.K * cfg.L), cfg.sigma2)
    sig = ReceivedSignal(SignalPhase.IMPULSE_PILOT, clean)
    omega_hat = cfos.omega + np.array([0.01, -0.02])
    est = estimate_channel(sig, CfoEstimate(omega_hat=omega_hat), cfg)
    for k in range(cfg.K):
        for l in range(cfg.L):
            t = k * cfg.L + l
            want = ch.h[:, k, l] * np.exp(1j * (cfos.omega[k] - omega_hat[k]) * t)
            assert np.allclose(est.h_hat[:, k, l], want, atol=1e-12)


def test_channel_estimate_noise_floor():
    """Estimation error variance is sigma2 / (K*L*p_u) = 1/(K*L*gamma)."""
    cfg = mk_cfg(M=2000, gamma=4.0)
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    ch = draw_channel(cfg, pdp, substream(52, 0))
    cfos = CfoVector(omega=np.zeros(cfg.K))
    rx = synth_impulse_pilot_rx(cfg, ch, cfos, substream(52, 1))
    est = estimate_channel(rx, zero_est(cfg.K), cfg)
    err = est.h_hat - ch.h
    want = 1.0 / (cfg.K * cfg.L * cfg.gamma)
    assert abs(np.mean(np.abs(err) ** 2) / want - 1.0) < 0.08
    assert abs(err.mean()) < 0.01


def test_trmrc_single_path_scaling():
    # one user, one tap, no noise, no CFO: the combiner output is
    # p_u * sum_m |h_m|^2 * x[t]
    cfg = mk_cfg(M=4, K=1, L=1, N=10, N_u=40, delta_max=0.0)
    frame = validate_config(cfg)
    pdp = PowerDelayProfile.uniform(1, 1)
    ch = draw_channel(cfg, pdp, substream(53, 0))
    cfos = CfoVector(omega=np.zeros(1))
    x = draw_data_symbols(cfg, frame, substream(53, 1))
    rx = synth_data_rx(cfg, frame, ch, cfos, x, substream(53, 2))
    clean = rx.samples - complex_normal(substream(53, 2), (cfg.M, cfg.N_u), cfg.sigma2)
    sig = ReceivedSignal(SignalPhase.DATA, clean)
    det = trmrc_detect(sig, ChannelEstimate(h_hat=ch.h), zero_est(1), cfg, frame)
    gain = cfg.p_u * np.sum(np.abs(ch.h[:, 0, 0]) ** 2)
    want = gain * x[0, frame.data_start : frame.data_end + 1]
    assert det.t0 == frame.data_start
    assert det.x_hat.shape == (1, frame.N_D)
    assert np.allclose(det.x_hat[0], want, atol=1e-10)


def test_trmrc_matches_bruteforce():
    cfg = mk_cfg(M=2, K=2, L=2, N=8, N_u=24, delta_max=0.3)
    frame = validate_config(cfg)
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    ch = draw_channel(cfg, pdp, substream(54, 0))
    cfos = draw_cfos(cfg, substream(54, 1))
    x = draw_data_symbols(cfg, frame, substream(54, 2))
    rx = synth_data_rx(cfg, frame, ch, cfos, x, substream(54, 3))
    h_hat = complex_normal(substream(54, 4), (cfg.M, cfg.K, cfg.L))
    omega_hat = np.array([0.02, -0.05])
    det = trmrc_detect(rx, ChannelEstimate(h_hat=h_hat), CfoEstimate(omega_hat=omega_hat), cfg, frame)

    for k in range(cfg.K):
        for i, t in enumerate(range(frame.data_start, frame.data_end + 1)):
            acc = 0.0j
            for m in range(cfg.M):
                for l in range(cfg.L):
                    acc += (
                        np.conj(h_hat[m, k, l])
                        * rx.samples[m, t + l]
                        * np.exp(-1j * omega_hat[k] * (t + l))
                    )
            assert abs(det.x_hat[k, i] - math.sqrt(cfg.p_u) * acc) < 1e-10


def test_trmrc_guards():
    cfg = mk_cfg()
    frame = validate_config(cfg)
    wrong = ReceivedSignal(SignalPhase.CE_PILOT, np.zeros((cfg.M, cfg.N_u), complex))
    with pytest.raises(ValueError):
        trmrc_detect(wrong, ChannelEstimate(np.zeros((cfg.M, cfg.K, cfg.L), complex)),
                     zero_est(cfg.K), cfg, frame)
    data = ReceivedSignal(SignalPhase.DATA, np.ones((cfg.M, cfg.N_u), complex))
    bad_h = np.full((cfg.M, cfg.K, cfg.L), np.inf, dtype=complex)
    with np.errstate(invalid="ignore"), pytest.raises(FloatingPointError):
        trmrc_detect(data, ChannelEstimate(bad_h), zero_est(cfg.K), cfg, frame)


def test_combine_at_matches_full_detection():
    cfg = mk_cfg(M=3, K=2, L=3, N=30, N_u=90, delta_max=0.2)
    frame = validate_config(cfg)
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    ch = draw_channel(cfg, pdp, substream(55, 0))
    cfos = draw_cfos(cfg, substream(55, 1))
    x = draw_data_symbols(cfg, frame, substream(55, 2))
    rx = synth_data_rx(cfg, frame, ch, cfos, x, substream(55, 3))
    h_hat = ChannelEstimate(complex_normal(substream(55, 4), (cfg.M, cfg.K, cfg.L)))
    est = CfoEstimate(omega_hat=np.array([0.013, -0.021]))
    det = trmrc_detect(rx, h_hat, est, cfg, frame)
    for k in range(cfg.K):
        for t in (frame.data_start, 40, frame.data_end):
            window = np.arange(t, t + cfg.L)
            got = combine_at(rx.samples[:, window], window, h_hat, est, cfg, k, t)
            assert abs(got - det.x_hat[k, t - frame.data_start]) < 1e-12


def test_measure_empirical_sinr_validations():
    cfg = mk_cfg(N=20, N_u=60)
    frame = validate_config(cfg)
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    with pytest.raises(InsufficientTrialsError):
        measure_empirical_sinr(cfg, frame, pdp, k=0, t=frame.data_start,
                               trials=99, seed=0)
    with pytest.raises(ValueError):
        measure_empirical_sinr(cfg, frame, pdp, k=0, t=frame.data_start - 1,
                               trials=100, seed=0)
    with pytest.raises(ValueError):
        measure_empirical_sinr(cfg, frame, pdp, k=0, t=frame.data_end + 1,
                               trials=100, seed=0)
    with pytest.raises(ValueError):
        measure_empirical_sinr(cfg, frame, pdp, k=0, t=frame.data_start,
                               trials=100, seed=0, cfo_reuse=0)


def test_measure_empirical_sinr_result_shapes():
    cfg = mk_cfg(M=2, K=2, L=2, N=20, N_u=60, delta_max=0.01)
    frame = validate_config(cfg)
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    single = measure_empirical_sinr(cfg, frame, pdp, k=0, t=frame.data_start,
                                    trials=100, seed=7)
    assert isinstance(single, EmpiricalSinr)
    assert single.trials == 100 and single.sinr > 0 and single.stderr > 0
    pair = measure_empirical_sinr(cfg, frame, pdp, k=1,
                                  t=[frame.data_start, frame.data_end],
                                  trials=100, seed=7)
    assert isinstance(pair, list) and len(pair) == 2
    assert all(r.noise_var > 0 for r in pair)


def test_empirical_sinr_matches_analytic_when_synchronized():
    """With delta_max = 0 the estimator is exact and phi = 1, so the chain
    must reproduce the closed-form SINR up to Monte Carlo noise."""
    cfg = mk_cfg(M=8, K=2, L=2, N=100, N_u=300, gamma=1.0, delta_max=0.0)
    frame = validate_config(cfg)
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    t = frame.data_start + 5
    emp = measure_empirical_sinr(cfg, frame, pdp, k=0, t=t,
                                 trials=400, seed=9, cfo_reuse=50)
    ana = analytic_sinr(cfg, pdp, 1.0, 0, t)
    assert ana == pytest.approx(1.0 / 0.5625, rel=1e-12)
    assert abs(emp.sinr - ana) / ana < 0.12
    # the regression coefficient recovers the deterministic combiner scale
    scale = cfg.p_u * cfg.M * float(pdp.theta[0])
    assert abs(emp.signal_coeff / scale - 1.0) < 0.1


def test_regress_sinr_recovers_known_mixture():
    rng = substream(56, 0)
    n = 10_000
    xtrue = complex_normal(rng, (n,))
    a = 2.0 + 1.0j
    noise = complex_normal(rng, (n,), var=0.5)
    out = _regress_sinr(a * xtrue + noise, xtrue)
    assert abs(out.signal_coeff - a) < 0.05
    assert abs(out.noise_var - 0.5) < 0.03
    want = abs(a) ** 2 / 0.5
    assert abs(out.sinr - want) / want < 0.08
    assert out.stderr > 0 and out.trials == n
