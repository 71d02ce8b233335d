"""Frame arithmetic, random draws, and the received-signal synthesizers.

Noiseless checks reconstruct the noise a synthesizer drew (same substream,
same shape, same order) and subtract it, since configs require sigma2 > 0.
"""

import dataclasses
import math

import numpy as np
import pytest

from cfosim import (
    CfoVector,
    FrameError,
    OverlapError,
    PilotLengthError,
    PowerDelayProfile,
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
from cfosim.sysmodel import complex_normal


def mk_cfg(**kw):
    base = dict(M=3, K=4, L=3, N=32, N_u=120, alpha=1.3,
                gamma=2.0, delta_max=0.05)
    base.update(kw)
    return SystemConfig(**base)


def test_frame_plan_long_slots():
    for n_u, n_d in ((2000, 1942), (5000, 4942)):
        cfg = mk_cfg(K=10, L=5, N=1000, N_u=n_u, delta_max=math.pi / 2500)
        frame = validate_config(cfg)
        assert frame.N_D == n_d
        assert frame.N_D == n_u - cfg.K * cfg.L - 2 * (cfg.L - 1)
        assert frame.data_start == cfg.K * cfg.L + cfg.L - 1 == 54
        assert frame.data_end == n_u - cfg.L
        assert frame.data_end - frame.data_start + 1 == frame.N_D
        times = frame.data_times()
        assert times.size == n_d
        assert times[0] == frame.data_start and times[-1] == frame.data_end


def test_chanest_pilot_index():
    frame = validate_config(mk_cfg())
    assert frame.chanest_pilot_index(0, 0) == 0
    assert frame.chanest_pilot_index(2, 1) == 2 * 3 + 1
    for k, l in ((-1, 0), (0, -1), (4, 0), (0, 3)):
        with pytest.raises(ValueError):
            frame.chanest_pilot_index(k, l)


def test_derive_delta_max():
    # 2 GHz carrier, 1 MHz bandwidth, 0.1 ppm oscillators.
    assert derive_delta_max(2.0e9, 1.0e6, 1.0e-7) == pytest.approx(
        math.pi / 2500, rel=1e-12
    )
    assert derive_delta_max(4.0e9, 1.0e6, 1.0e-7) == pytest.approx(
        2 * math.pi / 2500, rel=1e-12
    )
    assert derive_delta_max(2.0e9, 2.0e6, 1.0e-7) == pytest.approx(
        math.pi / 5000, rel=1e-12
    )
    assert derive_delta_max(2.0e9, 1.0e6, 0.0) == 0.0
    with pytest.raises(ValueError):
        derive_delta_max(-1.0, 1.0e6, 1e-7)
    with pytest.raises(ValueError):
        derive_delta_max(2.0e9, 0.0, 1e-7)


def test_validate_config_rejects_band_overlap():
    with pytest.raises(OverlapError):
        validate_config(mk_cfg(delta_max=math.pi / 4))
    # just under the bound is fine
    validate_config(mk_cfg(delta_max=math.pi / 4 - 1e-9))


def test_validate_config_rejects_bad_frames():
    with pytest.raises(FrameError):
        validate_config(mk_cfg(N=200, N_u=100))
    # K*L + 2*(L-1) samples leave no room for data
    with pytest.raises(FrameError):
        validate_config(mk_cfg(K=10, L=5, N=50, N_u=58, delta_max=0.01))


def test_config_field_validation():
    for bad in (dict(M=0), dict(K=-1), dict(L=0), dict(N=0), dict(N_u=0),
                dict(gamma=0.0), dict(sigma2=0.0), dict(alpha=0.0),
                dict(delta_max=-0.1), dict(M=2.5)):
        with pytest.raises(ValueError):
            mk_cfg(**bad)


def test_p_u_identity():
    cfg = mk_cfg(gamma=0.5, sigma2=2.0)
    assert cfg.p_u == 1.0
    cfg2 = dataclasses.replace(cfg, gamma=4.0)
    assert cfg2.p_u == 8.0


def test_substream_reproducible_and_distinct():
    a = substream(7, 3, 1).standard_normal(16)
    b = substream(7, 3, 1).standard_normal(16)
    c = substream(7, 3, 2).standard_normal(16)
    d = substream(8, 3, 1).standard_normal(16)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_complex_normal_moments():
    rng = substream(11, 0)
    z = complex_normal(rng, (200_000,), var=3.0)
    assert abs(np.mean(np.abs(z) ** 2) - 3.0) < 0.06
    assert abs(z.mean()) < 0.02
    # circular symmetry: real and imaginary parts carry half the power each
    assert abs(np.var(z.real) - 1.5) < 0.05
    assert abs(np.var(z.imag) - 1.5) < 0.05
    assert np.all(complex_normal(rng, (10,), var=0.0) == 0)


def test_draw_cfos_within_bound():
    cfg = mk_cfg(delta_max=0.02)
    om = draw_cfos(cfg, substream(3, 0)).omega
    assert om.shape == (cfg.K,)
    assert np.all(np.abs(om) <= 0.02)


def test_draw_channel_tap_powers():
    """Per-tap sample variance must track a non-uniform power delay profile."""
    cfg = mk_cfg(M=5000, K=2, L=3)
    pdp = PowerDelayProfile(np.array([[0.5, 0.3, 0.2], [0.1, 0.1, 0.8]]))
    h = draw_channel(cfg, pdp, substream(5, 0)).h
    assert h.shape == (5000, 2, 3)
    emp = np.mean(np.abs(h) ** 2, axis=0)
    assert np.all(np.abs(emp / pdp.sigma2_h - 1.0) < 0.08)
    assert abs(h.mean()) < 0.02


def test_pdp_validation_and_theta():
    pdp = PowerDelayProfile.uniform(4, 5, theta=2.0)
    assert pdp.sigma2_h.shape == (4, 5)
    assert np.allclose(pdp.theta, 2.0)
    with pytest.raises(ValueError):
        PowerDelayProfile(np.ones(5))
    with pytest.raises(ValueError):
        PowerDelayProfile(np.array([[1.0, -0.1]]))
    with pytest.raises(ValueError):
        PowerDelayProfile(np.zeros((2, 2)))


def test_draw_data_symbols_layout():
    cfg = mk_cfg(K=4, L=3, N_u=2000)
    frame = validate_config(cfg)
    x = draw_data_symbols(cfg, frame, substream(1, 0))
    head = cfg.K * cfg.L
    assert np.all(x[:, :head] == 0)
    tail = x[:, head:]
    assert abs(np.mean(np.abs(tail) ** 2) - 1.0) < 0.05


def test_effective_gain_matches_tap_sum():
    cfg = mk_cfg()
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    ch = draw_channel(cfg, pdp, substream(2, 0))
    for k in range(cfg.K):
        ref = sum(
            ch.h[:, k, l] * np.exp(-2j * np.pi * k * l / cfg.K) for l in range(cfg.L)
        )
        assert np.allclose(effective_gain(cfg, ch, k), ref, atol=1e-12)


def _noiseless(synth, cfg, shape, path, *args):
    """Run a synthesizer, then reconstruct and subtract its noise draw."""
    out = synth(cfg, *args, substream(*path))
    samples = out.samples if hasattr(out, "samples") else out
    noise = complex_normal(substream(*path), shape, cfg.sigma2)
    return out, samples - noise


def test_ce_pilot_dual_form_agreement():
    """The tone form of the pilot equals the convolution form it collapses.

    Written out per sample: sqrt(p_u) * sum_q sum_l h[m,q,l]
    * exp(j*(2*pi/K)*q*(t-l)) * exp(j*omega_q*t).
    """
    cfg = mk_cfg()
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    ch = draw_channel(cfg, pdp, substream(21, 0))
    h = ch.h
    cfos = draw_cfos(cfg, substream(21, 1))
    rx, sig = _noiseless(synth_ce_pilot_rx, cfg, (cfg.M, cfg.N), (21, 2), ch, cfos)
    assert rx.phase is SignalPhase.CE_PILOT

    ref = np.zeros((cfg.M, cfg.N), dtype=complex)
    for m in range(cfg.M):
        for t in range(cfg.N):
            acc = 0.0j
            for q in range(cfg.K):
                for l in range(cfg.L):
                    acc += h[m, q, l] * np.exp(
                        1j * (2 * np.pi / cfg.K) * q * (t - l)
                        + 1j * cfos.omega[q] * t
                    )
            ref[m, t] = math.sqrt(cfg.p_u) * acc
    assert np.max(np.abs(sig - ref)) < 1e-10


def test_impulse_pilot_closed_form():
    cfg = mk_cfg()
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    ch = draw_channel(cfg, pdp, substream(22, 0))
    h = ch.h
    cfos = draw_cfos(cfg, substream(22, 1))
    rx, sig = _noiseless(
        synth_impulse_pilot_rx, cfg, (cfg.M, cfg.K * cfg.L), (22, 2), ch, cfos
    )
    assert rx.phase is SignalPhase.IMPULSE_PILOT
    amp = math.sqrt(cfg.K * cfg.L * cfg.p_u)
    for k in range(cfg.K):
        for l in range(cfg.L):
            t = k * cfg.L + l
            ref = amp * h[:, k, l] * np.exp(1j * cfos.omega[k] * t)
            assert np.allclose(sig[:, t], ref, atol=1e-12)


def test_impulse_train_tiles_blocks():
    cfg = mk_cfg(K=2, L=3, N=18)  # three blocks of K*L = 6
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    ch = draw_channel(cfg, pdp, substream(23, 0))
    h = ch.h
    cfos = draw_cfos(cfg, substream(23, 1))
    rx, sig = _noiseless(
        synth_impulse_train_rx, cfg, (cfg.M, cfg.N), (23, 2), ch, cfos
    )
    assert rx.phase is SignalPhase.IMPULSE_TRAIN
    amp = math.sqrt(cfg.K * cfg.L * cfg.p_u)
    period = cfg.K * cfg.L
    for b in range(3):
        for k in range(cfg.K):
            for l in range(cfg.L):
                t = b * period + k * cfg.L + l
                ref = amp * h[:, k, l] * np.exp(1j * cfos.omega[k] * t)
                assert np.allclose(sig[:, t], ref, atol=1e-12)


def test_impulse_train_rejects_partial_blocks():
    cfg = mk_cfg(K=2, L=3, N=20)
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    h = draw_channel(cfg, pdp, substream(0, 0))
    cfos = draw_cfos(cfg, substream(0, 1))
    with pytest.raises(PilotLengthError):
        synth_impulse_train_rx(cfg, h, cfos, substream(0, 2))


def test_data_rx_matches_convolution_oracle():
    cfg = mk_cfg(M=2, K=2, L=2, N=8, N_u=24, delta_max=0.3)
    frame = validate_config(cfg)
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    ch = draw_channel(cfg, pdp, substream(24, 0))
    h = ch.h
    cfos = draw_cfos(cfg, substream(24, 1))
    x = draw_data_symbols(cfg, frame, substream(24, 2))
    rx, sig = _noiseless(
        lambda c, chan, cf, sym, rng: synth_data_rx(c, frame, chan, cf, sym, rng),
        cfg, (cfg.M, cfg.N_u), (24, 3), ch, cfos, x,
    )
    assert rx.phase is SignalPhase.DATA

    ref = np.zeros((cfg.M, cfg.N_u), dtype=complex)
    for m in range(cfg.M):
        for t in range(cfg.N_u):
            acc = 0.0j
            for q in range(cfg.K):
                for l in range(cfg.L):
                    if t - l >= 0:
                        acc += h[m, q, l] * x[q, t - l] * np.exp(1j * cfos.omega[q] * t)
            ref[m, t] = math.sqrt(cfg.p_u) * acc
    assert np.max(np.abs(sig - ref)) < 1e-10


def test_data_rx_rejects_bad_symbol_shape():
    cfg = mk_cfg()
    frame = validate_config(cfg)
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    h = draw_channel(cfg, pdp, substream(0, 0))
    cfos = draw_cfos(cfg, substream(0, 1))
    with pytest.raises(ValueError):
        synth_data_rx(cfg, frame, h, cfos, np.zeros((cfg.K, cfg.N_u - 1)), substream(0, 2))


def test_data_rx_window_matches_full_slot():
    cfg = mk_cfg(M=4, K=3, L=3, N=30, N_u=90, delta_max=0.1)
    frame = validate_config(cfg)
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    h = draw_channel(cfg, pdp, substream(25, 0))
    cfos = draw_cfos(cfg, substream(25, 1))
    x = draw_data_symbols(cfg, frame, substream(25, 2))

    full = synth_data_rx(cfg, frame, h, cfos, x, substream(25, 3))
    full_sig = full.samples - complex_normal(substream(25, 3), (cfg.M, cfg.N_u), cfg.sigma2)

    t_idx = np.array([0, 1, frame.data_start, 40, 41, frame.data_end, cfg.N_u - 1])
    win = synth_data_rx_window(cfg, frame, h, cfos, x, t_idx, substream(25, 4))
    win_sig = win - complex_normal(substream(25, 4), (cfg.M, t_idx.size), cfg.sigma2)

    assert np.max(np.abs(win_sig - full_sig[:, t_idx])) < 1e-12


def test_data_rx_window_rejects_out_of_range():
    cfg = mk_cfg()
    frame = validate_config(cfg)
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    h = draw_channel(cfg, pdp, substream(0, 0))
    cfos = draw_cfos(cfg, substream(0, 1))
    x = draw_data_symbols(cfg, frame, substream(0, 2))
    for bad in (np.array([-1]), np.array([cfg.N_u])):
        with pytest.raises(ValueError):
            synth_data_rx_window(cfg, frame, h, cfos, x, bad, substream(0, 3))


def test_channel_hardening_concentration():
    """std/mean of the summed channel power shrinks like 1/sqrt(M*L)."""
    draws = 600
    ratios = []
    for m in (16, 64, 256):
        cfg = mk_cfg(M=m, K=1, L=4, delta_max=0.01)
        pdp = PowerDelayProfile.uniform(1, 4)
        rng = substream(31, m)
        stats = np.empty(draws)
        for r in range(draws):
            h = draw_channel(cfg, pdp, rng).h
            stats[r] = np.sum(np.abs(h[:, 0, :]) ** 2) / m
        ratio = stats.std(ddof=1) / stats.mean()
        ratios.append(ratio)
        assert abs(ratio * math.sqrt(m * 4) - 1.0) < 0.10
    assert ratios[0] > ratios[1] > ratios[2]


def test_cfo_vector_and_signal_metadata():
    cfg = mk_cfg()
    cv = CfoVector(omega=np.zeros(cfg.K))
    assert cv.omega.shape == (cfg.K,)
    pdp = PowerDelayProfile.uniform(cfg.K, cfg.L)
    rx = synth_ce_pilot_rx(
        cfg, draw_channel(cfg, pdp, substream(0, 0)), cv, substream(0, 1)
    )
    assert rx.origin == 0
    assert rx.samples.shape == (cfg.M, cfg.N)
