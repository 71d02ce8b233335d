"""The phasor mean at the end of the slot, as antennas are added.

Residual CFO enters the rate only through E[exp(j * residual * tau)].
With SNR scaled down as 1/sqrt(M), the estimator keeps improving fast
enough that this mean still walks toward 1: the real part rises, the
imaginary part stays at zero by symmetry.
"""

from cfosim import ExperimentSpec, run_experiment

spec = ExperimentSpec(
    experiment="phasor-convergence",
    params=dict(K=2, L=2, m_values=(4, 16, 64), m0=4, gamma0_db=3.0,
                N=300, N_u=900, alpha=1.6),
    trials=300,
    seed=8,
)
rows = run_experiment(spec)

tau = rows[0].params["tau"]
print(f"phasor mean at the last data index (tau = {tau}), SNR ~ 1/sqrt(M)\n")
print("   M    gamma [dB]    Re phi           Im phi")
for m in (4, 16, 64):
    re = next(r for r in rows
              if r.metric == "phi_final_real" and r.params["M"] == m)
    im = next(r for r in rows
              if r.metric == "phi_final_imag" and r.params["M"] == m)
    print(f" {m:>3}    {re.params['gamma_db']:+7.2f}     "
          f"{re.value:.4f}+-{re.stderr:.4f}   {im.value:+.4f}+-{im.stderr:.4f}")
