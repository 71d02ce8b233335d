"""How fast each estimator improves with pilot length.

Runs the mse-sweep experiment at desk scale and prints the measured MSE
at each pilot length together with the fitted log-log slope.  The
periodogram's error falls several times faster than the correlation
estimator's, approaching cubic decay once the grid outresolves the
noise.
"""

from cfosim import ExperimentSpec, run_experiment

spec = ExperimentSpec(
    experiment="mse-sweep",
    params=dict(K=2, L=2, M=8, gamma_db=0.0, N_u=400, alpha=1.6,
                n_values=(48, 96, 192, 384), estimator="both"),
    trials=150,
    seed=5,
)
rows = run_experiment(spec)

for est in ("periodogram", "correlation"):
    print(f"{est}:")
    print("    N     MSE [rad^2]    stderr")
    for r in rows:
        if r.metric == "mse" and r.params["estimator"] == est:
            print(f"  {r.params['N']:>4}   {r.value:.3e}    {r.stderr:.1e}")
    slope = next(r.value for r in rows
                 if r.metric == "slope" and r.params["estimator"] == est)
    print(f"  slope: {slope:+.2f}\n")
