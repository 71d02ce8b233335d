"""Residual-CFO rate loss as the slot grows.

The longer the slot, the further the post-estimation phase drifts by the
last data symbol, so the rate penalty relative to a perfectly
synchronized receiver grows with N_u.  The correlation estimator's
coarser residuals make it much more sensitive to this drift.
"""

from cfosim import ExperimentSpec, run_experiment

spec = ExperimentSpec(
    experiment="rate-vs-nd",
    params=dict(K=2, L=2, M=8, gamma_db=-3.0, N=200,
                n_u_values=(400, 800, 1600), delta=0.04),
    trials=200,
    seed=9,
)
rows = run_experiment(spec)


def val(metric, n_u, scenario):
    return next(r.value for r in rows
                if r.metric == metric and r.params["N_u"] == n_u
                and r.params.get("scenario") == scenario)


print("  N_u   zero-CFO rate   periodogram loss   correlation loss")
for n_u in (400, 800, 1600):
    r0 = val("rate", n_u, "zero-cfo")
    lp = val("loss_pct", n_u, "periodogram")
    lc = val("loss_pct", n_u, "correlation")
    print(f" {n_u:>4}     {r0:.4f}          {lp:6.2f}%           {lc:6.2f}%")
