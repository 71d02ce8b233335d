"""Rate against search cost along the grid-exponent ladder.

A denser periodogram grid (larger alpha) buys information rate until the
quantization error drops below the noise floor; past that point it only
costs multiplications.  The tradeoff experiment walks the ladder, marks
the saturation exponent alpha_star, and runs the correlation estimator
as the baseline.
"""

from cfosim import ExperimentSpec, run_experiment

spec = ExperimentSpec(
    experiment="tradeoff",
    params=dict(K=2, L=2, M=8, gamma_db=-3.0, N=200, N_u=1000, delta=0.04),
    trials=200,
    seed=7,
)
rows = run_experiment(spec)

print("alpha   rate [bpcu]   ops [complex mults + adds]")
for r in rows:
    if r.metric == "rate" and r.params["estimator"] == "periodogram":
        a = r.params["alpha"]
        ops = next(q.value for q in rows
                   if q.metric == "op_count" and q.params.get("alpha") == a)
        print(f" {a:.1f}    {r.value:.4f}       {ops:.3e}")

a_star = next(r.value for r in rows if r.metric == "alpha_star")
rate_c = next(r.value for r in rows
              if r.metric == "rate" and r.params["estimator"] == "correlation")
ops_c = next(r.value for r in rows
             if r.metric == "op_count" and r.params["estimator"] == "correlation")
print(f"\nsaturation exponent alpha_star = {a_star}")
print(f"correlation baseline (full-slot train): rate {rate_c:.4f}, ops {ops_c:.3e}")
