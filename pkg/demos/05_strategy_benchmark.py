"""Compare adaptive, uniform-design, and random testing strategies on a
built-in scenario, then export the fitted robustness field for plotting.

Desk-scale settings keep this to roughly a minute; raise the budgets,
seeds, and test points for a fuller comparison.
"""

from pathlib import Path

from stlsurrogate.acquisition import FitSchedule
from stlsurrogate.bench import BenchmarkConfig, export_field, run_benchmark, write_report
from stlsurrogate.blackbox import scenario
from stlsurrogate.gp import Surrogate

cfg = BenchmarkConfig(
    scenario="pick_mass",
    strategies=("mepe", "ud", "random"),
    budgets=(20, 60),
    n_init=20,
    pool_size=512,
    test_points=300,
    random_reps=5,
    seeds=3,
    master_seed=0,
    fit=FitSchedule(initial_restarts=2),
)

report = run_benchmark(cfg, progress=lambda s: print(f"  finished {s}"))

print("\nstrategy  budget   RMSE (median)")
for cell in report["cells"].values():
    print(f"  {cell['strategy']:>6}  {cell['budget']:>5}   {cell['rmse_median']:.4f}")

out = Path("bench_out")
write_report(report, out)
print(f"\nfull report in {out}/report.json, plot data in {out}/rmse.csv")

# Export one fitted field for external plotting.
rec = report["records"]["mepe-60-10000"]
sc = scenario("pick_mass")
export_field(Surrogate.from_dict(rec.final_surrogate), sc.domain, 200,
             out / "pick_field.csv")
print(f"predicted robustness field in {out}/pick_field.csv")
