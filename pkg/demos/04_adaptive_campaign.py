"""Run the adaptive experiment-design loop on the built-in reach scenario
and watch the balance factor steer between exploration and exploitation.

alpha near 0 after an iteration means the CV error over-estimated the true
error, so the next pick leans on the GP variance (global exploration);
alpha near the 0.99 cap means the model was more wrong than it thought, so
the next pick chases high expected error (local exploitation).
"""

from stlsurrogate.acquisition import FitSchedule, run_campaign
from stlsurrogate.blackbox import scenario

sc = scenario("reach_arc")
record = run_campaign(
    sc.formula,
    sc.domain,
    sc.blackbox,
    budget=25,
    n_init=30,
    pool_size=512,
    seed=0,
    fit_schedule=FitSchedule(initial_restarts=2),
)

print(f"scenario: {sc.name}, {record.config['n_init']} initial + "
      f"{record.config['budget']} adaptive points\n")
print(" iter   x(cube)            y issue  alpha   epe")
for h in record.history:
    if h["iteration"] == 0:
        continue
    x = ", ".join(f"{v:+.3f}" for v in h["x"])
    flag = " FAIL" if h["y"] is None else ""
    print(
        f"  {h['iteration']:3d}  ({x})  {h['y']:+.4f}{flag}  "
        f"{h['alpha']:.3f}  {h['epe']:.2e}"
    )

surr = record.surrogate()
print(f"\nfinal surrogate: {surr.training.n} points, kernel {surr.kernel}")
neg = sum(1 for h in record.history if h["y"] is not None and h["y"] < 0)
print(f"violations found: {neg}/{len(record.history)} evaluations")
