"""Recovery rates across cities and driver densities.

Each run places a rider in a random interior cell and a fixed number of
on-road drivers in every cell, runs one enhanced request, harvests the
transcript and scores it against ground truth. The full matrix takes a few
seconds; ``pride-harvest bench`` does the same from the command line.
"""
# %%
from pride_harvest.experiment import ExperimentConfig, emit_report, run_experiment

report = run_experiment(ExperimentConfig(runs=3))
print(emit_report(report))

# %%
tot = report.totals()
print(f"drivers attacked        {tot.total}")
print(f"distances unblinded     {tot.distance_rate:.3f}")
print(f"located once unblinded  {tot.conditional_location_rate:.4f}")
print(f"corner differences only {tot.corner_only_rate:.3f}")
print("outcomes:", tot.statuses)

# %%
# the divisor search trades a few extra checks for fewer overestimates of e
div = run_experiment(ExperimentConfig(runs=3, mode="divisor_search"))
print(f"divisor search recovers {div.totals().pct_recovered:.1f}% vs {tot.pct_recovered:.1f}%")
