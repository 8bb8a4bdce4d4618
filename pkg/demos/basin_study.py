"""Basin of attraction of the online fit for GR vs OGR controls (desk scale).

Takes several minutes. Pass a smaller step count for a quick look, e.g.
``python3 demos/basin_study.py 1000 10``.
"""
import sys
import time

from greedy_id.harness import ExperimentConfig, run_basin

n_steps = int(sys.argv[1]) if len(sys.argv) > 1 else 4000
n_runs = int(sys.argv[2]) if len(sys.argv) > 2 else 50
cfg = ExperimentConfig(experiment="basin", radii=(0.01, 0.1, 0.25), n_steps=n_steps, n_runs=n_runs)
t0 = time.perf_counter()
res = run_basin(cfg)
for row in res.rows():
    print("\t".join(str(x) for x in row))
print("selected:", res.selected)
print(f"{time.perf_counter() - t0:.0f} s")
