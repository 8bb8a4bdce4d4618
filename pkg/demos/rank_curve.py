"""Rank of W_hat per iteration for GR and OGR on a random 10x10 system.

OGR adds one full channel block (10 directions) per control and reaches full
rank after 10 iterations; GR grows in uneven steps.
"""
from greedy_id.harness import ExperimentConfig, run_rank_curve

curve = run_rank_curve(ExperimentConfig(seed=0))
print("iter  GR  OGR")
for k in range(max(len(curve.gr), len(curve.ogr))):
    g = curve.gr[k] if k < len(curve.gr) else ""
    o = curve.ogr[k] if k < len(curve.ogr) else ""
    print(f"{k + 1:4d} {g:>4} {o:>4}")
