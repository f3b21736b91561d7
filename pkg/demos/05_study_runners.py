"""Driving the simulation-study runners at toy scale.

Each runner writes a long-form CSV (plus a per-observation twin for
error-scaled studies), an SVG plot, and the resolved configuration. This
script runs the subset-size study small enough to finish in seconds; raise
`replications` and `truth_replications` toward the defaults for
publication-quality curves.

Run: python demos/05_study_runners.py
"""
import os

import numpy as np

from searchrisk import ExperimentConfig, run_fig_best_subset

out_dir = os.path.join("demo_results", "best_subset_toy")
cfg = ExperimentConfig(replications=40, truth_replications=2000, n_draws=20,
                       seed=2024, out_dir=out_dir, workers=1)
table = run_fig_best_subset(cfg)

print(f"{'size':>4} {'naive penalty':>14} {'randomized':>11} {'truth':>9}")
for k in range(1, 7):
    exp = f"bestsub_k{k}"
    truth, _ = table.truth_of(exp)
    cp = float(np.mean(table.estimates(exp, "cp")))
    additive = float(np.mean(table.estimates(exp, "additive")))
    print(f"{k:>4} {cp:>14.1f} {additive:>11.1f} {truth:>9.1f}")

print(f"\nFiles under {out_dir}:")
for name in sorted(os.listdir(out_dir)):
    print(f"  {name}")
print("\nThe naive column dips below truth at the middle sizes, where many")
print("subsets compete; the randomized column tracks truth at every size.")
print("The same pattern at full scale is acceptance criterion 2.")
