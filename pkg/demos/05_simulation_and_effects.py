"""End-to-end miniature of the full study: scenario grid, aggregate table,
Group Lasso / EBIC selection of factor effects, and per-level effects.

This uses a deliberately tiny grid so it finishes in a few minutes; scale
the level lists and replication counts up for a real experiment.

Run:  python demos/05_simulation_and_effects.py
"""

import numpy as np

from kseek.effects import (
    build_design,
    effect_report,
    recover_redundant,
    select_and_refit,
)
from kseek.harness import expand_grid, results_csv, run_grid, timing_report

grid = {
    "n": [600],
    "p": [2, 6],
    "omega_bar": [0.01, 0.1],
    "k_star": [3],
    "cov_type": [1, 4],
    "methods": ["xmeans", "gmeans", "mmlem"],
    "datasets": 4,
    "runs": 2,
    "mc_samples": 20_000,
}
scenarios = expand_grid(grid, master_seed=13)
print(f"running {len(scenarios)} scenarios x {grid['datasets']} datasets ...")
records, aggregates = run_grid(scenarios, workers=1)

print("\naggregate results:")
print(results_csv(aggregates))

print("timing (median seconds per scenario/method):")
print(timing_report(records))

# Factor/interaction selection on the probit-transformed mean cARI.
design, y = build_design(aggregates, interaction_order=3)
selection = select_and_refit(design, y)
print("selected effect groups:",
      [" x ".join(design.groups[j]) for j in selection.selected_groups] or "(none)")
print(f"refit RSS {selection.rss:.3f};  BIC selected {selection.bic_selected:.1f} "
      f"vs full {selection.bic_full:.1f}")

effects = recover_redundant(selection, design)
report = effect_report(effects, design)
for group, rows in report.items():
    print(f"\nper-level effects for {' x '.join(group)}:")
    for row in rows:
        stars = "*" if row["significant"] else " "
        levels = ", ".join(f"{k}={row[k]}" for k in group)
        print(f"  {levels:40s} {row['effect']:+.3f} ({row['stderr']:.3f}) {stars}")
