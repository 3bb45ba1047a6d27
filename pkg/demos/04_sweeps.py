"""
Battery-capacity and energy-rate sweeps
=======================================

Re-train at each grid point and compare learned, greedy and optimal average
rewards. Uses the harness directly; the CLI writes the same tables to disk
(``skyadmit run demos/configs/capacity_sweep.yaml``).
"""

import tempfile

from skyadmit.harness import config_from_dict, run_experiment

STEPS = 300_000     # raise to 1_000_000 for converged numbers

for kind, grid in (("capacity-sweep", [5, 10, 15, 20, 25]), ("energy-rate-sweep", [90, 110, 130])):
    cfg = config_from_dict({"experiment": kind, "sweep": grid, "seeds": [0],
                            "learner": {"total_steps": STEPS, "snapshot_every": STEPS},
                            "simulation": {"horizon": 50_000, "burn_in": 5_000}})
    with tempfile.TemporaryDirectory() as out:
        rows = [o.row for o in run_experiment(cfg, out)]
    print(f"\n{kind}")
    print(" value  learned  greedy  optimal  served(learned)  served(greedy)")
    for r in rows:
        print(f"{r.sweep_value:6g}  {r.psi_learned_exact:.4f}  {r.psi_greedy_exact:.4f}  "
              f"{r.psi_optimal:.4f}  {r.accepted_total:.4f}           {r.accepted_greedy_total:.4f}")
