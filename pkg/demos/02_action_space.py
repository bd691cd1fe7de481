"""Why shrink the action space?

Runs epsilon-greedy on the 7-arm reduced set and on the full 441-arm grid, plus UCB
and Thompson sampling on the full grid, and reports how quickly each one reaches its
plateau reward and how much reward it collects. Usage: ``python 02_action_space.py [steps] [seeds]``.
"""

import sys

import numpy as np

from srbandits import default_configs, run_experiment
from srbandits.harness import plateau_step

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
seeds = range(1, 1 + (int(sys.argv[2]) if len(sys.argv) > 2 else 3))
cfgs = default_configs()

print(f"{'config':<26}{'plateau step':>14}{'total reward':>14}{'Mbit/s':>10}")
for name in ("actions_egreedy_reduced", "actions_egreedy_full", "actions_ucb_full", "actions_thompson_full"):
    runs = [run_experiment(cfgs[name], s, horizon=steps) for s in seeds]
    plateau = np.median([plateau_step(r.reward_trace()) for r in runs])
    total = np.median([r.summary["total_reward"] for r in runs])
    thr = np.median([r.summary["cumulative_throughput_bps"] for r in runs]) / 1e6
    print(f"{name:<26}{plateau:>14g}{total:>14.0f}{thr:>10.0f}")
