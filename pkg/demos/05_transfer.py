"""Reacting to load changes: forget, full transfer or partial transfer.

Three APs share 15 stations whose attachment shifts twice (at 3 and 6 minutes). At
each change every SAU agent either redraws its whole network (forget), keeps all of
it (full), or keeps only the second hidden layer (partial). The script prints the
smoothed starvation peak and the reward recovery time after each change.
Usage: ``python 05_transfer.py [seeds]``.
"""

import sys

import numpy as np

from srbandits import default_configs, run_experiment
from srbandits.harness import post_event_peak, recovery_step

seeds = range(1, 1 + (int(sys.argv[1]) if len(sys.argv) > 1 else 2))
cfgs = default_configs()

print(f"{'strategy':<10}{'peak @3min':>12}{'peak @6min':>12}{'recovery @3min':>16}{'recovery @6min':>16}")
for strategy in ("forget", "full", "partial"):
    rows = []
    for s in seeds:
        r = run_experiment(cfgs[f"dynamic_{strategy}"], s)
        rows.append([post_event_peak(r, 0), post_event_peak(r, 1), recovery_step(r, 0), recovery_step(r, 1)])
    m = np.median(np.array(rows), axis=0)
    print(f"{strategy:<10}{m[0]:>12.2f}{m[1]:>12.2f}{m[2]:>16g}{m[3]:>16g}")
