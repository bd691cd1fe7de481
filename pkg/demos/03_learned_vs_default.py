"""Learned configuration against the usual fixed defaults.

At each traffic rate, epsilon-greedy over the reduced set is compared with two
fixed configurations that keep 16 dBm transmit power and a CCA threshold of either
-82 or -62 dBm. Usage: ``python 03_learned_vs_default.py [steps] [seeds]``.
"""

import sys

import numpy as np

from srbandits import default_configs, run_experiment

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
seeds = range(1, 1 + (int(sys.argv[2]) if len(sys.argv) > 2 else 3))
cfgs = default_configs()


def medians(name):
    runs = [run_experiment(cfgs[name], s, horizon=steps).summary for s in seeds]
    return np.median([r["cumulative_throughput_bps"] for r in runs]) / 1e6, np.median([r["starvation"] for r in runs])


print(f"{'rate':>8}  {'eps-greedy':>18}  {'16 dBm / -82':>18}  {'16 dBm / -62':>18}   (Mbit/s, starving)")
for tag in ("0p011", "0p056", "0p11", "0p16"):
    cells = [medians(n) for n in (f"static_egreedy_{tag}", f"baseline_16_82_{tag}", f"baseline_16_62_{tag}")]
    print(f"{tag.replace('p', '.'):>8}  " + "  ".join(f"{t:>10.0f} {s:>7.2f}" for t, s in cells))
