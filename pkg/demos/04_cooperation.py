"""Does sharing the network's fairness help the neural agents?

SAU-Coop adds the network Jain index to each AP's local reward; SAU-NonCoop learns
from the local reward alone. Stateless epsilon-greedy, with and without mixing in the
other APs' rewards, runs alongside. All use the full 441-arm grid at 0.16 Gbit/s.
Usage: ``python 04_cooperation.py [steps] [seeds]``.
"""

import sys

from srbandits import compare, default_configs

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 1500
seeds = range(1, 1 + (int(sys.argv[2]) if len(sys.argv) > 2 else 2))
cfgs = default_configs()

table = compare([cfgs[n] for n in ("coop_sau_coop", "coop_sau", "coop_egreedy", "coop_coop_egreedy")], seeds, horizon=steps)
print(table.to_text())
