"""Where does the worst-case capacity peak?

Builds the default 6-AP / 15-station layout, evaluates the worst-case network
capacity over the full 21 x 21 grid of transmit power and CCA threshold, and shows
that the best cells sit at high power with a sensitive (low) CCA threshold. The top
few cells are what the 7-arm reduced action set keeps.
"""

import numpy as np

from srbandits import ExperimentConfig
from srbandits.harness import surface_from_config
from srbandits.radio import reduce_action_set

surf = surface_from_config(ExperimentConfig())
tx, cs = surf.argmax()
print(f"best cell: P_tx = {tx:g} dBm, CCA = {cs:g} dBm, C_T = {surf.c_total.max() / 1e9:.2f} Gbit/s")

# coarse view of the surface, rows are P_tx, columns CCA threshold
rows = surf.p_tx_dbm[::5]
cols = surf.t_cs_dbm[::5]
print("\nC_T in Gbit/s")
print("P_tx \\ CCA " + "".join(f"{c:>8g}" for c in cols))
for i, p in zip(range(0, 21, 5), rows):
    print(f"{p:>10g} " + "".join(f"{surf.c_total[i, j] / 1e9:>8.2f}" for j in range(0, 21, 5)))

top = reduce_action_set(surf, 0.02)
print(f"\ntop 2% of cells ({len(top)}):", ", ".join(f"({a:g}, {b:g})" for a, b in top))
print("share of top cells with P_tx >= 16 dBm:", np.mean([a >= 16 for a, _ in top]))
