"""
Full PDE against the reduced model
==================================

Both engines start from the same train.  Pass a final time on the command
line for a quicker look (the PDE takes roughly a minute per 300 time units).

    python demos/03_pde_vs_pctc.py 100
"""
import sys
from dataclasses import replace

import numpy as np

from manakov.harness import preset, run_scenario

t_end = float(sys.argv[1]) if len(sys.argv) > 1 else 300.0
name = sys.argv[2] if len(sys.argv) > 2 else "afr_free"
s = replace(preset(name), t_end=t_end)

res = run_scenario(s, write=False,
                   progress=lambda t: print(f"  pde t={t:g}", end="\r") if t % 50 == 0 else None)
print()
pde, ctc = res.pde_tracks, res.pctc_tracks
for t in np.linspace(0, t_end, 7):
    i = int(np.searchsorted(pde.times, t))
    print(f"t={pde.times[i]:6.1f}  pde {np.round(pde.tracks[i], 3)}  pctc {np.round(ctc.tracks[i], 3)}")

m = res.metrics
print("max deviation per track:", np.round(m.max_dev, 3), " t* =", m.t_star)
drift = res.pde.norm[-1] - res.pde.norm[0]
print(f"norm drift {drift:.1e}, energy drift {res.pde.energy[-1] - res.pde.energy[0]:.1e}")
