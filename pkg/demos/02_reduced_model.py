"""
Reduced dynamics of the presets
===============================

The perturbed complex Toda chain is cheap: every preset runs to t = 500 in a
fraction of a second.  The table lists the left and right soliton positions.
"""
import numpy as np

from manakov.ctc import IntegrationOptions, init_ctc_state, integrate_ctc
from manakov.harness import PRESET_NAMES, count_reversals, initial_regime, preset

times = [0, 100, 200, 300, 400, 500]
print(f"{'preset':9s} {'regime':6s} " + " ".join(f"t={t:<11d}" for t in times) + " turns")
for name in PRESET_NAMES:
    s = preset(name)
    traj = integrate_ctc(init_ctc_state(s.train), s.potential, 500.0,
                         IntegrationOptions(sample_every=1.0))
    idx = [int(np.searchsorted(traj.times, t)) for t in times]
    cells = [f"{traj.xi[i, 0]:6.1f}/{traj.xi[i, 2]:<5.1f}" for i in idx]
    print(f"{name:9s} {initial_regime(s).label:6s} " + " ".join(f"{c:13s}" for c in cells),
          count_reversals(traj.xi[:, 0]))

# The well keeps the free lateral solitons near +-8..13 (AFR turned bound),
# the hump pushes the in-phase train apart (bound turned free).
