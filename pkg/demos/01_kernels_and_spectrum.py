"""
Interaction kernels and the Lax spectrum
========================================

A soliton sitting in a sech^2 term feels a force proportional to P(Delta) and
a phase shift proportional to R(Delta).  The free three-soliton train is
classified by the real parts of the Lax eigenvalues.
"""
import math

import numpy as np

from manakov.ctc import init_ctc_state
from manakov.harness import three_soliton_train
from manakov.lax import build_lax, classify_regime, critical_delta_nu, eigenvalues
from manakov.potential import kernels, quadrature_oracle

print(" Delta        P            R          |closed - quad|")
for d in (0.0, 0.5, 1.0, 2.0, 5.0):
    k = kernels(d)
    err = max(abs(k.P - quadrature_oracle("P", d)), abs(k.R - quadrature_oracle("R", d)))
    print(f"{d:6.2f}  {k.P: .8f}  {k.R: .8f}   {err:.1e}")

# asymptotically free train: phases (0, pi, 0), amplitude step 0.01
z = eigenvalues(build_lax(init_ctc_state(three_soliton_train(0.01, (0, math.pi, 0)))))
report = classify_regime(z)
print("\nRe zeta:", np.round(report.kappa, 5), "->", report.label)

# the free regime ends where two eigenvalues collide
nu_cr = critical_delta_nu(0.5, 8.0, math.cos(math.pi / 10))
print(f"critical amplitude step: {nu_cr:.5f}")
for dnu in (0.020, 0.025, 0.0252, 0.0253, 0.030):
    z = eigenvalues(build_lax(init_ctc_state(three_soliton_train(dnu, (0, math.pi, 0)))))
    print(f"  dnu = {dnu:.4f}: {classify_regime(z).label}")
