"""
Material point under simple shear
=================================

Drive one material point through monotone simple shear and compare the
accumulated plastic strain with a hand-written von Mises radial return.
Without a nonlocal backstress the plastic distortion stays symmetric.
"""

import numpy as np

from gradplast.convex import YieldParams
from gradplast.flow_rule import MaterialPointState, ModelParams, return_map
from gradplast.tensor_core import ElasticModuli, norm, skew

mp = ModelParams(ElasticModuli(1.0, 1.5), YieldParams(1e-2, 1.5e-2), alpha1=0.2, alpha2=0.5)
gamma_y = 1e-2 / np.sqrt(2)

###############################################################################
# Load in 20 steps up to five times the yield shear.

state = MaterialPointState()
shears = np.linspace(0.0, 5 * gamma_y, 21)[1:]
history = []
for G in shears:
    eps = np.zeros((3, 3))
    eps[0, 1] = eps[1, 0] = G / 2  # symmetric part of u1 = G y
    state, sigma, rate = return_map(state, eps, np.zeros((3, 3)), mp, dt=0.05)
    history.append((G, sigma[0, 1], state.gamma_p, rate.branch.name))

for G, s12, g, br in history[::4]:
    print(f"shear {G:.4e}  sigma12 {s12:.4e}  gamma_p {g:.4e}  {br}")

###############################################################################
# The scalar radial return: the trial deviatoric norm minus hardening.

gam = 0.0
for G in shears:
    s_tr = 2 * (G / np.sqrt(2) - gam)
    gam += max(s_tr - 1e-2 - 0.2 * gam, 0.0) / 2.2
print(f"radial return gamma_p {gam:.12e}")
print(f"return map    gamma_p {state.gamma_p:.12e}")
print(f"|skew p| = {norm(skew(state.p))}")
