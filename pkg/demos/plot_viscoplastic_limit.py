"""
Rate-independent limit of the Norton-Hoff regularization
========================================================

The overstress flow rule approaches the rate-independent model as the
viscosity rho goes to zero. The gap in the final plastic strain shrinks
by a factor ten per decade of rho for a linear overstress law.
"""

from dataclasses import replace

import numpy as np

from gradplast.scenarios import point_shear_config
from gradplast.solver import VISCOPLASTIC, run

cfg = point_shear_config()
g_ref = run(cfg).final.gamma_p.max()
print(f"rate-independent gamma_p {g_ref:.8e}")

for rho in (1e-1, 1e-2, 1e-3, 1e-4):
    c = cfg.replace(params=replace(cfg.params, rho=rho), stepping=replace(cfg.stepping, path=VISCOPLASTIC))
    g = run(c).final.gamma_p.max()
    print(f"rho {rho:.0e}: gamma_p {g:.8e}, relative gap {abs(g - g_ref) / g_ref:.2e}")

###############################################################################
# A continuation schedule runs all viscosities inside every step and ends
# on the smallest one.

c = cfg.replace(stepping=replace(cfg.stepping, path=VISCOPLASTIC, rho_schedule=(1e-1, 1e-2, 1e-3, 1e-4)))
print(f"continuation gamma_p {np.max(run(c).final.gamma_p):.8e}")
