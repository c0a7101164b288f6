"""
Boundary layers at micro-hard walls
===================================

A strip of unit thickness is sheared between walls where p x n = 0.
Plastic strain is depressed near the walls, and the depressed zone widens
with the length scale Lc. Each run takes a few seconds.
"""

from gradplast.scenarios import boundary_layer_width, strip_profile, strip_shear_config
from gradplast.solver import run, skew_norm

###############################################################################
# Final |sym p| profile across half the strip for two length scales.

for Lc in (0.05, 0.2):
    cfg = strip_shear_config(Lc=Lc)
    res = run(cfg)
    y, e = strip_profile(res)
    half = len(y) // 2
    print(f"Lc = {Lc}")
    for yi, ei in zip(y[: half + 1 : 4], e[: half + 1 : 4]):
        bar = "*" * int(40 * ei / e.max())
        print(f"  y = {yi:5.3f} {bar}")
    print(f"  layer width {boundary_layer_width(y, e):.4f}, |skew p| {skew_norm(res.final, cfg):.3e}")

###############################################################################
# The energy budget of the last run: work in, stored energy plus
# dissipation out.

work = sum(r.energy.external_work_increment for r in res.records)
stored = res.records[-1].energy.total
print(f"work {work:.6e} = stored {stored:.6e} + dissipated {res.records[-1].dissipation_cum:.6e}")
