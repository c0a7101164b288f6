"""
The elastic domain in the (A, B) plane
======================================

A generalized stress is admissible when its planar point

    A = |dev sym Sigma_E| + g1 - r1,   B = |skew Sigma_E| + g2 - r2

lies in K: two half-strips glued to a quarter ellipse. This script prints
an ASCII picture of K and shows how offsets r1, r2 enlarge it.
"""

import numpy as np

from gradplast.convex import ABPoint, YieldParams, in_set_K

yp = YieldParams(sigma0=1.0, sigma_hat0=1.5)

# sample the plane and mark admissible points
A = np.linspace(-0.5, 1.6, 43)
B = np.linspace(2.0, -0.5, 21)
for b in B:
    row = "".join("#" if in_set_K(ABPoint(a, b), yp) else "." for a in A)
    print(f"{b:5.2f} {row}")
print("      A from -0.5 to 1.6, '#' admissible")

###############################################################################
# Offsets enter with a minus sign, so a Cauchy stress with
# |dev sym| = 1.2 is outside the plain set and inside once r1 = 0.3.

from gradplast.convex import GeneralizedStress, elastic_domain_membership

S = np.zeros((3, 3))
S[0, 1] = S[1, 0] = 1.2 / np.sqrt(2)
for r1 in (0.0, 0.3):
    inside = elastic_domain_membership(GeneralizedStress(S), YieldParams(1.0, 1.5, r1=r1))
    print(f"r1 = {r1}: admissible = {inside}")
