"""Published reference values for the conjugate, the admissible set and the
dual flow law, checked one by one."""

import math

import numpy as np
import pytest

from gradplast.convex import ABPoint, Branch, GeneralizedStress, YieldParams, classify_ab, conjugate_f, elastic_domain_membership, in_set_K
from gradplast.flow_rule import ModelParams, classical_limit_rate, dual_flow_rate, viscoplastic_rate
from gradplast.tensor_core import ElasticModuli, norm, skew, sym

S0, SH0 = 1e-2, 1.5e-2
YP = YieldParams(S0, SH0)


def shear(a):
    X = np.zeros((3, 3))
    X[0, 1] = X[1, 0] = a / math.sqrt(2)
    return X


def spin(b):
    X = np.zeros((3, 3))
    X[0, 1], X[1, 0] = b / math.sqrt(2), -b / math.sqrt(2)
    return X


@pytest.mark.parametrize("A,B,val", [(0.5, -1.0, 0.0), (0.6, 0.8, 0.0), (0.7, 0.8, math.inf)])
def test_conjugate_values(A, B, val):
    assert conjugate_f(A, B) == val


def test_set_membership_values():
    assert in_set_K(ABPoint(S0, 0.0), YP)
    assert not in_set_K(ABPoint(0.8 * S0, 0.8 * SH0), YP)
    assert elastic_domain_membership(GeneralizedStress(shear(S0)), YP)
    assert not elastic_domain_membership(GeneralizedStress(spin(1.01 * SH0)), YP)


def test_branch_values():
    assert classify_ab(S0, -0.5 * SH0, YP) == Branch.S1
    assert classify_ab(-0.3 * S0, SH0, YP) == Branch.S2
    assert classify_ab(S0 / math.sqrt(2), SH0 / math.sqrt(2), YP) == Branch.S3


def mp(alpha2=0.5):
    return ModelParams(ElasticModuli(1.0, 1.5), YP, alpha1=0.2, alpha2=alpha2)


def test_spin_branch_has_no_symmetric_rate():
    fr = dual_flow_rate(GeneralizedStress(spin(SH0), g1=-0.3 * S0), 1.0, mp())
    assert fr.branch == Branch.S2
    assert np.all(sym(fr.dot_p) == 0.0) and fr.dot_gamma == 0.0
    assert fr.dot_omega == 1.0


@pytest.mark.parametrize("alpha2", [0.0, 0.5])
def test_ellipse_multiplier_identity(alpha2):
    theta = 0.7
    S = GeneralizedStress(shear(S0 * math.cos(theta)) + spin(SH0 * math.sin(theta)))
    lam = 0.37
    fr = dual_flow_rate(S, lam, mp(alpha2))
    assert fr.branch == Branch.S3
    assert abs(0.5 * math.hypot(S0 * fr.dot_gamma, SH0 * fr.dot_omega) - lam) <= 1e-10
    assert fr.dot_gamma == pytest.approx(norm(sym(fr.dot_p)), rel=1e-14)
    assert fr.dot_omega == pytest.approx(norm(skew(fr.dot_p)), rel=1e-14)


def test_admissible_state_has_zero_overstress_rates():
    fr = viscoplastic_rate(GeneralizedStress(shear(0.5 * S0) + spin(0.5 * SH0)), mp())
    assert fr.dot_gamma == 0.0 and fr.dot_omega == 0.0 and np.all(fr.dot_p == 0.0)


def test_local_limit_on_the_junction():
    # without a backstress the skew part vanishes, so the ellipse branch is
    # only reached at B = 0 and the rate is the classical one with 2 lambda / sigma0
    S = GeneralizedStress(shear(S0))
    lam = 0.2
    fr = dual_flow_rate(S, lam, mp())
    ref = classical_limit_rate(S.Sigma_E, 0.0, 2 * lam / S0, YP)
    assert fr.branch == Branch.S3
    assert np.allclose(fr.dot_p, ref.dot_p, rtol=1e-14, atol=0.0)
    assert np.all(skew(fr.dot_p) == 0.0)
