import math

import numpy as np
import pytest

from gradplast.convex import Branch, GeneralizedStress, YieldParams
from gradplast.flow_rule import (
    DegenerateBranch,
    MaterialPointState,
    ModelParams,
    accumulate_omega,
    classical_limit_rate,
    dual_flow_rate,
    kkt_residual,
    local_generalized_stress,
    return_map,
    return_map_stress,
    viscoplastic_rate,
    viscoplastic_update_stress,
)
from gradplast.tensor_core import ElasticModuli, dev, norm, skew, sym, tr

from oracles import radial_return_shear


def params(alpha1=0.2, alpha2=0.5, r1=0.0, r2=0.0, rho=1.0, n=1):
    return ModelParams(ElasticModuli(1.0, 1.5), YieldParams(1e-2, 1.5e-2, r1, r2), alpha1=alpha1, alpha2=alpha2, rho=rho, n_exp=n, m_exp=n)


def random_trials(n, scale, seed=0):
    """Trial stresses and backstresses; thirds of the sample are dominated
    by the symmetric part, by the skew part, and mixed."""
    rng = np.random.default_rng(seed)
    sig = sym(rng.normal(size=(n, 3, 3))) * scale[:, None, None]
    back = rng.normal(size=(n, 3, 3)) * scale[:, None, None]
    third = n // 3
    back[:third] = sym(back[:third])
    sig[third : 2 * third] *= 1e-3
    back[third : 2 * third] = skew(back[third : 2 * third])
    return sig, back


class TestParams:
    def test_rejects_bad_values(self):
        el, yp = ElasticModuli(1, 1), YieldParams(1, 1)
        for kw in ({"Lc": -1}, {"alpha1": -0.1}, {"rho": 0.0}, {"n_exp": 1.5}):
            with pytest.raises(ValueError):
                ModelParams(el, yp, **kw)

    def test_state_trace_free(self):
        with pytest.raises(ValueError):
            MaterialPointState(p=np.eye(3))


class TestReturnMap:
    def test_elastic_trial_unchanged(self):
        mp = params()
        sig = np.zeros((1, 3, 3))
        sig[0, 0, 1] = sig[0, 1, 0] = 1e-3
        up = return_map_stress(sig, np.zeros((1, 3, 3)), [0.0], [0.0], mp)
        assert up.branch[0] == Branch.INTERIOR
        assert np.all(up.dp == 0.0)

    def test_random_states_are_admissible(self):
        mp = params()
        rng = np.random.default_rng(3)
        scale = 10 ** rng.uniform(-3, -0.5, 2000)
        sig, back = random_trials(2000, scale)
        gam = rng.uniform(0, 0.05, 2000)
        om = rng.uniform(0, 0.05, 2000)
        up = return_map_stress(sig, back, gam, om, mp)
        assert np.all(up.phi <= 1e-10)
        assert np.all(np.abs(up.Lam * up.phi) <= 1e-12)
        assert np.all(up.dgamma >= 0) and np.all(up.domega >= 0)
        assert set(np.unique(up.branch)) >= {Branch.S1, Branch.S2, Branch.S3}
        assert np.max(np.abs(tr(up.dp))) < 1e-15
        # increments and end-state coordinates agree with the end-state stress
        g1, g2 = mp.forces(gam + up.dgamma, om + up.domega)
        A = norm(dev(sym(up.Sigma_E))) + g1
        B = norm(skew(up.Sigma_E)) + g2
        plastic = up.branch != Branch.INTERIOR
        assert np.allclose(A[plastic], up.A[plastic], atol=1e-14)
        assert np.allclose(B[plastic], up.B[plastic], atol=1e-14)

    def test_increment_matches_dual_rate(self):
        mp = params()
        rng = np.random.default_rng(5)
        sig, back = random_trials(300, np.full(300, 0.05), seed=5)
        gam, om = rng.uniform(0, 0.02, (2, 300))
        up = return_map_stress(sig, back, gam, om, mp)
        for i in np.nonzero(up.branch != Branch.INTERIOR)[0]:
            S = local_generalized_stress(up, gam + up.dgamma, om + up.domega, mp, i)
            fr = dual_flow_rate(S, float(up.Lam[i]), mp, tol=1e-8 * mp.yield_params.sigma0)
            assert fr.branch == up.branch[i]
            assert np.allclose(fr.dot_p, up.dp[i], atol=1e-13)
            assert fr.dot_gamma == pytest.approx(up.dgamma[i], abs=1e-13)
            assert fr.dot_omega == pytest.approx(up.domega[i], abs=1e-13)

    def test_closed_form_s1(self):
        mp = params()
        sig = np.zeros((1, 3, 3))
        sig[0, 0, 1] = sig[0, 1, 0] = 0.05 / math.sqrt(2)
        up = return_map_stress(sig, np.zeros((1, 3, 3)), [0.0], [0.0], mp)
        assert up.branch[0] == Branch.S1
        assert up.dgamma[0] == pytest.approx((0.05 - 1e-2) / 2.2, rel=1e-14)
        assert up.A[0] == pytest.approx(1e-2, rel=1e-14)

    def test_spin_without_stiffness_degenerate(self):
        mp = params(alpha2=0.0)
        back = np.zeros((1, 3, 3))
        back[0, 0, 1], back[0, 1, 0] = 0.05, -0.05
        with pytest.raises(DegenerateBranch):
            return_map_stress(np.zeros((1, 3, 3)), back, [0.0], [0.0], mp)
        # a nonlocal stiffness restores a solution
        up = return_map_stress(np.zeros((1, 3, 3)), back, [0.0], [0.0], mp, extra_stiffness=1.0)
        assert up.phi[0] <= 1e-12

    def test_unused_hardening_variable_irrelevant(self):
        mp = params()
        sig = np.zeros((1, 3, 3))
        sig[0, 0, 1] = sig[0, 1, 0] = 0.05
        a = return_map_stress(sig, np.zeros((1, 3, 3)), [0.01], [0.0], mp)
        b = return_map_stress(sig, np.zeros((1, 3, 3)), [0.01], [0.003], mp)
        assert a.branch[0] == b.branch[0] == Branch.S1
        assert np.array_equal(a.dp, b.dp) and np.array_equal(a.dgamma, b.dgamma)


class TestPointDriver:
    def test_simple_shear_matches_radial_return(self):
        mp = params()
        G = np.linspace(0, 5 * 1e-2 / math.sqrt(2), 30)[1:]
        state = MaterialPointState()
        gam = []
        for g in G:
            eps = np.zeros((3, 3))
            eps[0, 1] = g
            state, sigma, fr = return_map(state, eps, np.zeros((3, 3)), mp, dt=1.0)
            gam.append(state.gamma_p)
            assert float(norm(skew(state.p))) == 0.0
        ref = radial_return_shear(G, 1.0, 0.2, 1e-2)
        assert np.allclose(gam, ref, rtol=1e-12, atol=1e-16)

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            return_map(MaterialPointState(), np.zeros((3, 3)), np.zeros((3, 3)), params(), dt=0.0)


class TestRates:
    def test_classical_limit(self):
        yp = YieldParams(1.0, 1.0)
        s = np.diag([2.0, -1.0, -1.0])
        fr = classical_limit_rate(s, 0.0, 0.3, yp)
        assert norm(fr.dot_p) == pytest.approx(0.3)
        assert np.allclose(fr.dot_p, 0.3 * dev(s) / norm(dev(s)))
        with pytest.raises(ValueError):
            classical_limit_rate(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0.0]]), 0.0, 0.1, yp)

    def test_viscoplastic_zero_inside(self):
        mp = params()
        fr = viscoplastic_rate(GeneralizedStress(np.zeros((3, 3))), mp)
        assert fr.branch == Branch.INTERIOR and np.all(fr.dot_p == 0)

    def test_kkt_residual_zero_on_surface(self):
        mp = params()
        S = np.zeros((3, 3))
        S[0, 1] = S[1, 0] = 1e-2 / math.sqrt(2)
        G = GeneralizedStress(S)
        fr = dual_flow_rate(G, 0.5, mp)
        assert abs(kkt_residual(G, fr, mp.yield_params)) < 1e-15

    def test_accumulate_omega(self):
        W = np.zeros((3, 3))
        W[0, 1], W[1, 0] = 1.0, -1.0
        assert accumulate_omega([(0.5, W), (0.25, 2 * W)]) == pytest.approx(math.sqrt(2))
        with pytest.raises(ValueError):
            accumulate_omega([(0.0, W)])


class TestViscoplasticUpdate:
    def test_converges_to_rate_independent(self):
        rng = np.random.default_rng(11)
        sig, back = random_trials(200, 10 ** rng.uniform(-2, -1, 200), seed=11)
        gam, om = np.zeros(200), np.zeros(200)
        ri = return_map_stress(sig, back, gam, om, params())
        gaps = []
        for rho in (1e-1, 1e-2, 1e-3, 1e-4):
            vp = viscoplastic_update_stress(sig, back, gam, om, params(rho=rho), dt=1.0)
            # the box domain of the regularization is not the rounded set,
            # so compare on states that leave through a flat side
            flat = ri.branch != Branch.S3
            gaps.append(np.max(np.abs(vp.dp[flat] - ri.dp[flat])))
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-4 * np.max(np.abs(ri.dp))

    def test_residual_satisfied(self):
        mp = params(rho=0.3, n=3)
        sig, back = random_trials(50, np.full(50, 0.1), seed=2)
        up = viscoplastic_update_stress(sig, back, np.zeros(50), np.zeros(50), mp, dt=0.5)
        over = up.A - mp.yield_params.sigma0
        lhs = mp.rho * up.dgamma / 0.5
        assert np.allclose(lhs, np.maximum(over, 0) ** 3, atol=1e-12)
