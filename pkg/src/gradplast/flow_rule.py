"""Point-level plastic evolution.

The incremental return map works on the reduced planar variables. Because the
local restoring forces act along the current flow directions, the deviatoric
symmetric part and the skew part of the Eshelby stress keep their directions
during the return and only their magnitudes

    A = |dev sym Sigma_E| + g1 - r1,    B = |skew Sigma_E| + g2 - r2

change. With the implicit hardening update the end-of-step values are

    A = A_tr - a_s dgamma,   a_s = 2 mu + k + mu alpha1
    B = B_tr - a_w domega,   a_w = k + mu alpha2

where ``k`` is an optional extra isotropic stiffness supplied by the field
solver (zero for a genuinely local computation).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .convex import (
    Branch,
    GeneralizedStress,
    YieldParams,
    ab_point,
    classify_ab,
    nearest_branch,
    phi_ab,
)
from .tensor_core import ElasticModuli, apply_Ciso, dev, norm, skew, sym, tr


class NonConvergence(RuntimeError):
    def __init__(self, iterations: int, residual: float, what: str = "local Newton"):
        super().__init__(f"{what} did not converge after {iterations} iterations (residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class DegenerateBranch(RuntimeError):
    """A flow direction is undefined or the local problem has no solution."""


NEWTON_TOL = 1e-12
MAX_ITER = 50


@dataclass(frozen=True)
class ModelParams:
    elastic: ElasticModuli
    yield_params: YieldParams
    Lc: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    rho: float = 1.0
    n_exp: int = 1
    m_exp: int = 1

    def __post_init__(self):
        if self.Lc < 0.0:
            raise ValueError(f"Lc must be non-negative, got {self.Lc}")
        if self.alpha1 < 0.0 or self.alpha2 < 0.0:
            raise ValueError("hardening moduli alpha1, alpha2 must be non-negative")
        if not self.rho > 0.0:
            raise ValueError(f"viscosity rho must be positive, got {self.rho}")
        if int(self.n_exp) != self.n_exp or self.n_exp < 1 or int(self.m_exp) != self.m_exp or self.m_exp < 1:
            raise ValueError("viscosity exponents n, m must be integers >= 1")

    @property
    def mu(self) -> float:
        return self.elastic.mu

    @property
    def dir_tol(self) -> float:
        return 1e-14 * self.yield_params.sigma0

    def forces(self, gamma_p, omega_p):
        return -self.mu * self.alpha1 * np.asarray(gamma_p), -self.mu * self.alpha2 * np.asarray(omega_p)


@dataclass(frozen=True)
class MaterialPointState:
    p: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    gamma_p: float = 0.0
    omega_p: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (3, 3):
            raise ValueError("plastic distortion must be a 3x3 tensor")
        if abs(tr(p)) > 1e-12 * max(1.0, float(norm(p))):
            raise ValueError("plastic distortion must be trace-free")
        if self.gamma_p < 0.0 or self.omega_p < 0.0:
            raise ValueError("gamma_p and omega_p must be non-negative")
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class FlowRateResult:
    dot_p: np.ndarray
    dot_gamma: float
    dot_omega: float
    lam: float
    branch: Branch


def _ratio(X, n, offset):
    """``X / n`` for ``X = n + offset``, exact when the offset vanishes."""
    X = np.asarray(X, float)
    n = np.asarray(n, float)
    offset = np.broadcast_to(np.asarray(offset, float), X.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(offset == 0.0, 1.0, X / n)
    if np.any(~np.isfinite(r)):
        raise DegenerateBranch("flow direction undefined: vanishing stress part with non-zero multiplier")
    return r


def _unit(X, n, coef, tol):
    """``coef * X / n`` with the convention 0 * (0/0) = 0."""
    X = np.asarray(X, dtype=float)
    n = np.asarray(n, dtype=float)
    coef = np.asarray(coef, dtype=float)
    small = (n < tol) | (n == 0.0)
    if np.any(small & (coef != 0.0)):
        raise DegenerateBranch("flow direction undefined: vanishing stress part with non-zero multiplier")
    safe = np.where(small, 1.0, n)
    scale = np.where(small, 0.0, coef / safe)
    return scale[..., None, None] * X


# ---------------------------------------------------------------------------
# rate forms


def dual_flow_rate(S: GeneralizedStress, lam: float, mp: ModelParams, tol: float | None = None) -> FlowRateResult:
    """Plastic rates from the dual flow law on the branch carrying ``S``."""
    if lam < 0.0:
        raise ValueError("plastic multiplier must be non-negative")
    yp = mp.yield_params
    Sig = np.asarray(S.Sigma_E, dtype=float)
    Dv, W = dev(sym(Sig)), skew(Sig)
    nD, nW = float(norm(Dv)), float(norm(W))
    p = ab_point(S, yp)
    branch = classify_ab(p.A, p.B, yp, tol)
    if lam == 0.0:
        return FlowRateResult(np.zeros((3, 3)), 0.0, 0.0, 0.0, branch)
    if branch == Branch.INTERIOR:
        raise ValueError("positive multiplier requires a stress state on the yield surface")
    if branch == Branch.S1:
        gdot, wdot = lam, 0.0
        rate = _unit(Dv, nD, lam, mp.dir_tol)
    elif branch == Branch.S2:
        gdot, wdot = 0.0, lam
        rate = _unit(W, nW, lam, mp.dir_tol)
    else:
        cs = 2.0 * lam / yp.sigma0**2
        cw = 2.0 * lam / yp.sigma_hat0**2
        gdot = cs * max(p.A, 0.0)
        rate_sym = cs * float(_ratio(max(p.A, 0.0), nD, S.g1 - yp.r1)) * Dv if p.A > 0.0 else np.zeros((3, 3))
        if mp.alpha2 == 0.0 and yp.r2 == 0.0:
            # no spin hardening: the skew rate is linear in skew Sigma_E
            rate_skew = cw * W
            wdot = float(norm(rate_skew))
        else:
            wdot = cw * max(p.B, 0.0)
            rate_skew = cw * float(_ratio(max(p.B, 0.0), nW, S.g2 - yp.r2)) * W if p.B > 0.0 else np.zeros((3, 3))
        rate = rate_sym + rate_skew
    return FlowRateResult(np.asarray(rate), float(gdot), float(wdot), float(lam), branch)


def _overstress_rate(excess, expo, rho):
    return np.where(excess > 0.0, np.maximum(excess, 0.0) ** expo / rho, 0.0)


def viscoplastic_rate(S: GeneralizedStress, mp: ModelParams) -> FlowRateResult:
    """Norton-Hoff overstress rates. Defined everywhere, zero inside the
    elastic domain."""
    yp = mp.yield_params
    Sig = np.asarray(S.Sigma_E, dtype=float)
    Dv, W = dev(sym(Sig)), skew(Sig)
    nD, nW = float(norm(Dv)), float(norm(W))
    gdot = float(_overstress_rate(nD - yp.sigma0 - yp.r1 + S.g1, mp.n_exp, mp.rho))
    wdot = float(_overstress_rate(nW - yp.sigma_hat0 - yp.r2 + S.g2, mp.m_exp, mp.rho))
    rate = _unit(Dv, nD, gdot, 0.0) + _unit(W, nW, wdot, 0.0)
    if gdot > 0.0 and wdot > 0.0:
        branch = Branch.S3
    elif gdot > 0.0:
        branch = Branch.S1
    elif wdot > 0.0:
        branch = Branch.S2
    else:
        branch = Branch.INTERIOR
    lam = 0.5 * float(np.hypot(yp.sigma0 * gdot, yp.sigma_hat0 * wdot))
    return FlowRateResult(rate, gdot, wdot, lam, branch)


def classical_limit_rate(sigma, g1: float, lambda_hat: float, yp: YieldParams) -> FlowRateResult:
    """Symmetric flow rule of classical plasticity with isotropic hardening."""
    if lambda_hat < 0.0:
        raise ValueError("plastic multiplier must be non-negative")
    sigma = np.asarray(sigma, dtype=float)
    if float(norm(skew(sigma))) > 1e-12 * max(1.0, float(norm(sigma))):
        raise ValueError("classical limit expects a symmetric stress")
    Dv = dev(sigma)
    rate = _unit(Dv, float(norm(Dv)), lambda_hat, 1e-14 * yp.sigma0)
    return FlowRateResult(rate, float(lambda_hat), 0.0, float(lambda_hat), Branch.S1)


def kkt_residual(S: GeneralizedStress, fr: FlowRateResult, yp: YieldParams) -> float:
    """``max(-lambda, phi, |lambda phi|)``; non-positive certifies KKT."""
    p = ab_point(S, yp)
    branch = fr.branch if fr.branch in (Branch.S1, Branch.S2, Branch.S3) else nearest_branch(p.A, p.B)
    phi = float(phi_ab(p.A, p.B, yp, branch))
    return max(-fr.lam, phi, abs(fr.lam * phi))


def accumulate_omega(history: Iterable[tuple[float, np.ndarray]]) -> float:
    """Accumulated plastic rotation ``sum dt |skew p_dot|`` of a rate history."""
    total = 0.0
    for dt, w in history:
        if dt <= 0.0:
            raise ValueError("time increments must be positive")
        total += dt * float(norm(skew(w)))
    return total


# ---------------------------------------------------------------------------
# incremental return map


@dataclass
class LocalUpdate:
    """Vectorized result of a local plastic update on ``N`` points."""

    dp: np.ndarray  # (N, 3, 3)
    dgamma: np.ndarray
    domega: np.ndarray
    Lam: np.ndarray  # incremental multiplier, lambda * dt
    branch: np.ndarray  # Branch codes, final state (INTERIOR for elastic steps)
    sigma: np.ndarray  # end-of-step Cauchy stress
    Sigma_E: np.ndarray  # end-of-step Eshelby stress of the local model
    A: np.ndarray
    B: np.ndarray
    phi: np.ndarray
    iterations: int = 0


def _s3_multiplier(a, b, ks, kw, tol=NEWTON_TOL, max_iter=MAX_ITER):
    """Solve ``a^2/(1+ks c)^2 + b^2/(1+kw c)^2 = 1`` for ``c >= 0``.

    ``a, b > 0`` with ``a^2 + b^2 > 1``. Newton on ``1/r(c) - 1`` (exactly
    linear when one term vanishes), safeguarded by bisection.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    ks = np.broadcast_to(np.asarray(ks, float), a.shape)
    kw = np.broadcast_to(np.asarray(kw, float), a.shape)
    if np.any((kw <= 0.0) & (b >= 1.0)):
        raise DegenerateBranch(
            "no local elastic restoring force on the plastic spin: the spin return "
            "has no solution (alpha2 = 0 without nonlocal stiffness)"
        )
    lo = np.zeros_like(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        hi_both = (np.hypot(a, b) - 1.0) / np.minimum(ks, np.where(kw > 0.0, kw, np.inf))
        hi_skewfree = (a / np.sqrt(np.maximum(1.0 - b * b, 1e-300)) - 1.0) / ks
    hi = np.where(kw > 0.0, hi_both, hi_skewfree)
    hi = np.maximum(hi, 0.0) * (1.0 + 1e-12) + 1e-300

    def resid(c):
        x = a / (1.0 + ks * c)
        y = b / (1.0 + kw * c)
        r = np.hypot(x, y)
        dr = -(x * x * ks / (1.0 + ks * c) + y * y * kw / (1.0 + kw * c)) / r
        return 1.0 / r - 1.0, -dr / (r * r), x * x + y * y - 1.0

    c = np.zeros_like(a)
    for it in range(1, max_iter + 1):
        h, dh, phi = resid(c)
        if np.all(np.abs(phi) <= tol):
            return c, it
        lo = np.where(h < 0.0, np.maximum(lo, c), lo)
        hi = np.where(h > 0.0, np.minimum(hi, c), hi)
        step = c - h / dh
        outside = ~((step > lo) & (step < hi))
        c = np.where(np.abs(phi) <= tol, c, np.where(outside, 0.5 * (lo + hi), step))
    h, dh, phi = resid(c)
    if np.all(np.abs(phi) <= tol):
        return c, max_iter
    raise NonConvergence(max_iter, float(np.max(np.abs(phi))))


def return_map_stress(
    sig_tr,
    backstress,
    gamma,
    omega,
    mp: ModelParams,
    extra_stiffness=0.0,
    admissible_tol: float = 0.0,
) -> LocalUpdate:
    """Rate-independent return map for a stack of trial states.

    Parameters
    ----------
    sig_tr : (N, 3, 3) array
        Trial Cauchy stress (plastic distortion frozen at its start value).
    backstress : (N, 3, 3) array
        Nonlocal backstress held fixed during the local solve.
    gamma, omega : (N,) arrays
        Accumulated plastic strain and rotation at the start of the step.
    extra_stiffness : float or (N,) array
        Isotropic stiffness added to both local restoring forces.
    """
    yp = mp.yield_params
    mu = mp.mu
    sig_tr = np.asarray(sig_tr, float).reshape(-1, 3, 3)
    backstress = np.asarray(backstress, float).reshape(-1, 3, 3)
    gamma = np.asarray(gamma, float).reshape(-1)
    omega = np.asarray(omega, float).reshape(-1)
    N = sig_tr.shape[0]
    k = np.broadcast_to(np.asarray(extra_stiffness, float), (N,))

    Sig = sig_tr + backstress
    Dtr, Wtr = dev(sym(Sig)), skew(Sig)
    nD, nW = norm(Dtr), norm(Wtr)
    g1, g2 = mp.forces(gamma, omega)
    Atr = nD + g1 - yp.r1
    Btr = nW + g2 - yp.r2

    s0, sh0 = yp.sigma0, yp.sigma_hat0
    a_s = 2.0 * mu + k + mu * mp.alpha1
    a_w = k + mu * mp.alpha2

    near = np.where(Btr <= 0.0, Branch.S1, np.where(Atr <= 0.0, Branch.S2, Branch.S3))
    phi_tr = np.where(
        near == Branch.S1,
        Atr - s0,
        np.where(near == Branch.S2, Btr - sh0, (np.maximum(Atr, 0) / s0) ** 2 + (np.maximum(Btr, 0) / sh0) ** 2 - 1.0),
    )
    plastic = phi_tr > admissible_tol

    dgam = np.zeros(N)
    dome = np.zeros(N)
    Lam = np.zeros(N)
    scale_D = np.zeros(N)
    scale_W = np.zeros(N)
    iters = 0

    m1 = plastic & (near == Branch.S1)
    dgam[m1] = (Atr[m1] - s0) / a_s[m1]
    Lam[m1] = dgam[m1]

    m2 = plastic & (near == Branch.S2)
    if np.any(m2):
        if np.any(a_w[m2] <= 0.0):
            raise DegenerateBranch(
                "spin branch activated without spin hardening or nonlocal stiffness; "
                "use the visco-plastic path for alpha2 = 0"
            )
        dome[m2] = (Btr[m2] - sh0) / a_w[m2]
        Lam[m2] = dome[m2]

    m3 = plastic & (near == Branch.S3)
    if np.any(m3):
        a = Atr[m3] / s0
        b = Btr[m3] / sh0
        ks = a_s[m3] / s0**2
        kw = a_w[m3] / sh0**2
        c, iters = _s3_multiplier(a, b, ks, kw)
        A_end = Atr[m3] / (1.0 + ks * c)
        B_end = Btr[m3] / (1.0 + kw * c)
        dgam[m3] = c * A_end / s0**2
        dome[m3] = c * B_end / sh0**2
        Lam[m3] = 0.5 * c
        # on S3 the increment is proportional to the stress part itself,
        # dgamma / |D| = c / (sigma0^2 (1 + ks c)) * A / |D|, so no direction
        # norm appears in a denominator when the offset g1 - r1 vanishes
        scale_D[m3] = c / (s0**2 * (1.0 + ks * c)) * _ratio(Atr[m3], nD[m3], g1[m3] - yp.r1)
        scale_W[m3] = c / (sh0**2 * (1.0 + kw * c)) * _ratio(Btr[m3], nW[m3], g2[m3] - yp.r2)

    for mk, sc, num, den in ((m1, scale_D, dgam, nD), (m2, scale_W, dome, nW)):
        if np.any(mk & (den < mp.dir_tol)):
            raise DegenerateBranch("flow direction undefined: vanishing stress part with non-zero multiplier")
        sc[mk] = num[mk] / den[mk]
    dp = scale_D[:, None, None] * Dtr + scale_W[:, None, None] * Wtr
    sigma = sig_tr - 2.0 * mu * sym(dp)
    Sigma_E = sigma + backstress - k[:, None, None] * dp

    A = Atr - a_s * dgam
    B = Btr - a_w * dome
    branch = np.where(plastic, near, Branch.INTERIOR)
    phi = np.where(
        branch == Branch.S1,
        A - s0,
        np.where(branch == Branch.S2, B - sh0, np.where(branch == Branch.S3, (A / s0) ** 2 + (B / sh0) ** 2 - 1.0, phi_tr)),
    )
    return LocalUpdate(dp, dgam, dome, Lam, branch.astype(int), sigma, Sigma_E, A, B, phi, iters)


def _monotone_root(fun, lo, hi, tol, max_iter=200):
    """Vectorized bisection-safeguarded Newton for increasing ``fun``."""
    x = lo.copy()
    for _ in range(max_iter):
        f, df = fun(x)
        done = np.abs(f) <= tol
        if np.all(done):
            return x
        lo = np.where(f < 0.0, x, lo)
        hi = np.where(f > 0.0, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - f / df
        ok = (step > lo) & (step < hi) & np.isfinite(step)
        x = np.where(done, x, np.where(ok, step, 0.5 * (lo + hi)))
        if np.all(hi - lo <= 1e-15 * np.maximum(hi, 1e-300)):
            return x
    f, _ = fun(x)
    raise NonConvergence(max_iter, float(np.max(np.abs(f))), "visco-plastic update")


def viscoplastic_update_stress(
    sig_tr,
    backstress,
    gamma,
    omega,
    mp: ModelParams,
    dt: float,
    extra_stiffness=0.0,
    rho: float | None = None,
) -> LocalUpdate:
    """Implicit Euler step of the Norton-Hoff regularization.

    The symmetric and skew parts decouple; each increment solves
    ``rho x / dt = [X_tr - a x - yield]_+^n`` on ``[0, (X_tr - yield)/a]``.
    """
    yp = mp.yield_params
    mu = mp.mu
    rho = mp.rho if rho is None else rho
    sig_tr = np.asarray(sig_tr, float).reshape(-1, 3, 3)
    backstress = np.asarray(backstress, float).reshape(-1, 3, 3)
    gamma = np.asarray(gamma, float).reshape(-1)
    omega = np.asarray(omega, float).reshape(-1)
    N = sig_tr.shape[0]
    k = np.broadcast_to(np.asarray(extra_stiffness, float), (N,))

    Sig = sig_tr + backstress
    Dtr, Wtr = dev(sym(Sig)), skew(Sig)
    nD, nW = norm(Dtr), norm(Wtr)
    g1, g2 = mp.forces(gamma, omega)
    a_s = 2.0 * mu + k + mu * mp.alpha1
    a_w = k + mu * mp.alpha2
    over_s = nD + g1 - yp.r1 - yp.sigma0
    over_w = nW + g2 - yp.r2 - yp.sigma_hat0
    eta = rho / dt

    def solve(over, a, expo):
        x = np.zeros(N)
        m = over > 0.0
        if not np.any(m):
            return x
        ov, am = over[m], a[m]

        def fun(z):
            e = np.maximum(ov - am * z, 0.0)
            return eta * z - e**expo, eta + expo * am * e ** (expo - 1)

        hi = np.where(am > 0.0, ov / np.where(am > 0.0, am, 1.0), ov**expo / eta)
        tol = 1e-13 * np.maximum(eta * hi, ov**expo)
        x[m] = _monotone_root(fun, np.zeros_like(ov), hi * (1 + 1e-12), tol)
        return x

    dgam = solve(over_s, a_s, mp.n_exp)
    dome = solve(over_w, a_w, mp.m_exp)
    dp = _unit(Dtr, nD, dgam, mp.dir_tol) + _unit(Wtr, nW, dome, mp.dir_tol)
    sigma = sig_tr - 2.0 * mu * sym(dp)
    Sigma_E = sigma + backstress - k[:, None, None] * dp
    A = nD + g1 - yp.r1 - a_s * dgam
    B = nW + g2 - yp.r2 - a_w * dome
    branch = np.where(
        (dgam > 0) & (dome > 0), Branch.S3, np.where(dgam > 0, Branch.S1, np.where(dome > 0, Branch.S2, Branch.INTERIOR))
    )
    lam = 0.5 * np.hypot(yp.sigma0 * dgam, yp.sigma_hat0 * dome)
    phi = np.maximum(A - yp.sigma0, B - yp.sigma_hat0)
    return LocalUpdate(dp, dgam, dome, lam, branch.astype(int), sigma, Sigma_E, A, B, phi)


def return_map(
    state: MaterialPointState,
    strain_trial,
    backstress,
    mp: ModelParams,
    dt: float,
    extra_stiffness: float = 0.0,
):
    """Incremental rate-independent update of one material point.

    Parameters
    ----------
    state : MaterialPointState
        State at the start of the step.
    strain_trial : (3, 3) array
        Total strain ``sym grad u`` at the end of the step.
    backstress : (3, 3) array
        Frozen nonlocal backstress ``-mu Lc^2 Curl Curl p``.
    dt : float
        Step length, only used to convert increments into rates.

    Returns
    -------
    new_state, sigma, FlowRateResult
    """
    if not dt > 0.0:
        raise ValueError("time step must be positive")
    eps = sym(strain_trial)
    sig_tr = apply_Ciso(mp.elastic, eps - sym(state.p))
    up = return_map_stress(sig_tr, backstress, state.gamma_p, state.omega_p, mp, extra_stiffness)
    dp = up.dp[0]
    new_state = replace(
        state,
        p=state.p + dp,
        gamma_p=state.gamma_p + float(up.dgamma[0]),
        omega_p=state.omega_p + float(up.domega[0]),
    )
    fr = FlowRateResult(dp / dt, float(up.dgamma[0]) / dt, float(up.domega[0]) / dt, float(up.Lam[0]) / dt, Branch(int(up.branch[0])))
    return new_state, up.sigma[0], fr


def local_generalized_stress(up: LocalUpdate, gamma_end, omega_end, mp: ModelParams, i: int = 0) -> GeneralizedStress:
    g1, g2 = mp.forces(gamma_end, omega_end)
    return GeneralizedStress(up.Sigma_E[i], float(np.ravel(g1)[i] if np.ndim(g1) else g1), float(np.ravel(g2)[i] if np.ndim(g2) else g2))
