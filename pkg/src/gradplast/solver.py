"""Quasi-static incremental solver for the coupled field problem.

Each load step minimizes the incremental potential

    Psi(u, p, gamma, omega) - W_ext + sum_n w_n Dhat(dgamma_n, domega_n)

over the nodal unknowns. Displacements are eliminated by an exact
equilibrium solve, which leaves a convex problem in the plastic variables.
The outer loop is a proximal-gradient iteration on that problem: the
nonlocal backstress is evaluated at the current iterate and held fixed while
every node performs its local return map, with an isotropic stabilization
stiffness ``k`` bounding the curvature of the defect energy. Extrapolation
with adaptive restart accelerates the iteration; without the curvature bound
the plain frozen-backstress iteration diverges once ``mu Lc^2 / h^2``
exceeds the local elastic stiffness.

Nodes on micro-hard walls are updated by the exact constrained local problem
``p = v (x) n``, ``v . n = 0``; nodes where several micro-hard faces meet keep
``p = 0``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse.linalg as spla
from scipy.optimize import brentq

from .fem import Q1Space, build_space, curl_stiffness, stiffness
from .fields import BoundaryMask, GridSpec, TensorField, apply_micro_hard, face_nodes
from .flow_rule import (
    LocalUpdate,
    MaterialPointState,
    ModelParams,
    return_map_stress,
    viscoplastic_update_stress,
)
from .tensor_core import apply_Ciso, apply_Ciso_inverse, inner, norm, skew, sym

RATE_INDEPENDENT = "rate_independent"
VISCOPLASTIC = "viscoplastic"


class OuterNonConvergence(RuntimeError):
    def __init__(self, iterations, residual, t):
        super().__init__(
            f"outer fixed-point iteration stalled at t={t:.6g} after {iterations} iterations "
            f"(residual {residual:.3e}); try a smaller time step"
        )
        self.iterations = iterations
        self.residual = residual


class EquilibriumNonConvergence(RuntimeError):
    pass


@dataclass
class LoadProgram:
    """Piecewise linear load factor applied to a macroscopic displacement
    gradient on the Dirichlet faces and to a uniform body force."""

    grad: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    body_force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    times: Sequence[float] = (0.0, 1.0)
    factors: Sequence[float] = (0.0, 1.0)

    def __post_init__(self):
        self.grad = np.asarray(self.grad, dtype=float).reshape(3, 3)
        self.body_force = np.asarray(self.body_force, dtype=float).reshape(3)
        self.times = tuple(float(t) for t in self.times)
        self.factors = tuple(float(f) for f in self.factors)
        if len(self.times) != len(self.factors) or len(self.times) < 1:
            raise ValueError("load program needs matching, non-empty times and factors")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("load program times must be strictly increasing")

    def factor(self, t: float) -> float:
        return float(np.interp(t, self.times, self.factors))


@dataclass
class Stepping:
    dt: float
    n_steps: int
    path: str = RATE_INDEPENDENT
    rho_schedule: tuple = ()

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.path not in (RATE_INDEPENDENT, VISCOPLASTIC):
            raise ValueError(f"unknown path {self.path!r}")
        self.rho_schedule = tuple(float(r) for r in self.rho_schedule)
        if any(not r > 0.0 for r in self.rho_schedule):
            raise ValueError("rho schedule entries must be positive")


@dataclass
class FixedPointOptions:
    max_outer: int = 5000
    tol_rel: float = 1e-8
    tol_abs: float = 1e-12
    tol_eq: float = 1e-10
    accelerate: bool = True
    linear_solver: str = "cg"

    def __post_init__(self):
        if not (self.tol_rel > 0.0 and self.tol_abs > 0.0):
            raise ValueError("outer tolerances must be positive")
        if self.linear_solver not in ("cg", "direct"):
            raise ValueError("linear_solver must be 'cg' or 'direct'")


@dataclass
class ProblemConfig:
    params: ModelParams
    grid: GridSpec
    mask: BoundaryMask
    load: LoadProgram
    stepping: Stepping
    fixed_point: FixedPointOptions = field(default_factory=FixedPointOptions)
    dirichlet: tuple = ()
    _disc: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.dirichlet:
            raise ValueError("at least one Dirichlet face is required")
        for f in self.dirichlet:
            face_nodes(self.grid, f)

    @property
    def tol_kkt(self) -> float:
        return 1e-8 * self.params.yield_params.sigma0

    @property
    def audit_tol(self) -> float:
        return 1e-10 * self.params.mu * self.grid.volume

    def replace(self, **kw) -> "ProblemConfig":
        kw.setdefault("_disc", None)
        return replace(self, **kw)


@dataclass
class SolutionState:
    """Nodal solution. ``sigma`` is the lumped projection of the Gauss-point
    stress, ``Sigma_curl`` the nonlocal backstress."""

    u: np.ndarray
    p: np.ndarray
    gamma_p: np.ndarray
    omega_p: np.ndarray
    sigma: np.ndarray
    Sigma_curl: np.ndarray
    t: float
    sigma_q: np.ndarray = field(repr=False, default=None)
    grad_u_q: np.ndarray = field(repr=False, default=None)
    u_free: np.ndarray = field(repr=False, default=None)
    dp_last: np.ndarray = field(repr=False, default=None)

    def points(self) -> list:
        return [MaterialPointState(self.p[i], float(self.gamma_p[i]), float(self.omega_p[i])) for i in range(len(self.p))]

    def copy(self) -> "SolutionState":
        return replace(self, **{k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()})


@dataclass
class EnergyReport:
    elastic_energy: float
    defect_energy: float
    hardening_energy: float
    dissipation_increment: float
    total: float
    external_work_increment: float = 0.0


@dataclass
class StepInfo:
    outer_iterations: int
    residual: float
    kkt_max: float
    n_plastic: int


# ---------------------------------------------------------------------------
# discretization cache


@dataclass
class _Disc:
    space: Q1Space
    K: object
    Kcurl: object
    free: np.ndarray  # free displacement dofs
    K_ff: object
    solve_direct: Callable | None
    jacobi: object
    k_stab: float
    hard: np.ndarray  # (Nn,) bool
    wall: np.ndarray  # (Nn,) bool, single-face hard nodes
    normals: np.ndarray  # (Nn, 3)
    unconstrained: np.ndarray


def discretization(cfg: ProblemConfig) -> _Disc:
    if cfg._disc is not None:
        return cfg._disc
    g = cfg.grid
    space = build_space(g)
    K = stiffness(space, cfg.params.elastic)
    Kcurl = curl_stiffness(space)
    fixed = np.zeros(g.shape, dtype=bool)
    for f in cfg.dirichlet:
        fixed |= face_nodes(g, f)
    fixed_dof = np.repeat(fixed.reshape(-1), 3)
    free = np.flatnonzero(~fixed_dof)
    K_ff = K[free][:, free].tocsc()
    solve_direct = spla.factorized(K_ff) if cfg.fixed_point.linear_solver == "direct" and len(free) else None
    diag = K_ff.diagonal() if len(free) else np.ones(0)
    jacobi = spla.LinearOperator(K_ff.shape, matvec=lambda x: x / diag) if len(free) else None

    mp = cfg.params
    use_hard = mp.Lc > 0.0
    hard = cfg.mask.hard_nodes().reshape(-1) & use_hard
    nf = cfg.mask.n_faces.reshape(-1)
    wall = hard & (nf == 1)
    normals = cfg.mask.normals.reshape(-1, 3)
    if mp.Lc > 0.0:
        # Gershgorin bound of mu Lc^2 M^-1 Kcurl in the lumped metric, per node block
        rowsum = np.asarray(abs(Kcurl).sum(axis=1)).reshape(-1, 9).max(axis=1)
        k_stab = mp.mu * mp.Lc**2 * float(np.max(rowsum / space.wn))
    else:
        k_stab = 0.0
    d = _Disc(space, K, Kcurl, free, K_ff, solve_direct, jacobi, k_stab, hard, wall, normals, ~hard)
    cfg._disc = d
    return d


# ---------------------------------------------------------------------------
# equilibrium


def _stress_q(disc: _Disc, cfg: ProblemConfig, u_free, p, lam):
    """Gauss-point displacement gradient and stress."""
    space = disc.space
    Nn = space.n_nodes
    ut = np.zeros(Nn * 3)
    ut[disc.free] = u_free
    H = space.grad(ut.reshape(Nn, 3)) + lam * cfg.load.grad
    pq = space.interp(p.reshape(Nn, 9)).reshape(-1, 3, 3)
    return H, apply_Ciso(cfg.params.elastic, H - pq)


def _solve_u(disc: _Disc, cfg: ProblemConfig, p, lam, x0=None):
    space = disc.space
    Nn, Nq = space.n_nodes, space.n_quad
    if len(disc.free) == 0:
        return np.zeros(0)
    pq = space.interp(p.reshape(Nn, 9)).reshape(-1, 3, 3)
    r = apply_Ciso(cfg.params.elastic, pq - lam * cfg.load.grad)
    rhs = space.Bu.T @ (space.wq[:, None] * r.reshape(Nq, 9)).reshape(-1)
    rhs = rhs + np.outer(space.wn, lam * cfg.load.body_force).reshape(-1)
    b = rhs[disc.free]
    if disc.solve_direct is not None:
        return disc.solve_direct(b)
    bn = np.linalg.norm(b)
    if bn == 0.0:
        return np.zeros_like(b)
    x, info = spla.cg(disc.K_ff, b, x0=x0, rtol=cfg.fixed_point.tol_eq, atol=0.0, M=disc.jacobi, maxiter=20 * len(b) + 100)
    if info != 0:
        raise EquilibriumNonConvergence(f"conjugate gradient did not reach rtol={cfg.fixed_point.tol_eq} (info={info})")
    return x


def solve_equilibrium(p_field: TensorField | np.ndarray, cfg: ProblemConfig, t: float | None = None, lam: float | None = None):
    """Nodal displacement ``(N, 3)`` in equilibrium with a plastic distortion.

    ``lam`` is the load factor; if omitted it is taken from the load program
    at time ``t`` (default: the final time of the program).
    """
    p = p_field.values if isinstance(p_field, TensorField) else np.asarray(p_field, dtype=float)
    p = p.reshape(-1, 3, 3)
    if np.max(np.abs(np.trace(p, axis1=-2, axis2=-1)), initial=0.0) > 1e-12 * max(1.0, float(np.max(np.abs(p), initial=0.0))):
        raise ValueError("plastic distortion must be trace-free")
    disc = discretization(cfg)
    if lam is None:
        lam = cfg.load.factor(cfg.load.times[-1] if t is None else t)
    uf = _solve_u(disc, cfg, p, lam)
    return _full_u(disc, cfg, uf, lam)


def _full_u(disc, cfg, u_free, lam):
    Nn = disc.space.n_nodes
    ut = np.zeros(Nn * 3)
    ut[disc.free] = u_free
    X = cfg.grid.coords().reshape(-1, 3)
    return ut.reshape(Nn, 3) + lam * X @ cfg.load.grad.T


def equilibrium_residual(state: SolutionState, cfg: ProblemConfig) -> float:
    """Max nodal residual of the discrete equilibrium equations at free dofs."""
    disc = discretization(cfg)
    space = disc.space
    lam = cfg.load.factor(state.t)
    _, sq = _stress_q(disc, cfg, state.u_free, state.p, lam)
    r = space.Bu.T @ (space.wq[:, None] * sq.reshape(-1, 9)).reshape(-1)
    r = r - np.outer(space.wn, lam * cfg.load.body_force).reshape(-1)
    return float(np.max(np.abs(r[disc.free]), initial=0.0))


# ---------------------------------------------------------------------------
# local updates on micro-hard walls


def _wall_update(Sig, n, gamma, omega, mp: ModelParams, k, dt, rho):
    """Exact local update on single-face micro-hard nodes: ``dp = d (x) n``
    with ``d . n = 0`` and ``dgamma = domega = |d| / sqrt(2)``."""
    yp = mp.yield_params
    mu = mp.mu
    r2 = math.sqrt(2.0)
    bvec = np.einsum("nij,nj->ni", Sig, n)
    bvec = bvec - np.einsum("ni,ni->n", bvec, n)[:, None] * n
    bn = np.linalg.norm(bvec, axis=1)
    base = (mu * mp.alpha1 * gamma + mu * mp.alpha2 * omega + yp.r1 + yp.r2) / r2
    a_t = mu + k + 0.5 * mu * (mp.alpha1 + mp.alpha2)
    if rho is None:
        t = np.maximum(bn - base - math.sqrt(0.5 * (yp.sigma0**2 + yp.sigma_hat0**2)), 0.0) / a_t
    else:
        t = np.zeros_like(bn)
        for i in range(len(bn)):
            drive = bn[i] - base[i] - (yp.sigma0 + yp.sigma_hat0) / r2

            def f(x):
                s = rho * x / (r2 * dt)
                return a_t * x + (s ** (1.0 / mp.n_exp) + s ** (1.0 / mp.m_exp)) / r2 - drive

            if drive > 0.0:
                t[i] = brentq(f, 0.0, drive / a_t, xtol=1e-16, rtol=1e-14)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.where(bn[:, None] > 0.0, bvec * (t / np.where(bn > 0, bn, 1.0))[:, None], 0.0)
    dp = d[:, :, None] * n[:, None, :]
    return dp, t / r2, t / r2


# ---------------------------------------------------------------------------
# the step


def _wnorm(x, wn, vol):
    return math.sqrt(float(np.sum(wn * np.sum(x.reshape(len(wn), -1) ** 2, axis=1))) / vol)


def _backstress(disc: _Disc, mp: ModelParams, p):
    if mp.Lc == 0.0:
        return np.zeros_like(p)
    Nn = disc.space.n_nodes
    return (-mp.mu * mp.Lc**2 * (disc.Kcurl @ p.reshape(-1)).reshape(Nn, 9) / disc.space.wn[:, None]).reshape(Nn, 3, 3)


def _outer(disc, cfg, state, lam, p_start, dt, rho, u0):
    mp = cfg.params
    fp = cfg.fixed_point
    space = disc.space
    k = disc.k_stab
    p_old, g_old, w_old = state.p, state.gamma_p, state.omega_p
    free_nodes = disc.unconstrained
    wall = disc.wall
    vol = cfg.grid.volume
    y = p_start.copy()
    p_prev = p_start.copy()
    tk = 1.0
    uf = u0
    last = None
    res = math.inf
    for it in range(1, fp.max_outer + 1):
        uf = _solve_u(disc, cfg, y, lam, uf)
        _, sq = _stress_q(disc, cfg, uf, y, lam)
        s = space.project(sq)
        b = _backstress(disc, mp, y)
        sig_tr = s + apply_Ciso(mp.elastic, y - p_old)
        beff = b + k * (y - p_old)
        dp = np.zeros_like(p_old)
        dg = np.zeros_like(g_old)
        dw = np.zeros_like(w_old)
        if np.any(free_nodes):
            if rho is None:
                up = return_map_stress(sig_tr[free_nodes], beff[free_nodes], g_old[free_nodes], w_old[free_nodes], mp, k)
            else:
                up = viscoplastic_update_stress(
                    sig_tr[free_nodes], beff[free_nodes], g_old[free_nodes], w_old[free_nodes], mp, dt, k, rho
                )
            dp[free_nodes], dg[free_nodes], dw[free_nodes] = up.dp, up.dgamma, up.domega
            last = up
        if np.any(wall):
            dpw, dgw, dww = _wall_update(
                sig_tr[wall] + beff[wall], disc.normals[wall], g_old[wall], w_old[wall], mp, k, dt, rho
            )
            dp[wall], dg[wall], dw[wall] = dpw, dgw, dww
        p_new = p_old + dp
        if np.any(disc.hard):
            pf = TensorField(cfg.grid, p_new.reshape(cfg.grid.shape + (3, 3)), cfg.mask)
            p_new = apply_micro_hard(pf, trace_free=True).values.reshape(-1, 3, 3)
        res = _wnorm(p_new - y, space.wn, vol)
        tol = fp.tol_rel * _wnorm(p_new, space.wn, vol) + fp.tol_abs
        if res <= tol:
            return p_new, g_old + dg, w_old + dw, last, it, res, uf
        if fp.accelerate:
            if np.sum((y - p_new) * (p_new - p_prev)) > 0.0:
                tk = 1.0
                y = p_new
            else:
                t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
                y = p_new + ((tk - 1.0) / t_next) * (p_new - p_prev)
                tk = t_next
        else:
            y = p_new
        p_prev = p_new
    raise OuterNonConvergence(fp.max_outer, res, state.t + dt)


def _finalize(disc, cfg, p, gamma, omega, t, lam, u_free):
    uf = _solve_u(disc, cfg, p, lam, u_free)
    H, sq = _stress_q(disc, cfg, uf, p, lam)
    return SolutionState(
        u=_full_u(disc, cfg, uf, lam),
        p=p,
        gamma_p=gamma,
        omega_p=omega,
        sigma=disc.space.project(sq),
        Sigma_curl=_backstress(disc, cfg.params, p),
        t=t,
        sigma_q=sq,
        grad_u_q=H,
        u_free=uf,
    )


def initial_state(cfg: ProblemConfig, p0=None) -> SolutionState:
    """Zero plastic state in equilibrium with the load at the first time."""
    disc = discretization(cfg)
    Nn = disc.space.n_nodes
    p = np.zeros((Nn, 3, 3)) if p0 is None else np.asarray(p0, dtype=float).reshape(Nn, 3, 3).copy()
    t0 = cfg.load.times[0]
    return _finalize(disc, cfg, p, np.zeros(Nn), np.zeros(Nn), t0, cfg.load.factor(t0), None)


def _kkt(up: LocalUpdate | None) -> float:
    if up is None or len(up.Lam) == 0:
        return -math.inf
    return float(np.max(np.maximum(np.maximum(-up.Lam, up.phi), np.abs(up.Lam * up.phi))))


def time_step(state: SolutionState, cfg: ProblemConfig, return_info: bool = False):
    """Advance one step of length ``cfg.stepping.dt``.

    Returns ``(new_state, EnergyReport)`` and, with ``return_info``, a
    :class:`StepInfo` as third item.
    """
    disc = discretization(cfg)
    mp = cfg.params
    dt = cfg.stepping.dt
    t1 = state.t + dt
    lam = cfg.load.factor(t1)
    if cfg.stepping.path == RATE_INDEPENDENT:
        rhos = [None]
    else:
        rhos = list(cfg.stepping.rho_schedule) or [mp.rho]
    p_iter = state.p.copy()
    if mp.Lc > 0.0 and state.dp_last is not None:
        # extrapolated start; the fixed point does not depend on it
        p_iter = p_iter + state.dp_last
    uf = state.u_free
    iters = 0
    for rho in rhos:
        p_new, g_new, w_new, up, it, res, uf = _outer(disc, cfg, state, lam, p_iter, dt, rho, uf)
        p_iter = p_new
        iters += it
    new = _finalize(disc, cfg, p_new, g_new, w_new, t1, lam, uf)
    new.dp_last = p_new - state.p
    rep = assemble_energy(new, cfg, previous=state)
    kkt = _kkt(up) if rhos[-1] is None else -math.inf
    info = StepInfo(iters, res, kkt, int(np.sum((g_new > state.gamma_p) | (w_new > state.omega_p))))
    if return_info:
        return new, rep, info
    return new, rep


# ---------------------------------------------------------------------------
# energies and audits


def assemble_energy(state: SolutionState, cfg: ProblemConfig, previous: SolutionState | None = None) -> EnergyReport:
    """Stored energies of a state and, given the previous state, the
    dissipation and external work of the step.

    Elastic and defect energies are integrated with the Gauss rule of the
    discretization, hardening energy and dissipation with nodal weights.
    """
    disc = discretization(cfg)
    space = disc.space
    mp = cfg.params
    if state.sigma_q is None or state.grad_u_q is None:
        lam = cfg.load.factor(state.t)
        H, sq = _stress_q(disc, cfg, state.u_free if state.u_free is not None else np.zeros(len(disc.free)), state.p, lam)
    else:
        H, sq = state.grad_u_q, state.sigma_q
    Nn = space.n_nodes
    pq = space.interp(state.p.reshape(Nn, 9)).reshape(-1, 3, 3)
    e = sym(H - pq)
    elastic = 0.5 * space.integrate(inner(sq, e))
    pf = state.p.reshape(-1)
    defect = 0.5 * mp.mu * mp.Lc**2 * float(pf @ (disc.Kcurl @ pf)) if mp.Lc > 0 else 0.0
    hard = 0.5 * mp.mu * float(np.sum(space.wn * (mp.alpha1 * state.gamma_p**2 + mp.alpha2 * state.omega_p**2)))
    diss = 0.0
    work = 0.0
    if previous is not None:
        dp = state.p - previous.p
        SigE = state.sigma + state.Sigma_curl
        g1, g2 = mp.forces(state.gamma_p, state.omega_p)
        pw = inner(SigE, dp) + g1 * (state.gamma_p - previous.gamma_p) + g2 * (state.omega_p - previous.omega_p)
        diss = float(np.sum(space.wn * pw))
        Hp = previous.grad_u_q
        sp_prev = previous.sigma_q
        if Hp is not None and sp_prev is not None:
            work = 0.5 * space.integrate(inner(sq + sp_prev, H - Hp))
    return EnergyReport(elastic, defect, hard, diss, elastic + defect + hard, work)


def difference_metric(s1: SolutionState, s2: SolutionState, cfg: ProblemConfig) -> float:
    """``|C^-1/2 dsigma|^2 + mu Lc^2 |Curl dp|^2 + mu a1 |dgamma|^2 + mu a2 |domega|^2``."""
    disc = discretization(cfg)
    space = disc.space
    mp = cfg.params
    ds = s1.sigma_q - s2.sigma_q
    el = space.integrate(inner(ds, apply_Ciso_inverse(mp.elastic, sym(ds))))
    dpf = (s1.p - s2.p).reshape(-1)
    cu = mp.mu * mp.Lc**2 * float(dpf @ (disc.Kcurl @ dpf)) if mp.Lc > 0 else 0.0
    hd = mp.mu * float(np.sum(space.wn * (mp.alpha1 * (s1.gamma_p - s2.gamma_p) ** 2 + mp.alpha2 * (s1.omega_p - s2.omega_p) ** 2)))
    return el + cu + hd


# ---------------------------------------------------------------------------
# drivers


@dataclass
class StepRecord:
    t: float
    energy: EnergyReport
    info: StepInfo
    dissipation_cum: float
    max_gamma_p: float
    max_omega_p: float
    norm_skew_p: float


@dataclass
class RunResult:
    cfg: ProblemConfig
    states: list
    records: list

    @property
    def final(self) -> SolutionState:
        return self.states[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) if hasattr(r, name) else getattr(r.energy, name) for r in self.records])


def skew_norm(state: SolutionState, cfg: ProblemConfig) -> float:
    """Discrete L2 norm of skew p with nodal weights."""
    disc = discretization(cfg)
    return math.sqrt(float(np.sum(disc.space.wn * norm(skew(state.p)) ** 2)))


def run(cfg: ProblemConfig, p0=None, keep_states: bool = True, callback=None) -> RunResult:
    state = initial_state(cfg, p0)
    states = [state]
    records = []
    dcum = 0.0
    for _ in range(cfg.stepping.n_steps):
        new, rep, info = time_step(state, cfg, return_info=True)
        dcum += rep.dissipation_increment
        rec = StepRecord(
            new.t, rep, info, dcum, float(np.max(new.gamma_p)), float(np.max(new.omega_p)), skew_norm(new, cfg)
        )
        records.append(rec)
        if callback is not None:
            callback(new, rec)
        state = new
        if keep_states:
            states.append(new)
    if not keep_states:
        states.append(state)
    return RunResult(cfg, states, records)


@dataclass
class UniquenessReport:
    times: np.ndarray
    metric: np.ndarray
    max_relative_increase: float
    non_increasing: bool


def admissible_perturbation(cfg: ProblemConfig, magnitude: float, seed: int = 0) -> np.ndarray:
    """Smooth random trace-free field that satisfies the micro-hard condition."""
    rng = np.random.default_rng(seed)
    g = cfg.grid
    X = g.coords()
    Lx = g.lengths
    bump = np.ones(g.shape)
    for a in g.axes:
        bump = bump * np.sin(np.pi * X[..., a] / Lx[a])
    P = rng.normal(size=(3, 3))
    P = P - np.trace(P) / 3.0 * np.eye(3)
    P = P / np.linalg.norm(P)
    field_ = magnitude * bump[..., None, None] * P
    mask = cfg.mask
    f = apply_micro_hard(TensorField(g, field_, mask), trace_free=True)
    return f.values.reshape(-1, 3, 3)


def uniqueness_contraction_check(cfg: ProblemConfig, perturbation: float, seed: int = 0, band: float = 0.05) -> UniquenessReport:
    """Twin runs from ``p(0) = 0`` and from a perturbed admissible ``p(0)``."""
    a = run(cfg)
    p0 = admissible_perturbation(cfg, perturbation, seed)
    b = run(cfg, p0=p0)
    m = np.array([difference_metric(s1, s2, cfg) for s1, s2 in zip(a.states, b.states)])
    times = np.array([s.t for s in a.states])
    peak = np.maximum.accumulate(m)
    scale = max(float(m[0]), 1e-300)
    inc = float(np.max((m[1:] - peak[:-1]) / scale, initial=0.0))
    return UniquenessReport(times, m, inc, inc <= band)


@dataclass
class LcStudyReport:
    Lc_values: list
    skew_norms: list
    gamma_max: list
    runs: list = field(repr=False, default_factory=list)
    seconds: list = field(default_factory=list)  # wall time per run

    @property
    def monotone(self) -> bool:
        s = self.skew_norms
        return all(b <= a for a, b in zip(s, s[1:]))


def limit_study_Lc(cfg: ProblemConfig, Lc_values: Sequence[float]) -> LcStudyReport:
    """Run the same program for a descending list of length scales."""
    Lc_values = list(Lc_values)
    if any(b > a for a, b in zip(Lc_values, Lc_values[1:])):
        raise ValueError("Lc values must be given in descending order")
    skews, gmax, runs, secs = [], [], [], []
    for Lc in Lc_values:
        c = cfg.replace(params=replace(cfg.params, Lc=float(Lc)))
        t0 = time.perf_counter()
        r = run(c)
        secs.append(time.perf_counter() - t0)
        skews.append(skew_norm(r.final, c))
        gmax.append(float(np.max(r.final.gamma_p)))
        runs.append(r)
    return LcStudyReport(Lc_values, skews, gmax, runs, secs)
