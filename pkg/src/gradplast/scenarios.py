"""Built-in scenarios, the material-point driver and result files.

All scenarios are nondimensional: stresses are scaled by the shear modulus
and lengths by the strip thickness ``H = 1``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .config import PointConfig
from .convex import Branch, YieldParams, nearest_branch, phi_ab
from .fields import BoundaryMask, GridSpec, TensorField, write_snapshot
from .flow_rule import MaterialPointState, ModelParams, return_map
from .solver import (
    VISCOPLASTIC,
    FixedPointOptions,
    LoadProgram,
    ProblemConfig,
    RunResult,
    Stepping,
    UniquenessReport,
    admissible_perturbation,
    assemble_energy,
    difference_metric,
    limit_study_Lc,
    run,
)
from .tensor_core import ElasticModuli, norm, skew, sym

STEP_COLUMNS = [
    "t",
    "elastic_energy",
    "defect_energy",
    "hardening_energy",
    "dissipation_cum",
    "max_gamma_p",
    "max_omega_p",
    "norm_skew_p",
]

POINT_COLUMNS = (
    ["t"]
    + [f"eps{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
    + [f"sigma{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
    + ["gamma_p", "omega_p", "branch", "lambda", "phi"]
)


def _fmt(v) -> str:
    return f"{v:.17g}" if isinstance(v, float) else str(v)


def write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def step_rows(result: RunResult) -> list:
    return [
        [
            float(r.t),
            float(r.energy.elastic_energy),
            float(r.energy.defect_energy),
            float(r.energy.hardening_energy),
            float(r.dissipation_cum),
            float(r.max_gamma_p),
            float(r.max_omega_p),
            float(r.norm_skew_p),
        ]
        for r in result.records
    ]


def write_run(result: RunResult, out: Path, stem: str) -> list:
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}.csv", out / f"{stem}_final_snapshot.csv"]
    write_rows(paths[0], STEP_COLUMNS, step_rows(result))
    g = result.cfg.grid
    write_snapshot(paths[1], TensorField(g, result.final.p.reshape(g.shape + (3, 3)), result.cfg.mask))
    return paths


# ---------------------------------------------------------------------------
# point driver


def run_point_driver(pc: PointConfig) -> list:
    """Strain-driven material point with zero backstress.

    Returns rows matching :data:`POINT_COLUMNS`.
    """
    mp = pc.params
    yp = mp.yield_params
    st = MaterialPointState()
    rows = []
    t = pc.strain_path.times[0]
    for _ in range(pc.stepping.n_steps):
        t = t + pc.stepping.dt
        eps = sym(pc.strain_path.factor(t) * pc.strain_path.grad)
        st, sig, fr = return_map(st, eps, np.zeros((3, 3)), mp, pc.stepping.dt)
        g1, g2 = mp.forces(st.gamma_p, st.omega_p)
        A = float(norm(sym(sig) - np.trace(sig) / 3.0 * np.eye(3))) + float(g1) - yp.r1
        B = float(norm(skew(sig))) + float(g2) - yp.r2
        br = fr.branch if fr.branch != Branch.INTERIOR else nearest_branch(A, B)
        phi = float(phi_ab(A, B, yp, br))
        rows.append([float(t)] + [float(v) for v in eps.ravel()] + [float(v) for v in sig.ravel()] + [st.gamma_p, st.omega_p, fr.branch.name, fr.lam, phi])
    return rows


# ---------------------------------------------------------------------------
# reference problems

MU, LAM = 1.0, 1.5
SIGMA0 = 1.0e-2
SIGMA_HAT0 = 1.5e-2
ALPHA1, ALPHA2 = 0.2, 0.5
# shear yield strain of the simple-shear program: |dev sigma| = sqrt(2) mu Gamma
GAMMA_Y = SIGMA0 / (math.sqrt(2.0) * MU)


def reference_params(**kw) -> ModelParams:
    base = dict(Lc=0.0, alpha1=ALPHA1, alpha2=ALPHA2, rho=1.0e-3)
    base.update(kw)
    return ModelParams(ElasticModuli(MU, LAM), YieldParams(SIGMA0, SIGMA_HAT0), **base)


def _shear_grad() -> np.ndarray:
    G = np.zeros((3, 3))
    G[0, 1] = 1.0
    return G


def point_shear_config(n_steps=40, Gamma=5.0 * GAMMA_Y, **kw) -> ProblemConfig:
    """Homogeneous simple shear ``u1 = Gamma y`` on a short 1-D grid."""
    g = GridSpec(nx=4, h=0.25, dims=1, axes=(0,))
    mask = BoundaryMask.from_faces(g, ())
    return ProblemConfig(
        reference_params(**kw),
        g,
        mask,
        LoadProgram(_shear_grad(), times=(0.0, 1.0), factors=(0.0, Gamma)),
        Stepping(1.0 / n_steps, n_steps),
        FixedPointOptions(),
        dirichlet=("x-", "x+"),
    )


def strip_shear_config(Lc=0.1, cells=40, n_steps=20, Gamma=5.0 * GAMMA_Y, **kw) -> ProblemConfig:
    """Simple shear of a strip of unit thickness between micro-hard walls."""
    g = GridSpec(ny=cells, h=1.0 / cells, dims=1, axes=(1,))
    mask = BoundaryMask.from_faces(g, ("y-", "y+"))
    return ProblemConfig(
        reference_params(Lc=Lc, **kw),
        g,
        mask,
        LoadProgram(_shear_grad(), times=(0.0, 1.0), factors=(0.0, Gamma)),
        Stepping(1.0 / n_steps, n_steps),
        FixedPointOptions(),
        dirichlet=("y-", "y+"),
    )


# ---------------------------------------------------------------------------
# check helpers


def radial_return_history(cfg: ProblemConfig) -> np.ndarray:
    """Scalar von Mises return for monotone proportional loading."""
    mp = cfg.params
    mu, a1, s0 = mp.mu, mp.alpha1, mp.yield_params.sigma0 + mp.yield_params.r1
    gdir = sym(cfg.load.grad)
    dnorm = float(norm(gdir - np.trace(gdir) / 3.0 * np.eye(3)))
    gam, out, t = 0.0, [], cfg.load.times[0]
    for _ in range(cfg.stepping.n_steps):
        t += cfg.stepping.dt
        s_tr = 2.0 * mu * (cfg.load.factor(t) * dnorm) - 2.0 * mu * gam
        # plastic strain accumulates along a fixed direction under proportional loading
        gam += max(s_tr - s0 - mu * a1 * gam, 0.0) / (2.0 * mu + mu * a1)
        out.append(gam)
    return np.array(out)


def boundary_layer_width(y: np.ndarray, e: np.ndarray, recovery: float = 0.9) -> float:
    """Distance from the wall at ``y[0]`` where the profile ``e`` first
    recovers ``recovery`` of its depression relative to the midline value."""
    mid = len(e) // 2
    e_wall, e_mid = float(e[0]), float(e[mid])
    if not e_mid > e_wall:
        return 0.0
    target = e_wall + recovery * (e_mid - e_wall)
    for i in range(1, mid + 1):
        if e[i] >= target:
            f = (target - e[i - 1]) / (e[i] - e[i - 1])
            return float(y[i - 1] + f * (y[i] - y[i - 1]) - y[0])
    return float(y[mid] - y[0])


def strip_profile(result: RunResult):
    g = result.cfg.grid
    a = g.axes[0]
    y = g.coords().reshape(-1, 3)[:, a]
    e = norm(sym(result.final.p))
    return y, e


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(name, ok, detail):
    return CheckResult(name, bool(ok), detail)


def check_dissipation(results: dict) -> CheckResult:
    worst = math.inf
    for r in results.values():
        tol = r.cfg.audit_tol
        for rec in r.records:
            worst = min(worst, rec.energy.dissipation_increment + tol)
    return _check("dissipation_nonnegative", worst >= 0.0, f"min(D + audit_tol) = {worst:.3e}")


def check_kkt(results: dict) -> CheckResult:
    worst = -math.inf
    for r in results.values():
        if r.cfg.stepping.path == VISCOPLASTIC:
            continue
        worst = max(worst, max(rec.info.kkt_max for rec in r.records) - r.cfg.tol_kkt)
    return _check("kkt", worst <= 0.0, f"max(kkt - tol_kkt) = {worst:.3e}")


def check_structure(results: dict) -> CheckResult:
    tr_max, mono = 0.0, True
    for r in results.values():
        for a, b in zip(r.states, r.states[1:]):
            mono &= bool(np.all(b.gamma_p >= a.gamma_p) and np.all(b.omega_p >= a.omega_p))
        for s in r.states:
            tr_max = max(tr_max, float(np.max(np.abs(np.trace(s.p, axis1=-2, axis2=-1)))))
    return _check("structural_invariants", tr_max <= 1e-12 and mono, f"max|tr p| = {tr_max:.1e}, monotone accumulators = {mono}")


def check_energy_balance(results: dict, rel=0.01) -> CheckResult:
    worst = 0.0
    for r in results.values():
        W = sum(rec.energy.external_work_increment for rec in r.records)
        D = r.records[-1].dissipation_cum
        psi0 = assemble_energy(r.states[0], r.cfg).total
        gap = abs(r.records[-1].energy.total - psi0 + D - W) / max(abs(W), 1e-300)
        worst = max(worst, gap)
    return _check("energy_balance", worst <= rel, f"max relative work-energy gap = {worst:.2e}")


def check_classical(results: dict, key: str, rel=1e-8) -> CheckResult:
    r = results[key]
    ref = radial_return_history(r.cfg)
    sol = np.array([float(np.max(s.gamma_p)) for s in r.states[1:]])
    spread = max(float(np.max(np.ptp(s.gamma_p))) for s in r.states)
    err = float(np.max(np.abs(sol - ref) / np.maximum(np.abs(ref), 1e-300) * (ref > 0)))
    err = max(err, float(np.max(np.abs(sol[ref == 0]), initial=0.0)))
    skew_max = max(float(np.max(np.abs(skew(s.p)))) for s in r.states)
    ok = err <= rel and skew_max == 0.0 and spread <= rel * max(ref.max(), 1e-300)
    return _check("classical_limit", ok, f"max rel gamma error = {err:.2e}, max|skew p| = {skew_max}, spread = {spread:.1e}")


# ---------------------------------------------------------------------------
# scenarios


@dataclass
class ScenarioOutcome:
    name: str
    results: dict
    checks: list
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass
class Scenario:
    name: str
    config: ProblemConfig
    expected_checks: list
    runner: Callable = None
    description: str = ""

    def execute(self, seed: int = 0) -> ScenarioOutcome:
        if self.runner is None:
            results, extras = {self.name: run(self.config)}, {}
        else:
            results, extras = self.runner(self.config, seed)
        checks = [chk(results, extras) for chk in self.expected_checks]
        return ScenarioOutcome(self.name, results, checks, extras)


def _common():
    return [
        lambda res, ex: check_dissipation(res),
        lambda res, ex: check_kkt(res),
        lambda res, ex: check_structure(res),
        lambda res, ex: check_energy_balance(res),
    ]


def _lc_runner(cfg, seed):
    Lcs = [0.4, 0.2, 0.1, 0.05, 0.0]
    study = limit_study_Lc(cfg, Lcs)
    results = {f"Lc_{Lc:g}": r for Lc, r in zip(Lcs, study.runs)}
    widths = {}
    for Lc, r in zip(Lcs, study.runs):
        if Lc > 0:
            widths[Lc] = boundary_layer_width(*strip_profile(r))
    return results, {"study": study, "widths": widths}


def _check_lc_skew(res, ex):
    st = ex["study"]
    s = st.skew_norms
    ok = st.monotone and s[-1] == 0.0 and all(b < a for a, b in zip(s[:-1], s[1:]))
    return _check("skew_decreases_with_Lc", ok, "skew norms " + ", ".join(f"{v:.3e}" for v in s))


def _check_lc_width(res, ex):
    w = ex["widths"]
    Ls = sorted(w)
    vals = [w[L] for L in Ls]
    ok = all(b > a for a, b in zip(vals, vals[1:]))
    return _check("layer_width_increases_with_Lc", ok, "widths " + ", ".join(f"{L:g}:{w[L]:.4f}" for L in Ls))


def _check_depression(res, ex):
    worst = math.inf
    for r in res.values():
        if r.cfg.params.Lc == 0.0:
            continue
        y, e = strip_profile(r)
        worst = min(worst, float(e[len(e) // 2] - e[0]) / max(float(e.max()), 1e-300))
    return _check("wall_depression", worst > 0.0, f"min relative depression = {worst:.3f}")


RHO_SWEEP = (1e-1, 1e-2, 1e-3, 1e-4)


def _rho_runner(cfg, seed):
    ref = run(cfg)
    results = {"rate_independent": ref}
    mu, T = cfg.params.mu, cfg.load.times[-1] - cfg.load.times[0]
    for r in RHO_SWEEP:
        c = cfg.replace(params=replace(cfg.params, rho=r * mu * T), stepping=replace(cfg.stepping, path=VISCOPLASTIC, rho_schedule=()))
        results[f"rho_{r:g}"] = run(c)
    cont = cfg.replace(
        stepping=replace(cfg.stepping, path=VISCOPLASTIC, rho_schedule=tuple(r * mu * T for r in RHO_SWEEP))
    )
    results["continuation"] = run(cont)
    return results, {}


def _check_rho(res, ex):
    g_ref = float(np.max(res["rate_independent"].final.gamma_p))
    gaps = [abs(float(np.max(res[f"rho_{r:g}"].final.gamma_p)) - g_ref) / g_ref for r in RHO_SWEEP]
    ok = all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < 0.02
    return _check("viscoplastic_convergence", ok, "gaps " + ", ".join(f"{g:.3e}" for g in gaps))


def _check_continuation(res, ex):
    a = res["continuation"].final.gamma_p
    b = res[f"rho_{RHO_SWEEP[-1]:g}"].final.gamma_p
    d = float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
    return _check("continuation_matches_final_rho", d <= 1e-6, f"relative difference = {d:.2e}")


def _check_twin(res, ex):
    rep = ex["uniqueness"]
    return _check(
        "difference_non_increasing",
        rep.non_increasing and rep.metric[0] > 0.0,
        f"metric {rep.metric[0]:.3e} -> {rep.metric[-1]:.3e}, max relative increase {rep.max_relative_increase:.2e}",
    )


def _uniqueness_runner_with_runs(cfg, seed):
    a = run(cfg)
    b = run(cfg, p0=admissible_perturbation(cfg, 0.5 * GAMMA_Y, seed))
    m = np.array([difference_metric(s1, s2, cfg) for s1, s2 in zip(a.states, b.states)])
    peak = np.maximum.accumulate(m)
    inc = float(np.max((m[1:] - peak[:-1]) / max(m[0], 1e-300), initial=0.0))
    rep = UniquenessReport(np.array([s.t for s in a.states]), m, inc, inc <= 0.05)
    return {"reference": a, "perturbed": b}, {"uniqueness": rep}


def library() -> dict:
    scen = [
        Scenario(
            "point_shear",
            point_shear_config(),
            _common() + [lambda res, ex: check_classical(res, "point_shear")],
            description="homogeneous simple shear, classical limit Lc = 0",
        ),
        Scenario(
            "strip_shear",
            strip_shear_config(),
            _common() + [_check_depression],
            description="strip between micro-hard walls, Lc = 0.1 H",
        ),
        Scenario(
            "lc_sweep",
            strip_shear_config(),
            _common() + [_check_depression, _check_lc_skew, _check_lc_width, lambda res, ex: check_classical(res, "Lc_0")],
            runner=_lc_runner,
            description="strip for Lc in {0.4, 0.2, 0.1, 0.05, 0} H",
        ),
        Scenario(
            "rho_continuation",
            point_shear_config(),
            [lambda res, ex: check_dissipation(res), lambda res, ex: check_structure(res), _check_rho, _check_continuation],
            runner=_rho_runner,
            description="Norton-Hoff rho sweep toward the rate-independent limit",
        ),
        Scenario(
            "uniqueness_twin",
            strip_shear_config(Lc=0.2, cells=20, n_steps=10),
            _common() + [_check_twin],
            runner=_uniqueness_runner_with_runs,
            description="twin runs from perturbed initial plastic distortion",
        ),
    ]
    return {s.name: s for s in scen}


def run_scenario(name: str, out: Path | None = None, seed: int = 0) -> ScenarioOutcome:
    lib = library()
    if name not in lib:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(lib)}")
    outcome = lib[name].execute(seed)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        for key, r in outcome.results.items():
            write_run(r, out, key if key != name else name)
        if "uniqueness" in outcome.extras:
            rep = outcome.extras["uniqueness"]
            write_rows(out / "uniqueness_metric.csv", ["t", "metric"], [[float(t), float(m)] for t, m in zip(rep.times, rep.metric)])
        with open(out / "checks.txt", "w") as fh:
            for c in outcome.checks:
                fh.write(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}\n")
    return outcome
