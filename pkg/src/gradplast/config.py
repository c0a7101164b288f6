"""YAML problem descriptions.

A field problem looks like::

    material:
      mu: 1.0
      lambda: 1.5          # or kappa
      sigma0: 0.01
      sigma_hat0: 0.015
      r1: 0.0              # optional, default 0
      r2: 0.0
      Lc: 0.1
      alpha1: 0.2
      alpha2: 0.5
      rho: 1.0e-3          # viscoplastic path only
      n_exp: 1
      m_exp: 1
    grid:
      axes: [y]            # active axes
      cells: [40]          # one count per active axis
      h: 0.025
    boundary:
      dirichlet: [y-, y+]
      micro_hard: [y-, y+]
    load:
      grad: [[0, 1, 0], [0, 0, 0], [0, 0, 0]]
      body_force: [0, 0, 0]
      times: [0.0, 1.0]
      factors: [0.0, 0.05]
    stepping:
      dt: 0.05
      n_steps: 20
      path: rate_independent      # or viscoplastic
      rho_schedule: []            # continuation values within a step
    fixed_point:
      max_outer: 5000
      tol_rel: 1.0e-8
      tol_abs: 1.0e-12
      tol_eq: 1.0e-10
      linear_solver: cg           # or direct

A point-driver document has ``material``, ``stepping`` and a
``strain_path`` section with the same keys as ``load`` (minus body force).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .convex import YieldParams
from .fields import AXIS_NAMES, FACES, BoundaryMask, GridSpec
from .flow_rule import ModelParams
from .solver import FixedPointOptions, LoadProgram, ProblemConfig, Stepping
from .tensor_core import ElasticModuli


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass
class Diagnostic:
    constraint: str
    message: str
    line: int | None = None

    def __str__(self):
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}[{self.constraint}] {self.message}"


class _Doc:
    """Parsed mapping plus the source line of every key path."""

    def __init__(self, text: str):
        try:
            node = yaml.compose(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ConfigError([Diagnostic("yaml_syntax", str(getattr(exc, "problem", exc)), line)]) from None
        self.lines = {}
        if node is not None:
            self._walk(node, ())
        self.data = yaml.safe_load(text) or {}
        if not isinstance(self.data, dict):
            raise ConfigError([Diagnostic("document_structure", "top level must be a mapping", 1)])

    def _walk(self, node, path):
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = path + (k.value,)
                self.lines[key] = k.start_mark.line + 1
                self._walk(v, key)

    def line(self, *path):
        while path and path not in self.lines:
            path = path[:-1]
        return self.lines.get(path)


_MATERIAL_KEYS = {"mu", "lambda", "kappa", "sigma0", "sigma_hat0", "r1", "r2", "Lc", "alpha1", "alpha2", "rho", "n_exp", "m_exp"}
_SECTIONS = {
    "material": _MATERIAL_KEYS,
    "grid": {"axes", "cells", "h"},
    "boundary": {"dirichlet", "micro_hard"},
    "load": {"grad", "body_force", "times", "factors"},
    "strain_path": {"grad", "times", "factors"},
    "stepping": {"dt", "n_steps", "path", "rho_schedule"},
    "fixed_point": {"max_outer", "tol_rel", "tol_abs", "tol_eq", "accelerate", "linear_solver"},
    "output": {"snapshot_every"},
}


class _Checker:
    def __init__(self, doc: _Doc):
        self.doc = doc
        self.diags = []

    def add(self, constraint, message, *path):
        self.diags.append(Diagnostic(constraint, message, self.doc.line(*path)))

    def section(self, name, required=True):
        sec = self.doc.data.get(name)
        if sec is None:
            if required:
                self.add("missing_section", f"section '{name}' is required")
            return None
        if not isinstance(sec, dict):
            self.add("section_type", f"section '{name}' must be a mapping", name)
            return None
        for k in sec:
            if k not in _SECTIONS[name]:
                self.add("unknown_key", f"unknown key '{name}.{k}'", name, k)
        return sec

    def number(self, sec, secname, key, default=None, required=False):
        if sec is None or key not in sec:
            if required:
                self.add("missing_key", f"'{secname}.{key}' is required", secname)
            return default
        v = sec[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.add("type", f"'{secname}.{key}' must be a number, got {v!r}", secname, key)
            return default
        return float(v)


def _material(ck: _Checker) -> ModelParams | None:
    m = ck.section("material")
    if m is None:
        return None
    S = "material"
    mu = ck.number(m, S, "mu", required=True)
    if "lambda" in m and "kappa" in m:
        ck.add("elastic_constants", "give either lambda or kappa, not both", S, "kappa")
    lam = ck.number(m, S, "lambda")
    kappa = ck.number(m, S, "kappa")
    if lam is None and kappa is None:
        ck.add("missing_key", "'material.lambda' (or 'material.kappa') is required", S)
    if mu is not None and lam is None and kappa is not None:
        lam = kappa - 2.0 * mu / 3.0
    s0 = ck.number(m, S, "sigma0", required=True)
    sh0 = ck.number(m, S, "sigma_hat0", required=True)
    r1 = ck.number(m, S, "r1", 0.0)
    r2 = ck.number(m, S, "r2", 0.0)
    Lc = ck.number(m, S, "Lc", 0.0)
    a1 = ck.number(m, S, "alpha1", 0.0)
    a2 = ck.number(m, S, "alpha2", 0.0)
    rho = ck.number(m, S, "rho", 1.0)
    n = ck.number(m, S, "n_exp", 1.0)
    mm = ck.number(m, S, "m_exp", 1.0)
    if mu is not None and not mu > 0.0:
        ck.add("shear_modulus_positive", f"mu must be > 0, got {mu}", S, "mu")
    if mu is not None and lam is not None and not 3.0 * lam + 2.0 * mu > 0.0:
        ck.add("lame_moduli_admissible", f"3*lambda + 2*mu must be > 0, got {3.0 * lam + 2.0 * mu}", S, "lambda" if "lambda" in m else "kappa")
    if s0 is not None and not s0 > 0.0:
        ck.add("yield_stress_positive", f"sigma0 must be > 0, got {s0}", S, "sigma0")
    if sh0 is not None and not sh0 > 0.0:
        ck.add(
            "spin_yield_stress_positive",
            f"sigma_hat0 must be > 0, got {sh0}: a vanishing spin yield stress is degenerate "
            "(the elastic domain loses its interior and no admissible stress state has a skew part)",
            S,
            "sigma_hat0",
        )
    for key, v in (("r1", r1), ("r2", r2), ("Lc", Lc), ("alpha1", a1), ("alpha2", a2)):
        if v is not None and v < 0.0:
            ck.add(f"{key}_nonnegative", f"{key} must be >= 0, got {v}", S, key)
    if rho is not None and not rho > 0.0:
        ck.add("rho_positive", f"rho must be > 0, got {rho}", S, "rho")
    for key, v in (("n_exp", n), ("m_exp", mm)):
        if v is not None and (v < 1 or int(v) != v):
            ck.add(f"{key}_integer", f"{key} must be an integer >= 1, got {v}", S, key)
    if ck.diags:
        return None
    return ModelParams(
        ElasticModuli(mu, lam), YieldParams(s0, sh0, r1, r2), Lc=Lc, alpha1=a1, alpha2=a2, rho=rho, n_exp=int(n), m_exp=int(mm)
    )


def _matrix(ck, sec, secname, key, shape, default):
    if sec is None or key not in sec:
        return default
    try:
        a = np.array(sec[key], dtype=float)
    except (TypeError, ValueError):
        ck.add("type", f"'{secname}.{key}' must be numeric", secname, key)
        return default
    if a.shape != shape:
        ck.add("shape", f"'{secname}.{key}' must have shape {shape}, got {a.shape}", secname, key)
        return default
    return a


def _program(ck, sec, secname, with_body=True):
    grad = _matrix(ck, sec, secname, "grad", (3, 3), np.zeros((3, 3)))
    body = _matrix(ck, sec, secname, "body_force", (3,), np.zeros(3)) if with_body else np.zeros(3)
    times = (sec or {}).get("times", [0.0, 1.0])
    factors = (sec or {}).get("factors", [0.0, 1.0])
    try:
        return LoadProgram(grad, body, times, factors)
    except (TypeError, ValueError) as exc:
        ck.add("load_program", str(exc), secname)
        return None


def _stepping(ck):
    st = ck.section("stepping")
    if st is None:
        return None
    dt = ck.number(st, "stepping", "dt", required=True)
    n = ck.number(st, "stepping", "n_steps", required=True)
    path = st.get("path", "rate_independent")
    rs = st.get("rho_schedule", []) or []
    if dt is not None and not dt > 0.0:
        ck.add("dt_positive", f"dt must be > 0, got {dt}", "stepping", "dt")
        return None
    if n is not None and (n < 1 or int(n) != n):
        ck.add("n_steps_integer", f"n_steps must be an integer >= 1, got {n}", "stepping", "n_steps")
        return None
    if dt is None or n is None:
        return None
    try:
        return Stepping(dt, int(n), path, tuple(rs))
    except (TypeError, ValueError) as exc:
        ck.add("stepping", str(exc), "stepping")
        return None


def _fixed_point(ck):
    fp = ck.section("fixed_point", required=False) or {}
    try:
        return FixedPointOptions(**fp)
    except (TypeError, ValueError) as exc:
        ck.add("fixed_point", str(exc), "fixed_point")
        return None


def _grid(ck):
    g = ck.section("grid")
    if g is None:
        return None
    axes = g.get("axes", ["x"])
    cells = g.get("cells")
    h = ck.number(g, "grid", "h", required=True)
    if not isinstance(axes, list) or not all(a in AXIS_NAMES for a in axes) or not 1 <= len(axes) <= 3:
        ck.add("grid_axes", f"grid.axes must list 1 to 3 of {AXIS_NAMES}", "grid", "axes")
        return None
    if not isinstance(cells, list) or len(cells) != len(axes) or not all(isinstance(c, int) and c >= 1 for c in cells):
        ck.add("grid_cells", "grid.cells must give one positive integer per active axis", "grid", "cells")
        return None
    if h is None or not h > 0.0:
        ck.add("grid_spacing_positive", "grid.h must be > 0", "grid", "h")
        return None
    counts = {"nx": 1, "ny": 1, "nz": 1}
    for a, c in zip(axes, cells):
        counts["n" + a] = c
    try:
        return GridSpec(**counts, h=h, dims=len(axes), axes=tuple(AXIS_NAMES.index(a) for a in axes))
    except ValueError as exc:
        ck.add("grid", str(exc), "grid")
        return None


def _faces(ck, bnd, key, grid):
    faces = (bnd or {}).get(key, []) or []
    if not isinstance(faces, list) or not all(f in FACES for f in faces):
        ck.add("boundary_faces", f"boundary.{key} must list faces from {FACES}", "boundary", key)
        return None
    for f in faces:
        if grid is not None and AXIS_NAMES.index(f[0]) not in grid.axes:
            ck.add("boundary_faces", f"face {f} lies on an inactive axis", "boundary", key)
            return None
    return tuple(faces)


def check_document(text: str, kind: str = "field"):
    """Parse and validate. Returns ``(result, diagnostics)``; ``result`` is
    None when any diagnostic was raised."""
    try:
        doc = _Doc(text)
    except ConfigError as exc:
        return None, exc.diagnostics
    ck = _Checker(doc)
    for k in doc.data:
        if k not in _SECTIONS:
            ck.add("unknown_section", f"unknown section '{k}'", k)
    mp = _material(ck)
    if kind == "point":
        prog = _program(ck, ck.section("strain_path"), "strain_path", with_body=False)
        st = _stepping(ck)
        if ck.diags:
            return None, ck.diags
        return PointConfig(mp, prog, st), []
    grid = _grid(ck)
    bnd = ck.section("boundary")
    dirichlet = _faces(ck, bnd, "dirichlet", grid)
    hard = _faces(ck, bnd, "micro_hard", grid)
    if dirichlet is not None and not dirichlet:
        ck.add("dirichlet_required", "boundary.dirichlet must name at least one face", "boundary")
    load = _program(ck, ck.section("load"), "load")
    st = _stepping(ck)
    fp = _fixed_point(ck)
    ck.section("output", required=False)
    if ck.diags:
        return None, ck.diags
    mask = BoundaryMask.from_faces(grid, hard)
    return ProblemConfig(mp, grid, mask, load, st, fp, dirichlet), []


@dataclass
class PointConfig:
    params: ModelParams
    strain_path: LoadProgram
    stepping: Stepping


def load_config(path, kind: str = "field"):
    text = Path(path).read_text()
    cfg, diags = check_document(text, kind)
    if diags:
        raise ConfigError(diags)
    return cfg


def validate_config(path) -> list:
    """Diagnostics for a config file (empty list when valid). The document
    kind is inferred from the presence of a ``strain_path`` section."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError:
        data = None
    kind = "point" if isinstance(data, dict) and "strain_path" in data else "field"
    _, diags = check_document(text, kind)
    return diags
