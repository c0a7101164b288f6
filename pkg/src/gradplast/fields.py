"""Node-based tensor fields on a structured grid.

A grid has up to three axes; axes that are not active carry a single node and
every derivative along them vanishes (the field is uniform in that
direction). Tensor fields are stored as arrays of shape ``shape + (3, 3)``
where ``shape`` is the tuple of node counts along x, y, z.

Differential operators act row-wise on tensors::

    (Curl X)_ij = eps_jkl d_k X_il,      (Div X)_i = d_j X_ij

so that ``Curl grad v = 0``.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor_core import norm, sym, tr

AXIS_NAMES = ("x", "y", "z")

# Levi-Civita symbol
EPS = np.zeros((3, 3, 3))
EPS[0, 1, 2] = EPS[1, 2, 0] = EPS[2, 0, 1] = 1.0
EPS[0, 2, 1] = EPS[2, 1, 0] = EPS[1, 0, 2] = -1.0


class GridTooSmall(ValueError):
    pass


class BoundaryConditionViolated(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Uniform structured grid.

    Parameters
    ----------
    nx, ny, nz : int
        Cell counts. Inactive axes must have a count of 1 and carry one node.
    h : float
        Grid spacing, shared by all active axes.
    dims : int
        Number of active axes.
    axes : tuple of int, optional
        Indices of the active axes, by default the first ``dims`` axes.
    """

    nx: int = 1
    ny: int = 1
    nz: int = 1
    h: float = 1.0
    dims: int = 1
    axes: tuple = None

    def __post_init__(self):
        if not self.h > 0.0:
            raise ValueError(f"grid spacing must be positive, got h={self.h}")
        if self.dims not in (1, 2, 3):
            raise ValueError("dims must be 1, 2 or 3")
        axes = tuple(range(self.dims)) if self.axes is None else tuple(sorted(int(a) for a in self.axes))
        if len(axes) != self.dims or len(set(axes)) != self.dims or not all(0 <= a < 3 for a in axes):
            raise ValueError(f"axes {self.axes} inconsistent with dims={self.dims}")
        object.__setattr__(self, "axes", axes)
        for a, n in enumerate(self.counts):
            if n < 1:
                raise ValueError("cell counts must be >= 1")
            if a not in axes and n != 1:
                raise ValueError(f"inactive axis {AXIS_NAMES[a]} must have a cell count of 1")

    @property
    def counts(self) -> tuple:
        return (self.nx, self.ny, self.nz)

    @property
    def shape(self) -> tuple:
        return tuple(n + 1 if a in self.axes else 1 for a, n in enumerate(self.counts))

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def lengths(self) -> tuple:
        """Physical extent per axis; inactive axes count as unit depth."""
        return tuple(self.h * n if a in self.axes else 1.0 for a, n in enumerate(self.counts))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (3,)``."""
        xs = [np.arange(s) * self.h if a in self.axes else np.zeros(1) for a, s in enumerate(self.shape)]
        X = np.meshgrid(*xs, indexing="ij")
        return np.stack(X, axis=-1)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.ones(self.shape)
        for a in self.axes:
            wa = np.full(self.shape[a], self.h)
            wa[0] = wa[-1] = 0.5 * self.h
            sh = [1, 1, 1]
            sh[a] = -1
            w = w * wa.reshape(sh)
        return w


class NodeFlag(enum.IntEnum):
    INTERIOR = 0
    MICRO_FREE = 1
    MICRO_HARD = 2


FACES = ("x-", "x+", "y-", "y+", "z-", "z+")


def parse_face(face: str) -> tuple[int, int]:
    if face not in FACES:
        raise ValueError(f"unknown face {face!r}, expected one of {FACES}")
    return AXIS_NAMES.index(face[0]), (-1 if face[1] == "-" else 1)


def face_nodes(grid: GridSpec, face: str) -> np.ndarray:
    """Boolean node mask of one boundary face."""
    a, s = parse_face(face)
    if a not in grid.axes:
        raise ValueError(f"face {face} lies on an inactive axis")
    m = np.zeros(grid.shape, dtype=bool)
    idx = [slice(None)] * 3
    idx[a] = 0 if s < 0 else grid.shape[a] - 1
    m[tuple(idx)] = True
    return m


@dataclass
class BoundaryMask:
    """Boundary classification of the nodes.

    ``normals`` holds the outward unit normal (zero in the interior); at
    edges and corners it is the normalized sum of the face normals, and
    ``n_faces`` records how many faces meet at the node. ``hard`` holds, per
    node, the sum of the outer products of the micro-hard face normals, which
    is all the projection needs.
    """

    grid: GridSpec
    flags: np.ndarray
    normals: np.ndarray
    n_faces: np.ndarray
    hard_faces: tuple = ()
    hard_count: np.ndarray = None

    @classmethod
    def from_faces(cls, grid: GridSpec, micro_hard=()) -> "BoundaryMask":
        micro_hard = tuple(micro_hard)
        flags = np.zeros(grid.shape, dtype=int)
        normals = np.zeros(grid.shape + (3,))
        n_faces = np.zeros(grid.shape, dtype=int)
        hard_count = np.zeros(grid.shape, dtype=int)
        for a in grid.axes:
            for s, face in ((-1, f"{AXIS_NAMES[a]}-"), (1, f"{AXIS_NAMES[a]}+")):
                m = face_nodes(grid, face)
                normals[m, a] += s
                n_faces[m] += 1
                flags[m] = np.maximum(flags[m], NodeFlag.MICRO_FREE)
                if face in micro_hard:
                    flags[m] = NodeFlag.MICRO_HARD
                    hard_count[m] += 1
        for f in micro_hard:
            parse_face(f)
        nn = np.linalg.norm(normals, axis=-1, keepdims=True)
        normals = np.where(nn > 0, normals / np.where(nn > 0, nn, 1.0), 0.0)
        return cls(grid, flags, normals, n_faces, micro_hard, hard_count)

    def single_face_normals(self) -> np.ndarray:
        """Normals of micro-hard nodes lying on exactly one face (else zero)."""
        one = (self.flags == NodeFlag.MICRO_HARD) & (self.n_faces == 1)
        return np.where(one[..., None], self.normals, 0.0)

    def hard_nodes(self) -> np.ndarray:
        return self.flags == NodeFlag.MICRO_HARD


@dataclass
class TensorField:
    grid: GridSpec
    values: np.ndarray
    mask: BoundaryMask = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape[:3] != self.grid.shape:
            v = v.reshape(self.grid.shape + v.shape[-2:]) if v.size == self.grid.n_nodes * 9 else v
        if v.shape != self.grid.shape + (3, 3):
            raise ValueError(f"field of shape {v.shape} does not match grid {self.grid.shape}")
        self.values = v
        if self.mask is None:
            self.mask = BoundaryMask.from_faces(self.grid)

    def with_values(self, values) -> "TensorField":
        return TensorField(self.grid, values, self.mask)

    @classmethod
    def from_function(cls, grid: GridSpec, fun, mask: BoundaryMask | None = None) -> "TensorField":
        X = grid.coords()
        return cls(grid, fun(X[..., 0], X[..., 1], X[..., 2]), mask)


# ---------------------------------------------------------------------------
# difference operators


def _check(grid: GridSpec, need: int):
    for a in grid.axes:
        if grid.shape[a] < need:
            raise GridTooSmall(f"axis {AXIS_NAMES[a]} has {grid.shape[a]} nodes, need at least {need}")


def _d(v: np.ndarray, grid: GridSpec, axis: int) -> np.ndarray:
    """First derivative along a spatial axis; central in the interior,
    second-order one-sided at the ends."""
    if axis not in grid.axes:
        return np.zeros_like(v)
    return np.gradient(v, grid.h, axis=axis, edge_order=2 if grid.shape[axis] >= 3 else 1)


def _d2(v: np.ndarray, grid: GridSpec, axis: int) -> np.ndarray:
    """Compact second derivative along one axis."""
    if axis not in grid.axes:
        return np.zeros_like(v)
    v = np.moveaxis(v, axis, 0)
    out = np.empty_like(v)
    h2 = grid.h**2
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h2
    if v.shape[0] >= 4:
        out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
        out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h2
    else:
        out[0] = out[1]
        out[-1] = out[-2]
    return np.moveaxis(out, 0, axis)


def _grad_tensor(values, grid):
    """``G[..., k, i, l] = d_k X_il``."""
    return np.stack([_d(values, grid, k) for k in range(3)], axis=-3)


def curl_field(F: TensorField) -> TensorField:
    _check(F.grid, 2)
    G = _grad_tensor(F.values, F.grid)
    return F.with_values(np.einsum("jkl,...kil->...ij", EPS, G))


def div_field(F: TensorField) -> np.ndarray:
    """Row-wise divergence, shape ``grid.shape + (3,)``."""
    _check(F.grid, 2)
    return sum(_d(F.values[..., :, j], F.grid, j) for j in range(3))


def grad_vector(v: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``(grad v)_ij = d_j v_i`` for a nodal vector field."""
    return np.stack([_d(v, grid, j) for j in range(3)], axis=-1)


def curl_curl_field(F: TensorField) -> TensorField:
    """Row-wise ``Curl Curl`` as one fused stencil.

    Uses ``curl curl a = grad div a - lap a`` on each row. Pure second
    derivatives use the compact three-point stencil (four-point one-sided
    at the ends), mixed derivatives the product of first differences, so no
    boundary closure is applied twice along the same axis.
    """
    _check(F.grid, 3)
    X, g = F.values, F.grid
    out = np.zeros_like(X)
    for j in range(3):
        for l in range(3):
            if j == l:
                # d_j d_j X_il contributes to grad div and to the Laplacian
                continue
            if j in g.axes and l in g.axes:
                out[..., :, j] += _d(_d(X[..., :, l], g, l), g, j)
    for j in range(3):
        lap_off = sum(_d2(X[..., :, j], g, k) for k in range(3) if k != j)
        out[..., :, j] -= lap_off
    return F.with_values(out)


# ---------------------------------------------------------------------------
# micro-hard boundary and Korn diagnostic


def apply_micro_hard(F: TensorField, trace_free: bool = False) -> TensorField:
    """Project every micro-hard node onto ``{X : X x n = 0}``.

    ``X x n = 0`` means every row of ``X`` is parallel to ``n``, so the
    orthogonal projection is ``X -> (X n) (x) n``. Nodes where several
    micro-hard faces meet are set to zero. With ``trace_free=True`` the
    projection lands on the trace-free subspace ``v (x) n`` with ``v . n = 0``.
    """
    mask = F.mask
    out = F.values.copy()
    hard = mask.hard_nodes()
    if not np.any(hard):
        return F.with_values(out)
    n = mask.single_face_normals()
    Xn = np.einsum("...ij,...j->...i", out, n)
    if trace_free:
        Xn = Xn - np.einsum("...i,...i->...", Xn, n)[..., None] * n
    proj = Xn[..., :, None] * n[..., None, :]
    multi = hard & (mask.n_faces > 1)
    out = np.where(hard[..., None, None], proj, out)
    out[multi] = 0.0
    return F.with_values(out)


def cross_n(F: TensorField, n: np.ndarray) -> np.ndarray:
    """Row-wise ``(X x n)_ij = eps_jkl X_ik n_l``."""
    return np.einsum("jkl,...ik,...l->...ij", EPS, F.values, n)


def l2_norm(values: np.ndarray, grid: GridSpec) -> float:
    w = grid.trapezoid_weights()
    sq = np.sum(values.reshape(grid.shape + (-1,)) ** 2, axis=-1)
    return float(np.sqrt(np.sum(w * sq)))


def korn_incompatible_ratio(F: TensorField, tol: float = 1e-10) -> float:
    """``|F| / (|sym F| + |Curl F|)`` in discrete L2 norms.

    The field must be tangentially clamped on the whole boundary and
    trace-free.
    """
    g = F.grid
    bnd = F.mask.n_faces > 0
    scale = max(1.0, float(np.max(norm(F.values))))
    # each face normal separately: at edges every face condition must hold
    for a in g.axes:
        for s in (-1, 1):
            m = face_nodes(g, f"{AXIS_NAMES[a]}{'-' if s < 0 else '+'}")
            n = np.zeros(3)
            n[a] = s
            viol = np.einsum("jkl,...ik,l->...ij", EPS, F.values[m], n)
            if np.max(np.abs(viol), initial=0.0) > tol * scale:
                raise BoundaryConditionViolated("field violates X x n = 0 on the boundary")
    if not np.any(bnd):
        raise BoundaryConditionViolated("grid has no boundary")
    if np.max(np.abs(tr(F.values))) > tol * scale:
        raise BoundaryConditionViolated("field must be trace-free")
    num = l2_norm(F.values, g)
    den = l2_norm(sym(F.values), g) + l2_norm(curl_field(F).values, g)
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / den


# ---------------------------------------------------------------------------
# snapshot format

SNAPSHOT_COLUMNS = ["i", "j", "k", "x", "y", "z"] + [f"p{a}{b}" for a in (1, 2, 3) for b in (1, 2, 3)]


def write_snapshot(path, F: TensorField) -> None:
    """CSV snapshot, one row per node in C order, 17 significant digits."""
    g = F.grid
    X = g.coords()
    idx = np.indices(g.shape)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SNAPSHOT_COLUMNS)
        for ii, jj, kk in zip(*(a.ravel() for a in idx)):
            vals = [X[ii, jj, kk, c] for c in range(3)] + list(F.values[ii, jj, kk].ravel())
            w.writerow([ii, jj, kk] + [f"{v:.17g}" for v in vals])


def read_snapshot(path, grid: GridSpec, mask: BoundaryMask | None = None) -> TensorField:
    vals = np.zeros(grid.shape + (3, 3))
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != SNAPSHOT_COLUMNS:
            raise ValueError(f"unexpected snapshot header in {Path(path).name}")
        for row in r:
            i, j, k = (int(c) for c in row[:3])
            vals[i, j, k] = np.array([float(c) for c in row[6:]]).reshape(3, 3)
    return TensorField(grid, vals, mask)
