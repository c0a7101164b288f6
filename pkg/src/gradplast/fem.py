"""Q1 finite elements on the structured grid of :mod:`gradplast.fields`.

Displacements and the plastic distortion are both interpolated with
multilinear shape functions on the same nodes. All integrals use the tensor
Gauss rule with two points per active axis. Operators are stored as sparse
matrices acting on node-major arrays: a vector field has shape ``(N, 3)``, a
tensor field ``(N, 3, 3)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fields import EPS, GridSpec
from .tensor_core import ElasticModuli

_GAUSS = 0.5 + np.array([-1.0, 1.0]) / (2.0 * np.sqrt(3.0))


@dataclass
class Q1Space:
    grid: GridSpec
    N: sp.csr_matrix  # (Nq, Nn) shape values
    D: dict  # axis -> (Nq, Nn) derivatives
    wq: np.ndarray  # (Nq,) quadrature weights
    wn: np.ndarray  # (Nn,) lumped node weights
    Bu: sp.csr_matrix  # (Nq*9, Nn*3) displacement gradient
    Cp: sp.csr_matrix  # (Nq*9, Nn*9) row-wise curl

    @property
    def n_nodes(self) -> int:
        return self.N.shape[1]

    @property
    def n_quad(self) -> int:
        return self.N.shape[0]

    def grad(self, u: np.ndarray) -> np.ndarray:
        """``(grad u)_ij = d_j u_i`` at quadrature points, ``(Nq, 3, 3)``."""
        return (self.Bu @ u.reshape(-1)).reshape(-1, 3, 3)

    def interp(self, f: np.ndarray) -> np.ndarray:
        return (self.N @ f.reshape(self.n_nodes, -1)).reshape((self.n_quad,) + f.shape[1:])

    def curl(self, p: np.ndarray) -> np.ndarray:
        return (self.Cp @ p.reshape(-1)).reshape(-1, 3, 3)

    def project(self, fq: np.ndarray) -> np.ndarray:
        """Lumped L2 projection ``(1/w_n) int N_n f`` of a quadrature field."""
        flat = fq.reshape(self.n_quad, -1)
        out = (self.N.T @ (self.wq[:, None] * flat)) / self.wn[:, None]
        return out.reshape((self.n_nodes,) + fq.shape[1:])

    def integrate(self, fq: np.ndarray) -> float:
        return float(np.sum(self.wq * fq))


def build_space(grid: GridSpec) -> Q1Space:
    shape = grid.shape
    axes = grid.axes
    d = len(axes)
    h = grid.h
    node_id = np.arange(grid.n_nodes).reshape(shape)

    # element origins along active axes
    cell_ranges = [range(grid.counts[a]) if a in axes else range(1) for a in range(3)]
    cells = np.array(list(itertools.product(*cell_ranges)), dtype=int)  # (Ne, 3)
    corners = np.array(list(itertools.product((0, 1), repeat=d)), dtype=int)  # (2^d, d)
    gpts = np.array(list(itertools.product(_GAUSS, repeat=d)))  # (2^d, d)

    # reference shape values / derivatives at Gauss points
    nc, ng = len(corners), len(gpts)
    val = np.ones((ng, nc))
    der = np.ones((d, ng, nc))
    for c, corner in enumerate(corners):
        for k in range(d):
            xi = gpts[:, k]
            phi = xi if corner[k] == 1 else 1.0 - xi
            dphi = np.full(ng, 1.0 if corner[k] == 1 else -1.0) / h
            val[:, c] *= phi
            for kk in range(d):
                der[kk, :, c] *= dphi if kk == k else phi

    Ne = len(cells)
    conn = np.empty((Ne, nc), dtype=int)
    for c, corner in enumerate(corners):
        idx = cells.copy()
        for k, a in enumerate(axes):
            idx[:, a] += corner[k]
        conn[:, c] = node_id[idx[:, 0], idx[:, 1], idx[:, 2]]

    Nq = Ne * ng
    rows = np.repeat(np.arange(Nq), nc)
    cols = np.repeat(conn, ng, axis=0).reshape(-1)
    Nn = grid.n_nodes
    N = sp.csr_matrix((np.tile(val, (Ne, 1)).reshape(-1), (rows, cols)), shape=(Nq, Nn))
    D = {}
    for k, a in enumerate(axes):
        D[a] = sp.csr_matrix((np.tile(der[k], (Ne, 1)).reshape(-1), (rows, cols)), shape=(Nq, Nn))
    wq = np.full(Nq, h**d / ng)
    wn = np.asarray(N.T @ wq).reshape(-1)

    # grad u: component (i, j) at index 3 i + j picks d_j of u_i
    Bu = sp.csr_matrix((Nq * 9, Nn * 3))
    # curl p: (Curl p)_ij = eps_jkl d_k p_il
    Cp = sp.csr_matrix((Nq * 9, Nn * 9))
    for a, Da in D.items():
        E = np.zeros((9, 3))
        for i in range(3):
            E[3 * i + a, i] = 1.0
        Bu = Bu + sp.kron(Da, sp.csr_matrix(E), format="csr")
        Ec = np.zeros((9, 9))
        for i in range(3):
            for j in range(3):
                for l in range(3):
                    Ec[3 * i + j, 3 * i + l] += EPS[j, a, l]
        Cp = Cp + sp.kron(Da, sp.csr_matrix(Ec), format="csr")
    return Q1Space(grid, N, D, wq, wn, Bu.tocsr(), Cp.tocsr())


def elasticity_matrix(m: ElasticModuli) -> np.ndarray:
    """9x9 matrix of ``X -> 2 mu sym X + lambda tr X 1`` on row-major tensors."""
    C = np.zeros((9, 9))
    for i in range(3):
        for j in range(3):
            C[3 * i + j, 3 * i + j] += m.mu
            C[3 * i + j, 3 * j + i] += m.mu
    for i in range(3):
        for j in range(3):
            C[3 * i + i, 3 * j + j] += m.lam
    return C


def stiffness(space: Q1Space, m: ElasticModuli) -> sp.csr_matrix:
    Cb = sp.kron(sp.diags(space.wq), sp.csr_matrix(elasticity_matrix(m)), format="csr")
    K = space.Bu.T @ Cb @ space.Bu
    return K.tocsr()


def curl_stiffness(space: Q1Space) -> sp.csr_matrix:
    """``K[n, m] = int Curl N_n : Curl N_m`` on the nine components of p."""
    W = sp.kron(sp.diags(space.wq), sp.identity(9), format="csr")
    return (space.Cp.T @ W @ space.Cp).tocsr()
