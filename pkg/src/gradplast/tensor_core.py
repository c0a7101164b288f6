"""Small-tensor algebra on dense 3x3 arrays.

Every function accepts a single ``(3, 3)`` tensor or a stack ``(..., 3, 3)``
and operates on the trailing two axes, so the same code serves a material
point and a whole grid of nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IDENTITY = np.eye(3)

# relative tolerance for structural checks (symmetry, trace-free)
STRUCT_TOL = 1e-12


def sym(X):
    X = np.asarray(X, dtype=float)
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def skew(X):
    X = np.asarray(X, dtype=float)
    return 0.5 * (X - np.swapaxes(X, -1, -2))


def tr(X):
    return np.trace(np.asarray(X, dtype=float), axis1=-2, axis2=-1)


def dev(X):
    X = np.asarray(X, dtype=float)
    return X - (tr(X) / 3.0)[..., None, None] * IDENTITY


def inner(A, B):
    """Frobenius product ``tr(A B^T)``."""
    return np.einsum("...ij,...ij->...", np.asarray(A, dtype=float), np.asarray(B, dtype=float))


def norm(X):
    return np.sqrt(inner(X, X))


@dataclass(frozen=True)
class ElasticModuli:
    """Isotropic elastic constants.

    Parameters
    ----------
    mu : float
        Shear modulus.
    lam : float
        First Lame modulus.

    The bulk modulus ``kappa = lam + 2 mu / 3`` is derived so that the two
    forms of the isotropic elasticity tensor agree by construction.
    """

    mu: float
    lam: float

    def __post_init__(self):
        if not self.mu > 0.0:
            raise ValueError(f"shear modulus must be positive (mu > 0), got mu={self.mu}")
        if not 3.0 * self.lam + 2.0 * self.mu > 0.0:
            raise ValueError(
                f"Lame moduli must satisfy 3*lambda + 2*mu > 0, got {3.0 * self.lam + 2.0 * self.mu}"
            )

    @property
    def kappa(self) -> float:
        return self.lam + 2.0 * self.mu / 3.0

    @property
    def m0(self) -> float:
        """Ellipticity constant of the elasticity tensor on Sym(3)."""
        return min(2.0 * self.mu, 3.0 * self.lam + 2.0 * self.mu)

    @classmethod
    def from_bulk(cls, mu: float, kappa: float) -> "ElasticModuli":
        return cls(mu=mu, lam=kappa - 2.0 * mu / 3.0)

    @classmethod
    def from_young(cls, E: float, nu: float) -> "ElasticModuli":
        return cls(mu=E / (2.0 * (1.0 + nu)), lam=E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)))


def apply_Ciso(m: ElasticModuli, X):
    """``C sym X = 2 mu sym X + lambda tr(X) 1``; skew parts are annihilated."""
    S = sym(X)
    return 2.0 * m.mu * S + (m.lam * tr(S))[..., None, None] * IDENTITY


def apply_Ciso_inverse(m: ElasticModuli, S, tol: float = STRUCT_TOL):
    """Compliance applied to a symmetric stress.

    Raises
    ------
    ValueError
        If ``S`` has a skew part larger than ``tol`` relative to its norm.
    """
    S = np.asarray(S, dtype=float)
    scale = np.maximum(norm(S), 1.0)
    if np.any(norm(skew(S)) > tol * scale):
        raise ValueError("apply_Ciso_inverse expects a symmetric tensor")
    S = sym(S)
    return dev(S) / (2.0 * m.mu) + (tr(S) / (9.0 * m.kappa))[..., None, None] * IDENTITY


def voigt_matrix(m: ElasticModuli) -> np.ndarray:
    """6x6 matrix of C in orthonormal (Mandel) notation."""
    C = np.zeros((6, 6))
    C[:3, :3] = m.lam
    C[np.arange(3), np.arange(3)] += 2.0 * m.mu
    C[np.arange(3, 6), np.arange(3, 6)] = 2.0 * m.mu
    return C


_MANDEL_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))


def to_mandel(S) -> np.ndarray:
    S = sym(S)
    out = np.empty(S.shape[:-2] + (6,))
    r2 = np.sqrt(2.0)
    for k, (i, j) in enumerate(_MANDEL_PAIRS):
        out[..., k] = S[..., i, j] if i == j else r2 * S[..., i, j]
    return out


def from_mandel(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.empty(v.shape[:-1] + (3, 3))
    r2 = np.sqrt(2.0)
    for k, (i, j) in enumerate(_MANDEL_PAIRS):
        if i == j:
            out[..., i, i] = v[..., k]
        else:
            out[..., i, j] = out[..., j, i] = v[..., k] / r2
    return out
