"""Dissipation functions, their conjugates and the admissible-stress set.

The elastic domain lives in the space of generalized stresses
``(Sigma_E, g1, g2)`` but membership only depends on the planar point

    A = |dev sym Sigma_E| + g1 - r1,    B = |skew Sigma_E| + g2 - r2

which must lie in the set ``K = K1 u K2 u K3``: the two half-strips
``A <= sigma0, B <= 0`` and ``A <= 0, B <= sigma_hat0`` glued to the quarter
ellipse ``A^2/sigma0^2 + B^2/sigma_hat0^2 <= 1`` in the positive quadrant.

Infinite values of indicator functions are returned as ``math.inf``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .tensor_core import dev, norm, skew, sym

INF = math.inf

# boundary-membership tolerance of the normalized conjugate
CONJ_TOL = 1e-12


class InconsistentInput(ValueError):
    """Generalized stress with a positive hardening force."""


@dataclass(frozen=True)
class YieldParams:
    """Initial yield stresses for plastic strain / plastic spin and the
    optional rate-one dissipation offsets ``r1``, ``r2``."""

    sigma0: float
    sigma_hat0: float
    r1: float = 0.0
    r2: float = 0.0

    def __post_init__(self):
        if not self.sigma0 > 0.0:
            raise ValueError(f"sigma0 must be strictly positive, got {self.sigma0}")
        if not self.sigma_hat0 > 0.0:
            # a vanishing spin yield stress leaves the elastic domain without interior
            raise ValueError(
                "sigma_hat0 must be strictly positive: with sigma_hat0 = 0 the elastic "
                f"domain has empty interior (degenerate spin yield), got {self.sigma_hat0}"
            )
        if self.r1 < 0.0 or self.r2 < 0.0:
            raise ValueError(f"dissipation offsets must be non-negative, got r1={self.r1}, r2={self.r2}")

    @property
    def default_tol(self) -> float:
        return 1e-9 * max(self.sigma0, self.sigma_hat0)


@dataclass(frozen=True)
class HardeningState:
    gamma_p: float = 0.0
    omega_p: float = 0.0

    def __post_init__(self):
        if self.gamma_p < 0.0 or self.omega_p < 0.0:
            raise ValueError("accumulated plastic strain/rotation must be non-negative")

    def forces(self, mu: float, alpha1: float, alpha2: float) -> tuple[float, float]:
        """Thermodynamic forces ``(g1, g2) = (-mu a1 gamma_p, -mu a2 omega_p)``."""
        return -mu * alpha1 * self.gamma_p, -mu * alpha2 * self.omega_p


@dataclass(frozen=True)
class GeneralizedStress:
    Sigma_E: np.ndarray
    g1: float = 0.0
    g2: float = 0.0


@dataclass(frozen=True)
class ABPoint:
    A: float
    B: float


class Branch(enum.IntEnum):
    INTERIOR = 0
    S1 = 1
    S2 = 2
    S3 = 3
    # Kept for completeness of the labelling. With sigma0, sigma_hat0 > 0 the
    # point where the two half-strips of K meet lies strictly inside K, so the
    # classifier never produces it.
    CORNER12 = 4


# ---------------------------------------------------------------------------
# dissipation functions


def _check_rates(s, t):
    if np.any(np.asarray(s) < 0.0) or np.any(np.asarray(t) < 0.0):
        raise ValueError("dissipation function is only defined for non-negative rates")


def D(s, t, yp: YieldParams):
    """``sqrt(sigma0^2 s^2 + sigma_hat0^2 t^2)``."""
    _check_rates(s, t)
    return np.hypot(yp.sigma0 * np.asarray(s, float), yp.sigma_hat0 * np.asarray(t, float))


def D_hat(s, t, yp: YieldParams):
    """``r1 s + r2 t + D(s, t)``."""
    return yp.r1 * np.asarray(s, float) + yp.r2 * np.asarray(t, float) + D(s, t, yp)


def delta(q, eta: float, beta: float, yp: YieldParams, cons_tol: float = 1e-10) -> float:
    """Dissipation function of the rates ``(q, eta, beta)``.

    Finite only when ``|sym q| <= eta`` and ``|skew q| <= beta``.
    """
    s = float(norm(sym(q)))
    t = float(norm(skew(q)))
    if s > eta + cons_tol or t > beta + cons_tol:
        return INF
    return float(D(s, t, yp))


# ---------------------------------------------------------------------------
# conjugate and admissible set


def conjugate_f(A: float, B: float, tol: float = CONJ_TOL) -> float:
    """Closed form of ``sup_{s,t>=0} {A s + B t - sqrt(s^2 + t^2)}``.

    Returns 0 on the normalized set K and ``inf`` elsewhere.
    """
    if B <= 0.0:
        ok = A <= 1.0 + tol
    elif A <= 0.0:
        ok = B <= 1.0 + tol
    else:
        ok = A * A + B * B <= 1.0 + tol
    return 0.0 if ok else INF


def in_set_K(p: ABPoint, yp: YieldParams, tol: float = CONJ_TOL) -> bool:
    return conjugate_f(p.A / yp.sigma0, p.B / yp.sigma_hat0, tol) == 0.0


def ab_point(S: GeneralizedStress, yp: YieldParams) -> ABPoint:
    """Planar coordinates of a generalized stress.

    The offsets enter with a minus sign: the conjugate of ``D_hat`` is the
    conjugate of ``D`` evaluated at ``(A - r1, B - r2)``, so positive offsets
    enlarge the elastic domain.
    """
    Sig = np.asarray(S.Sigma_E, dtype=float)
    A = float(norm(dev(sym(Sig)))) + S.g1 - yp.r1
    B = float(norm(skew(Sig))) + S.g2 - yp.r2
    return ABPoint(A, B)


def _check_forces(S: GeneralizedStress, tol: float):
    if S.g1 > tol or S.g2 > tol:
        raise InconsistentInput(f"hardening forces must be non-positive, got g1={S.g1}, g2={S.g2}")


def elastic_domain_membership(S: GeneralizedStress, yp: YieldParams) -> bool:
    _check_forces(S, yp.default_tol)
    return in_set_K(ab_point(S, yp), yp)


def nearest_branch(A: float, B: float) -> Branch:
    """Sign-pattern rule used for states off the yield surface."""
    if B <= 0.0:
        return Branch.S1
    if A <= 0.0:
        return Branch.S2
    return Branch.S3


def classify_ab(A: float, B: float, yp: YieldParams, tol: float | None = None) -> Branch:
    tol = yp.default_tol if tol is None else tol
    s0, sh0 = yp.sigma0, yp.sigma_hat0
    rel = tol / max(s0, sh0)
    # junction points go to S3 (its normal matches the flat segments there)
    if A >= -tol and B >= -tol:
        e = (max(A, 0.0) / s0) ** 2 + (max(B, 0.0) / sh0) ** 2
        if abs(e - 1.0) <= 2.0 * rel:
            return Branch.S3
    if abs(A - s0) <= tol and B <= tol:
        return Branch.S1
    if abs(B - sh0) <= tol and A <= tol:
        return Branch.S2
    if conjugate_f(A / s0, B / sh0) == 0.0:
        return Branch.INTERIOR
    return nearest_branch(A, B)


def classify_branch(S: GeneralizedStress, yp: YieldParams, tol: float | None = None) -> Branch:
    """Locate a generalized stress relative to the yield surface.

    Boundary states return the owning branch, strictly admissible states
    return ``INTERIOR`` and inadmissible (trial) states return the branch
    selected by the sign pattern of ``(A, B)``.
    """
    tol = yp.default_tol if tol is None else tol
    _check_forces(S, tol)
    p = ab_point(S, yp)
    return classify_ab(p.A, p.B, yp, tol)


def phi_ab(A, B, yp: YieldParams, branch: Branch):
    if branch == Branch.S1:
        return A - yp.sigma0
    if branch == Branch.S2:
        return B - yp.sigma_hat0
    if branch == Branch.S3:
        return (A / yp.sigma0) ** 2 + (B / yp.sigma_hat0) ** 2 - 1.0
    raise ValueError(f"yield function is defined on S1, S2, S3 only, got {branch!r}")


def yield_phi(S: GeneralizedStress, yp: YieldParams, branch: Branch) -> float:
    """Branch-wise yield function; note that the S3 expression is dimensionless."""
    p = ab_point(S, yp)
    return float(phi_ab(p.A, p.B, yp, Branch(branch)))
