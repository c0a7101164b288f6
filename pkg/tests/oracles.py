"""Independent reference computations used by the tests.

Nothing here imports the package: every oracle is re-derived with plain
numpy so that a bug in the implementation cannot also hide in its check.
"""

import numpy as np


def brute_force_sup(A, B, R=10.0, step=1e-3, r1=0.0, r2=0.0, s0=1.0, sh0=1.0):
    """sup of ``A s + B t - r1 s - r2 t - sqrt(s0^2 s^2 + sh0^2 t^2)`` over
    the grid ``[0, R]^2`` with spacing ``step``.

    The objective is positively homogeneous of degree one, so on a box its
    supremum is attained at the origin or on the two outer edges
    ``s = R`` or ``t = R``; only those points are evaluated.
    """
    g = np.arange(0.0, R + 0.5 * step, step)
    edge = np.full_like(g, R)

    def f(s, t):
        return (A - r1) * s + (B - r2) * t - np.sqrt((s0 * s) ** 2 + (sh0 * t) ** 2)

    return max(0.0, float(np.max(f(edge, g))), float(np.max(f(g, edge))))


def brute_force_sup_full(A, B, R=10.0, step=0.05):
    """Same supremum on the full 2-D grid (coarse; used to confirm the edge
    reduction)."""
    g = np.arange(0.0, R + 0.5 * step, step)
    S, T = np.meshgrid(g, g, indexing="ij")
    return float(np.max(A * S + B * T - np.sqrt(S * S + T * T)))


def classify_by_growth(A, B, growth_tol=1e-9, **kw):
    """'finite' when the supremum does not grow with the box.

    By homogeneity an unbounded supremum doubles from ``R = 5`` to
    ``R = 10``, while a bounded one is attained near the origin and stays
    put. A fixed threshold on the value itself would misclassify points
    just outside the set, where the growth is slow.
    """
    s10 = brute_force_sup(A, B, R=10.0, **kw)
    s5 = brute_force_sup(A, B, R=5.0, **kw)
    if s10 - s5 <= growth_tol:
        return "finite", s10
    return "infinite", s10


def voigt_min_eig(mu, lam):
    """Smallest eigenvalue of the isotropic stiffness on symmetric tensors
    in orthonormal 6-vector form."""
    C = np.zeros((6, 6))
    C[:3, :3] = lam
    C[:3, :3] += 2 * mu * np.eye(3)
    C[3:, 3:] = 2 * mu * np.eye(3)
    return float(np.linalg.eigvalsh(C).min())


def radial_return_shear(Gammas, mu, alpha1, sigma0):
    """Accumulated plastic strain for simple shear ``u1 = Gamma y`` with
    von Mises isotropic hardening, one implicit step per load value."""
    gam = 0.0
    out = []
    for G in Gammas:
        # |dev eps| of simple shear is |G| / sqrt(2); plastic strain is coaxial
        s_tr = 2.0 * mu * (abs(G) / np.sqrt(2.0) - gam)
        dg = max(0.0, (s_tr - sigma0 - mu * alpha1 * gam) / (2.0 * mu + mu * alpha1))
        gam += dg
        out.append(gam)
    return np.array(out)


def uniaxial_hardening_slope(mu, alpha1):
    """Slope of |dev sigma| against |dev eps| after yield."""
    return mu * alpha1 * 2.0 * mu / (2.0 * mu + mu * alpha1)


# polynomial tensor field with hand-derived operators
#   row 0: (x y, x^2, 0)
#   row 1: (0, x z, y^2)
#   row 2: (z^2, 0, x y)


def poly_field(x, y, z):
    F = np.zeros(np.shape(x) + (3, 3))
    F[..., 0, 0] = x * y
    F[..., 0, 1] = x * x
    F[..., 1, 1] = x * z
    F[..., 1, 2] = y * y
    F[..., 2, 0] = z * z
    F[..., 2, 2] = x * y
    return F


def poly_field_curl(x, y, z):
    """curl(a) = (d_y a3 - d_z a2, d_z a1 - d_x a3, d_x a2 - d_y a1) per row."""
    C = np.zeros(np.shape(x) + (3, 3))
    C[..., 0, 2] = x  # 2x - x
    C[..., 1, 0] = 2 * y - x
    C[..., 1, 2] = z
    C[..., 2, 0] = x
    C[..., 2, 1] = 2 * z - y
    return C


def poly_field_div(x, y, z):
    out = np.zeros(np.shape(x) + (3,))
    out[..., 0] = y  # d_x(x y) + d_y(x^2)
    return out


def poly_field_curlcurl(x, y, z):
    """Curl of :func:`poly_field_curl`."""
    C = np.zeros(np.shape(x) + (3, 3))
    C[..., 0, 1] = -1.0
    C[..., 1, 2] = -2.0
    C[..., 2, 0] = -2.0
    return C
