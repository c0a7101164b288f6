import numpy as np
import pytest

from gradplast.fem import build_space, curl_stiffness, elasticity_matrix, stiffness
from gradplast.fields import (
    BoundaryConditionViolated,
    BoundaryMask,
    GridSpec,
    GridTooSmall,
    TensorField,
    apply_micro_hard,
    cross_n,
    curl_curl_field,
    curl_field,
    div_field,
    face_nodes,
    grad_vector,
    korn_incompatible_ratio,
    read_snapshot,
    write_snapshot,
)
from gradplast.tensor_core import ElasticModuli, dev, norm

from oracles import poly_field, poly_field_curl, poly_field_curlcurl, poly_field_div


def cube(n=8):
    return GridSpec(n, n, n, h=1.0 / n, dims=3)


class TestGrid:
    def test_shapes(self):
        g = GridSpec(4, 1, 1, h=0.25, dims=1)
        assert g.shape == (5, 1, 1)
        assert g.volume == pytest.approx(1.0)
        assert g.trapezoid_weights().sum() == pytest.approx(1.0)

    def test_custom_axes(self):
        g = GridSpec(1, 10, 1, h=0.1, dims=1, axes=(1,))
        assert g.shape == (1, 11, 1)
        with pytest.raises(ValueError):
            GridSpec(2, 10, 1, h=0.1, dims=1, axes=(1,))

    @pytest.mark.parametrize("kw", [{"h": 0.0}, {"dims": 4}, {"nx": 0}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            GridSpec(**kw)

    def test_too_small(self):
        g = GridSpec(1, 1, 1, h=1.0, dims=3)
        F = TensorField(g, np.zeros(g.shape + (3, 3)))
        with pytest.raises(GridTooSmall):
            curl_curl_field(F)


class TestOperators:
    def test_polynomial_operators_exact(self):
        g = cube(4)
        F = TensorField.from_function(g, poly_field)
        X = g.coords()
        x, y, z = X[..., 0], X[..., 1], X[..., 2]
        assert np.max(np.abs(curl_field(F).values - poly_field_curl(x, y, z))) < 1e-12
        assert np.max(np.abs(div_field(F) - poly_field_div(x, y, z))) < 1e-12
        assert np.max(np.abs(curl_curl_field(F).values - poly_field_curlcurl(x, y, z))) < 1e-10

    def test_curl_of_gradient_vanishes(self):
        g = cube(6)
        X = g.coords()
        x, y, z = X[..., 0], X[..., 1], X[..., 2]
        v = np.stack([x**2 * y, np.sin(z) * x, y * z**2], axis=-1)
        G = TensorField(g, grad_vector(v, g))
        assert np.max(np.abs(curl_field(G).values)) < 1e-10

    def test_div_of_curl_interior_converges(self):
        errs = []
        for n in (8, 16, 32):
            g = cube(n)
            F = TensorField.from_function(
                g, lambda x, y, z: np.einsum("...,ij->...ij", np.sin(2 * x) * np.cos(y) * np.exp(z), np.arange(9.0).reshape(3, 3))
            )
            d = div_field(curl_curl_field(F))
            X = g.coords()
            inside = np.all((X >= 0.25 - 1e-12) & (X <= 0.75 + 1e-12), axis=-1)
            errs.append(np.max(np.abs(d[inside])))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders > 1.9)

    def test_one_dimensional(self):
        g = GridSpec(1, 20, 1, h=0.05, dims=1, axes=(1,))
        F = TensorField.from_function(g, lambda x, y, z: np.einsum("...,ij->...ij", y**2, np.eye(3)[[0]].T @ np.eye(3)[[2]]))
        # X_13 = y^2 so (Curl X)_11 = d_y X_13 = 2y and (Curl Curl X)_13 = -2
        c = curl_field(F).values
        assert np.allclose(c[..., 0, 0], 2 * g.coords()[..., 1])
        cc = curl_curl_field(F).values
        assert np.allclose(cc[..., 0, 2], -2.0)


class TestMicroHard:
    def test_projection_clamps_and_is_idempotent(self):
        g = cube(4)
        mask = BoundaryMask.from_faces(g, micro_hard=("x-", "y+"))
        rng = np.random.default_rng(0)
        F = TensorField(g, rng.normal(size=g.shape + (3, 3)), mask)
        P = apply_micro_hard(F)
        assert np.array_equal(apply_micro_hard(P).values, P.values)
        for face in ("x-", "y+"):
            m = face_nodes(g, face)
            n = np.zeros(3)
            n["xyz".index(face[0])] = 1.0 if face[1] == "+" else -1.0
            assert np.max(np.abs(cross_n(P, n)[m])) < 1e-15
        untouched = ~mask.hard_nodes()
        assert np.array_equal(P.values[untouched], F.values[untouched])

    def test_trace_free_projection(self):
        g = GridSpec(1, 8, 1, h=0.125, dims=1, axes=(1,))
        mask = BoundaryMask.from_faces(g, micro_hard=("y-", "y+"))
        rng = np.random.default_rng(1)
        F = TensorField(g, dev(rng.normal(size=g.shape + (3, 3))), mask)
        P = apply_micro_hard(F, trace_free=True).values
        assert np.max(np.abs(np.trace(P, axis1=-2, axis2=-1))) < 1e-15

    def test_unknown_face(self):
        with pytest.raises(ValueError):
            BoundaryMask.from_faces(cube(2), micro_hard=("w+",))


class TestKorn:
    def test_ratio_bounded_for_clamped_skew_field(self):
        g = cube(8)
        mask = BoundaryMask.from_faces(g, micro_hard=tuple(f"{a}{s}" for a in "xyz" for s in "-+"))
        X = g.coords()
        bump = np.prod(np.sin(np.pi * X), axis=-1)
        W = np.zeros((3, 3))
        W[0, 1], W[1, 0] = 1.0, -1.0
        F = TensorField(g, bump[..., None, None] * W, mask)
        r = korn_incompatible_ratio(F)
        assert 0.0 < r < 10.0

    def test_rejects_unclamped(self):
        g = cube(4)
        F = TensorField(g, np.ones(g.shape + (3, 3)) - np.eye(3))
        with pytest.raises(BoundaryConditionViolated):
            korn_incompatible_ratio(F)


class TestSnapshot:
    def test_round_trip(self, tmp_path):
        g = GridSpec(3, 2, 1, h=0.5, dims=2)
        rng = np.random.default_rng(2)
        F = TensorField(g, rng.normal(size=g.shape + (3, 3)))
        write_snapshot(tmp_path / "s.csv", F)
        G = read_snapshot(tmp_path / "s.csv", g)
        assert np.array_equal(F.values, G.values)

    def test_bad_header(self, tmp_path):
        (tmp_path / "s.csv").write_text("a,b\n")
        with pytest.raises(ValueError):
            read_snapshot(tmp_path / "s.csv", GridSpec(1, h=1.0))


class TestFiniteElements:
    def test_weights(self):
        g = GridSpec(4, 3, 1, h=0.25, dims=2)
        V = build_space(g)
        assert V.wq.sum() == pytest.approx(g.volume)
        assert np.allclose(V.wn.reshape(g.shape), g.trapezoid_weights())

    def test_gradient_of_linear_field_exact(self):
        g = GridSpec(3, 3, 3, h=1 / 3, dims=3)
        V = build_space(g)
        Gm = np.arange(9.0).reshape(3, 3)
        u = g.coords().reshape(-1, 3) @ Gm.T
        assert np.allclose(V.grad(u), Gm)

    def test_rigid_motions_in_kernel(self):
        g = GridSpec(3, 3, 1, h=0.5, dims=2)
        V = build_space(g)
        K = stiffness(V, ElasticModuli(1.0, 1.5))
        X = g.coords().reshape(-1, 3)
        W = np.array([[0, 1, 0], [-1, 0, 0], [0, 0, 0.0]])
        for u in (np.tile([1.0, 2.0, 3.0], (g.n_nodes, 1)), X @ W.T):
            assert np.max(np.abs(K @ u.reshape(-1))) < 1e-12

    def test_elasticity_matrix(self):
        C = elasticity_matrix(ElasticModuli(1.0, 2.0))
        X = np.arange(9.0).reshape(3, 3)
        expect = (X + X.T) + 2.0 * np.trace(X) * np.eye(3)
        assert np.allclose((C @ X.reshape(-1)).reshape(3, 3), expect)

    def test_curl_stiffness_kills_constants(self):
        g = GridSpec(4, 4, 1, h=0.25, dims=2)
        V = build_space(g)
        K = curl_stiffness(V)
        p = np.tile(np.arange(9.0), g.n_nodes)
        assert np.max(np.abs(K @ p)) < 1e-12
        rng = np.random.default_rng(3)
        q = rng.normal(size=9 * g.n_nodes)
        assert q @ (K @ q) >= 0.0
        assert norm(V.curl(p.reshape(-1, 3, 3))).max() < 1e-12
