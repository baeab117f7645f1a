import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from pdprox.losses import (
    LossSpec, MultiOutputCoupling, RowCoupling, SparseCoupling, bilinear_build, data_c,
    lipschitz_c, operator_c, partial_grad_alpha, partial_grad_w, primal_loss_value,
)
from pdprox.numerics import Dataset
from pdprox.projections import dual_support
from oracles import loss_closed_form, vertex_max

SPECS = [
    LossSpec("hinge"),
    LossSpec("generalized_hinge", slope=2.0),
    LossSpec("absolute"),
    LossSpec("eps_insensitive", eps=0.3),
    LossSpec("piecewise_linear", slope=0.3),
]
BLOCK = {"hinge": "box01", "absolute": "box11", "generalized_hinge": "triangle",
         "eps_insensitive": "triangle", "piecewise_linear": "triangle"}


def _data(spec, n=30, d=4, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d)) * scale
    y = rng.choice([-1.0, 1.0], n) if spec.is_classification else 2 * rng.standard_normal(n)
    return Dataset(X, y)


def _multi(n=12, d=4, K=3, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(rng.standard_normal((n, d)), rng.standard_normal((n, K)))


ALL = SPECS + [LossSpec("l2")]


def _ds_for(spec, **kw):
    return _multi(**kw) if spec.kind == "l2" else _data(spec, **kw)


class TestBuild:
    def test_hinge_margin_at_zero(self):
        bf, dom = bilinear_build(LossSpec("hinge"), Dataset(np.array([[1.0, 0.0]]), np.array([1.0])))
        val, _ = dual_support(dom, partial_grad_alpha(bf, np.zeros(2)))
        assert val == 1.0

    def test_absolute_example(self):
        bf, dom = bilinear_build(LossSpec("absolute"), Dataset(np.array([[1.0]]), np.array([2.0])))
        val, arg = dual_support(dom, partial_grad_alpha(bf, np.array([5.0])))
        assert val == 3.0 and arg.tolist() == [1.0]

    def test_hinge_rejects_real_labels(self):
        with pytest.raises(ValueError):
            bilinear_build(LossSpec("hinge"), Dataset(np.ones((2, 2)), np.array([1.0, 0.5])))

    def test_l2_needs_multi_output(self):
        with pytest.raises(ValueError):
            bilinear_build(LossSpec("l2"), Dataset(np.ones((2, 2)), np.ones(2)))

    @pytest.mark.parametrize("kw", [dict(kind="generalized_hinge", slope=1.0),
                                    dict(kind="piecewise_linear", slope=1.0),
                                    dict(kind="eps_insensitive", eps=-1.0),
                                    dict(kind="logistic")])
    def test_invalid_specs(self, kw):
        with pytest.raises(ValueError):
            LossSpec(**kw)

    @pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
    def test_sizes(self, spec):
        ds = _ds_for(spec)
        bf, dom = bilinear_build(spec, ds)
        assert dom.size == bf.dual_size == ds.n * ds.n_outputs * spec.block_size
        assert bf.primal_size == ds.d * ds.n_outputs
        assert bf.H.toarray().shape == (bf.primal_size, bf.dual_size)


class TestGradients:
    def test_zero_dual(self):
        bf, _ = bilinear_build(LossSpec("hinge"), _data(LossSpec("hinge")))
        np.testing.assert_array_equal(partial_grad_w(bf, np.zeros(bf.dual_size)), bf.b)

    def test_hinge_all_ones(self):
        ds = _data(LossSpec("hinge"))
        bf, _ = bilinear_build(LossSpec("hinge"), ds)
        X = ds.features.toarray()
        expect = -(X * ds.labels[:, None]).sum(axis=0) / ds.n
        np.testing.assert_allclose(partial_grad_w(bf, np.ones(ds.n)), expect, atol=1e-15)

    def test_hinge_zero_primal(self):
        ds = _data(LossSpec("hinge"))
        bf, _ = bilinear_build(LossSpec("hinge"), ds)
        np.testing.assert_allclose(partial_grad_alpha(bf, np.zeros(ds.d)), np.full(ds.n, 1 / ds.n))

    def test_hand_evaluation(self):
        bf, _ = bilinear_build(LossSpec("hinge"), Dataset(np.array([[2.0, 0.0]]), np.array([1.0])))
        assert partial_grad_alpha(bf, np.array([1.0, 1.0])).tolist() == [-1.0]

    def test_length_checks(self):
        bf, _ = bilinear_build(LossSpec("hinge"), _data(LossSpec("hinge")))
        with pytest.raises(ValueError):
            partial_grad_w(bf, np.zeros(bf.dual_size + 1))
        with pytest.raises(ValueError):
            partial_grad_alpha(bf, np.zeros(bf.primal_size + 1))

    @pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
    def test_finite_differences(self, spec):
        ds = _ds_for(spec, n=8, d=3)
        bf, _ = bilinear_build(spec, ds)
        rng = np.random.default_rng(1)
        w, a = rng.standard_normal(bf.primal_size), rng.standard_normal(bf.dual_size)
        h = 1e-5
        gw = [(bf.value(w + h * e, a) - bf.value(w - h * e, a)) / (2 * h) for e in np.eye(w.size)]
        ga = [(bf.value(w, a + h * e) - bf.value(w, a - h * e)) / (2 * h) for e in np.eye(a.size)]
        np.testing.assert_allclose(partial_grad_w(bf, a), gw, atol=1e-7)
        np.testing.assert_allclose(partial_grad_alpha(bf, w), ga, atol=1e-7)

    @pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
    def test_bilinearity(self, spec):
        ds = _ds_for(spec, n=8, d=3)
        bf, _ = bilinear_build(spec, ds)
        rng = np.random.default_rng(2)
        w1, w2 = rng.standard_normal((2, bf.primal_size))
        a1, a2 = rng.standard_normal((2, bf.dual_size))
        for t in (0.3, -1.7, 2.5):
            lhs = bf.value(t * w1 + (1 - t) * w2, a1)
            rhs = t * bf.value(w1, a1) + (1 - t) * bf.value(w2, a1)
            assert abs(lhs - rhs) <= 1e-12 * max(1, abs(lhs))
            lhs = bf.value(w1, t * a1 + (1 - t) * a2)
            rhs = t * bf.value(w1, a1) + (1 - t) * bf.value(w1, a2)
            assert abs(lhs - rhs) <= 1e-12 * max(1, abs(lhs))

    def test_couplings_agree_with_dense(self):
        rng = np.random.default_rng(3)
        X = sp.csr_matrix(rng.standard_normal((5, 3)))
        coef = rng.standard_normal((5, 2, 2))
        for H in (RowCoupling(X, coef), MultiOutputCoupling(X, 2), SparseCoupling(rng.standard_normal((4, 6)))):
            D = H.toarray()
            a, w = rng.standard_normal(D.shape[1]), rng.standard_normal(D.shape[0])
            np.testing.assert_allclose(H.matvec(a), D @ a, atol=1e-13)
            np.testing.assert_allclose(H.rmatvec(w), D.T @ w, atol=1e-13)


class TestPrimalLoss:
    def test_hinge_zero_region(self):
        ds = Dataset(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([1.0, -1.0]))
        assert primal_loss_value(LossSpec("hinge"), ds, np.array([2.0, -3.0])) == 0.0

    def test_eps_boundary(self):
        ds = Dataset(np.array([[1.0]]), np.array([1.0]))
        assert primal_loss_value(LossSpec("eps_insensitive", eps=0.5), ds, np.array([1.5])) == 0.0

    def test_piecewise_example(self):
        ds = Dataset(np.array([[1.0]]), np.array([1.0]))
        assert abs(primal_loss_value(LossSpec("piecewise_linear", slope=0.3), ds, np.array([3.0])) - 1.4) <= 1e-12

    @pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
    def test_equals_dual_maximum(self, spec):
        ds = _ds_for(spec)
        bf, dom = bilinear_build(spec, ds)
        rng = np.random.default_rng(4)
        for _ in range(20):
            w = 2 * rng.standard_normal(bf.primal_size)
            val, _ = dual_support(dom, partial_grad_alpha(bf, w))
            assert abs(bf.c0 + bf.b @ w + val - primal_loss_value(spec, ds, w)) <= 1e-12

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
    def test_per_example_vertex_oracle(self, spec):
        ds = _data(spec, n=20)
        bf, dom = bilinear_build(spec, ds)
        rng = np.random.default_rng(5)
        X = ds.features.toarray()
        for _ in range(20):
            w = 2 * rng.standard_normal(ds.d)
            G = partial_grad_alpha(bf, w).reshape(ds.n, -1) * ds.n
            for i in range(ds.n):
                ref = loss_closed_form(spec.kind, X[i] @ w, ds.labels[i], spec.slope, spec.eps)
                assert abs(vertex_max(G[i], BLOCK[spec.kind]) - ref) <= 1e-9

    def test_multi_output_scalar_loss(self):
        ds = _multi()
        spec = LossSpec("absolute")
        bf, dom = bilinear_build(spec, ds)
        W = np.random.default_rng(6).standard_normal((ds.d, 3))
        P = ds.features.toarray() @ W
        assert abs(primal_loss_value(spec, ds, W) - np.abs(P - ds.labels).sum() / ds.n) <= 1e-12
        val, _ = dual_support(dom, partial_grad_alpha(bf, W.ravel()))
        assert abs(val - primal_loss_value(spec, ds, W)) <= 1e-12


class TestLipschitz:
    def test_hinge_value(self):
        X = np.eye(4)
        assert lipschitz_c(LossSpec("hinge"), Dataset(X, np.ones(4))) == 0.25

    def test_generalized_hinge_sides(self):
        ds = Dataset(np.array([[1.0]]), np.array([1.0]))
        spec = LossSpec("generalized_hinge", slope=2.0)
        assert lipschitz_c(spec, ds, "grad_w") == 8.0
        assert lipschitz_c(spec, ds, "grad_alpha") == 5.0
        assert lipschitz_c(spec, ds) == 8.0

    def test_unknown_side(self):
        with pytest.raises(ValueError):
            lipschitz_c(LossSpec("hinge"), Dataset(np.eye(2), np.ones(2)), "sideways")

    @pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
    def test_bounds_operator_norm(self, spec):
        ds = _ds_for(spec, n=10, d=3)
        bf, _ = bilinear_build(spec, ds)
        top = np.linalg.norm(bf.H.toarray(), 2) ** 2
        assert top <= lipschitz_c(spec, ds) * (1 + 1e-12)

    @pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
    def test_sampled_inequalities(self, spec):
        ds = _ds_for(spec, n=10, d=3)
        bf, _ = bilinear_build(spec, ds)
        c_a, c_w = lipschitz_c(spec, ds, "grad_alpha"), lipschitz_c(spec, ds, "grad_w")
        rng = np.random.default_rng(7)
        for _ in range(200):
            w1, w2 = rng.standard_normal((2, bf.primal_size)) * rng.uniform(0.01, 10)
            a1, a2 = rng.standard_normal((2, bf.dual_size)) * rng.uniform(0.01, 10)
            dga = partial_grad_alpha(bf, w1) - partial_grad_alpha(bf, w2)
            dgw = partial_grad_w(bf, a1) - partial_grad_w(bf, a2)
            assert dga @ dga <= c_a * ((w1 - w2) @ (w1 - w2)) * (1 + 1e-12)
            assert dgw @ dgw <= c_w * ((a1 - a2) @ (a1 - a2)) * (1 + 1e-12)

    def test_operator_fallback_is_upper_bound(self):
        spec = LossSpec("eps_insensitive", eps=0.1)
        ds = _data(spec, n=10, d=3)
        bf, _ = bilinear_build(spec, ds)
        top = np.linalg.norm(bf.H.toarray(), 2) ** 2
        est = operator_c(bf.H)
        assert top <= est <= 1.011 * top

    def test_data_c_exact_for_single_entry_columns(self):
        H = SparseCoupling(np.array([[0.5, 0.0, 0.2], [0.0, 0.3, 0.0]]))
        assert abs(data_c(H) - 0.29) <= 1e-15
        assert abs(np.linalg.norm(H.toarray(), 2) ** 2 - 0.29) <= 1e-12
        assert data_c(SparseCoupling(np.ones((2, 2)))) is None

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 20), st.integers(1, 6), st.floats(0.1, 10), st.integers(0, 1000))
    def test_closed_form_vs_spectral_norm(self, n, d, scale, seed):
        spec = LossSpec("piecewise_linear", slope=0.2)
        ds = _data(spec, n=n, d=d, seed=seed, scale=scale)
        bf, _ = bilinear_build(spec, ds)
        top = np.linalg.norm(bf.H.toarray(), 2) ** 2
        assert top <= lipschitz_c(spec, ds) * (1 + 1e-12)
