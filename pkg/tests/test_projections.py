import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pdprox.projections import (
    Box, BoxLinear, DualDomain, L2Ball, box_linear_residual, dual_support, is_feasible,
    project_box, project_box_linear, project_dual_domain, project_l2_ball,
)
from oracles import project_box_linear_enum, project_qp_cvx

vec = arrays(np.float64, st.integers(1, 8), elements=st.floats(-5, 5, allow_nan=False))


class TestBox:
    def test_clamp(self):
        np.testing.assert_array_equal(project_box(np.array([-0.5, 0.5, 1.5]), 0, 1), [0, 0.5, 1])

    def test_interior(self):
        v = np.array([0.2, 0.7])
        np.testing.assert_array_equal(project_box(v, 0, 1), v)

    @given(vec)
    def test_idempotent(self, v):
        p = project_box(v, -1, 2)
        np.testing.assert_array_equal(project_box(p, -1, 2), p)

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            project_box(np.ones(2), 1, 0)


class TestL2Ball:
    def test_interior(self):
        v = np.array([0.3, 0.4])
        np.testing.assert_array_equal(project_l2_ball(v, 1), v)

    def test_radial(self):
        np.testing.assert_allclose(project_l2_ball(np.array([3.0, 4.0]), 1), [0.6, 0.8])

    @given(vec, st.floats(0.01, 3))
    def test_geometry(self, v, r):
        p = project_l2_ball(v, r)
        assert np.linalg.norm(p) <= r * (1 + 1e-12)
        # p is a nonnegative multiple of v
        assert abs(np.linalg.norm(p) * np.linalg.norm(v) - p @ v) <= 1e-9 * max(1, np.linalg.norm(v) ** 2)


class TestBoxLinear:
    def test_inactive_cap_is_box_projection(self):
        a = np.array([0.2, -1.0, 0.3])
        np.testing.assert_array_equal(project_box_linear(a, 1.0, np.ones(3), 5.0), [0.2, 0.0, 0.3])

    def test_symmetric_split(self):
        np.testing.assert_allclose(project_box_linear(np.array([1.0, 1.0]), 1, np.ones(2), 1), [0.5, 0.5])

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = rng.integers(1, 9)
            a = rng.uniform(-1, 3, n)
            s = rng.uniform(0.2, 2)
            v = rng.uniform(0.1, 2, n)
            rho = rng.uniform(0.1, 3)
            p = project_box_linear(a, s, v, rho)
            q = project_box_linear_enum(a, s, v, rho)
            assert np.abs(p - q).max() <= 1e-7

    def test_matches_conic_qp(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            n = 6
            a, v = rng.uniform(-1, 3, n), rng.uniform(0.1, 2, n)
            p = project_box_linear(a, 1.0, v, 1.5)
            q = project_qp_cvx(a, lambda x: [x >= 0, x <= 1, v @ x <= 1.5])
            assert np.abs(p - q).max() <= 1e-6

    def test_residual_monotone_in_eta(self):
        rng = np.random.default_rng(2)
        a, v = rng.uniform(-1, 3, 8), rng.uniform(0.1, 2, 8)
        etas = np.linspace(0, (a / v).max(), 10)
        res = [box_linear_residual(a, e, 1.0, v, 1.0) for e in etas]
        assert all(b <= r + 1e-15 for r, b in zip(res, res[1:]))

    @settings(max_examples=200, deadline=None)
    @given(vec, st.floats(0.1, 3), st.floats(0.05, 5), st.integers(0, 2 ** 31))
    def test_feasible_output(self, a, s, rho, seed):
        v = np.random.default_rng(seed).uniform(0.1, 3, a.size)
        p = project_box_linear(a, s, v, rho)
        assert np.all(p >= 0) and np.all(p <= s) and p @ v <= rho * (1 + 1e-9)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            project_box_linear(np.ones(2), 1, np.array([1.0, 0.0]), 1)


def _domains():
    return [
        DualDomain(5, 1, Box(0.0, 1.0)),
        DualDomain(5, 1, Box(-1.0, 1.0)),
        DualDomain(4, 2, BoxLinear(1.0, (1.0, 1.0), 1.0)),
        DualDomain(3, 3, L2Ball(1.0)),
        DualDomain(6, 1, Box(0.0, 1.0), l1_cap=2.0),
    ]


class TestDualDomain:
    def test_identity_on_feasible(self):
        for dom in _domains():
            a = np.zeros(dom.size)
            np.testing.assert_array_equal(project_dual_domain(dom, a), a)

    def test_cap_sums_to_m(self):
        dom = DualDomain(5, 1, Box(0.0, 1.0), l1_cap=1.0)
        p = project_dual_domain(dom, np.ones(5))
        assert abs(p.sum() - 1.0) <= 1e-10
        q = project_qp_cvx(np.ones(5), lambda x: [x >= 0, x <= 1, sum(x) <= 1])
        assert np.abs(p - q).max() <= 1e-6

    def test_eps_block_against_grid(self):
        dom = DualDomain(1, 2, BoxLinear(1.0, (1.0, 1.0), 1.0))
        p = project_dual_domain(dom, np.array([0.9, 0.8]))
        g = np.linspace(0, 1, 2001)
        A, B = np.meshgrid(g, g)
        ok = A + B <= 1 + 1e-12
        d = (A - 0.9) ** 2 + (B - 0.8) ** 2
        d[~ok] = np.inf
        i = np.unravel_index(np.argmin(d), d.shape)
        assert abs(p[0] - A[i]) <= 1e-3 and abs(p[1] - B[i]) <= 1e-3
        np.testing.assert_allclose(p, project_box_linear_enum([0.9, 0.8], 1, [1, 1], 1), atol=1e-7)

    def test_cap_requires_nonnegative_box(self):
        with pytest.raises(ValueError):
            DualDomain(3, 1, Box(-1.0, 1.0), l1_cap=1.0)
        with pytest.raises(ValueError):
            DualDomain(3, 2, BoxLinear(1.0, (1.0, 1.0), 1.0), l1_cap=1.0)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            project_dual_domain(DualDomain(3, 1, Box(0.0, 1.0)), np.ones(4))

    @pytest.mark.parametrize("dom", _domains(), ids=lambda d: type(d.block).__name__ + str(d.l1_cap))
    def test_projection_properties(self, dom):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b = 2 * rng.standard_normal(dom.size), 2 * rng.standard_normal(dom.size)
            pa, pb = project_dual_domain(dom, a), project_dual_domain(dom, b)
            assert is_feasible(dom, pa)
            # non-expansive
            assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) * (1 + 1e-12) + 1e-14
            # idempotent
            assert np.abs(project_dual_domain(dom, pa) - pa).max() <= 1e-14
            # variational inequality against a random feasible point
            z = project_dual_domain(dom, 3 * rng.standard_normal(dom.size))
            assert (a - pa) @ (z - pa) <= 1e-9

    @pytest.mark.parametrize("dom", _domains(), ids=lambda d: type(d.block).__name__ + str(d.l1_cap))
    def test_support_function_is_max(self, dom):
        rng = np.random.default_rng(4)
        for _ in range(20):
            g = rng.standard_normal(dom.size)
            val, arg = dual_support(dom, g)
            assert is_feasible(dom, arg)
            assert abs(arg @ g - val) <= 1e-12
            for _ in range(20):
                z = project_dual_domain(dom, 3 * rng.standard_normal(dom.size))
                assert z @ g <= val + 1e-12
