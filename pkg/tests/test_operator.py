import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixlab import Grid, GridFunction, apply, assemble_fractional, assemble_local, assemble_mixed, solve_linear
from mixlab.grid import FractionalOrder, gagliardo_seminorm_sq, gradient_sq
from mixlab.operator import (
    dump_matrix,
    fractional_row_sums,
    interpolation_defect,
    kernel_weights,
    one_sided_tail,
)
from oracles import bump, bump_closed_form, pv_fractional_laplacian


class TestLocal:
    def test_single_node(self):
        np.testing.assert_array_equal(assemble_local(Grid(0, 1, 1)), [[8.0]])

    @pytest.mark.parametrize("n", [3, 10, 101])
    def test_exact_on_quadratics(self, n):
        g = Grid(0, 1, n)
        u = g.nodes * (1 - g.nodes)
        np.testing.assert_allclose(assemble_local(g) @ u, 2.0, rtol=1e-9)

    def test_smallest_eigenvalue(self):
        g = Grid(0, 1, 1023)
        lam = np.linalg.eigvalsh(assemble_local(g))[0]
        # LAPACK works to ~eps * ||A|| = eps * 4/h^2 in absolute terms
        assert lam == pytest.approx(2 / g.h**2 * (1 - np.cos(np.pi * g.h)), rel=1e-9)
        assert lam == pytest.approx(np.pi**2, abs=1e-4)


class TestInterpolationDefect:
    @pytest.mark.parametrize("s", [0.05, 0.25, 0.5, 0.75, 0.95])
    def test_against_direct_sum(self, s):
        q = 1 + 2 * s
        with mp.workdps(30):
            # exact cell integrals up to K, Euler-Maclaurin-free tail bound via zeta
            head = mp.fsum(
                mp.quad(lambda th: th * (1 - th) * (k + th) ** (-q), [0, 1]) for k in range(1, 400)
            )
            tail = mp.zeta(q, 400.5) / 6  # int_0^1 th(1-th) = 1/6, midpoint rule
        assert interpolation_defect(s) == pytest.approx(float(head + tail), rel=1e-8)


class TestFractional:
    def test_symmetric(self):
        A = assemble_fractional(Grid(0, 1, 50), 0.37)
        assert np.array_equal(A, A.T)

    @pytest.mark.parametrize("s", [0.1, 0.3, 0.5, 0.75, 0.9])
    def test_sign_pattern(self, s):
        A = assemble_fractional(Grid(0, 1, 200), s)
        off = A - np.diag(np.diag(A))
        assert np.all(off <= 0)
        assert np.all(np.diag(A) > 0)
        assert np.all(A.sum(axis=1) > 0)

    @pytest.mark.parametrize("s", [0.25, 0.5, 0.75, 0.9])
    def test_row_sums_are_tail_mass(self, s):
        g = Grid(0, 1, 511)
        A = assemble_fractional(g, s)
        err = np.abs(A @ np.ones(g.n) - fractional_row_sums(g, s))
        # summing a row cancels entries of size diag(A) ~ h^(-2s) down to the tail mass
        assert np.all(err <= 1e-10 * np.diag(A))
        if s <= 0.75:
            assert np.all(err <= 1e-10 * fractional_row_sums(g, s))

    @pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
    def test_row_sums_approach_analytic_tail(self, s):
        # nodes at or beyond the boundary versus the continuous exterior integral
        errs = []
        for n in (255, 1023):
            g = Grid(0, 1, n)
            x = g.nodes
            exact = FractionalOrder(s).c_s * (x ** (-2 * s) + (1 - x) ** (-2 * s)) / (2 * s)
            mid = n // 2
            errs.append(abs(fractional_row_sums(g, s)[mid] / exact[mid] - 1))
        assert errs[1] < errs[0] and errs[1] < 1e-2

    @pytest.mark.parametrize("s", [0.2, 0.6])
    def test_tail_telescopes(self, s):
        w = kernel_weights(5000, s)
        i = np.arange(2, 40)
        direct = np.array([w[k:].sum() for k in i])
        # truncated direct sum misses the far tail beyond m = 5000
        far = one_sided_tail(np.array([5001.0]), s)
        np.testing.assert_allclose(direct + far, one_sided_tail(i, s), rtol=1e-10)

    @pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
    def test_closed_form_oracle_agrees_with_quadrature(self, s):
        for x in (0.0, 0.3):
            assert pv_fractional_laplacian(bump(1 + s), x, s) == pytest.approx(bump_closed_form(x, s), rel=1e-10)

    @pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
    def test_bump_central_nodes(self, s):
        g = Grid(-1, 1, 1023)
        v = assemble_fractional(g, s) @ (1 - g.nodes**2) ** (1 + s)
        mid = np.arange(g.n // 2 - 2, g.n // 2 + 3)
        np.testing.assert_allclose(v[mid], bump_closed_form(g.nodes[mid], s), rtol=1e-3)

    @pytest.mark.parametrize("s", [0.25, 0.75])
    def test_consistency_order(self, s):
        coarse = Grid(-1, 1, 15)
        xs = coarse.nodes[3:12:4]
        oracle = np.array([pv_fractional_laplacian(bump(3), x, s) for x in xs])
        errs = []
        for n in (63, 127, 255, 511):
            g = Grid(-1, 1, n)
            v = assemble_fractional(g, s) @ (1 - g.nodes**2) ** 3
            idx = [int(round((x + 1) / g.h)) - 1 for x in xs]
            errs.append(np.max(np.abs(v[idx] - oracle)))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert orders.min() >= min(2 - 2 * s, 1) - 0.1

    def test_unit_normalization_scales(self):
        g = Grid(0, 1, 20)
        std = assemble_fractional(g, FractionalOrder(0.4))
        unit = assemble_fractional(g, FractionalOrder(0.4, "unit"))
        np.testing.assert_allclose(std, FractionalOrder(0.4).c_s * unit, rtol=1e-14)


class TestMixed:
    def test_rejects_t(self):
        with pytest.raises(ValueError):
            assemble_mixed(Grid(0, 1, 5), 0.5, 1.5)
        with pytest.raises(ValueError):
            assemble_mixed(Grid(0, 1, 5), 0.5, -0.1)

    def test_warns_when_degenerate(self):
        with pytest.warns(UserWarning):
            assemble_mixed(Grid(0, 1, 5), 0.02)

    def test_t_zero_is_local(self):
        g = Grid(0, 1, 40)
        u = GridFunction(g, np.random.default_rng(0).standard_normal(40))
        op = assemble_mixed(g, 0.5, 0.0)
        np.testing.assert_array_equal(apply(op, u).values, op.local_matvec(u.values))
        np.testing.assert_allclose(apply(op, u).values, apply(assemble_local(g), u).values, rtol=1e-13, atol=1e-9)

    def test_quadratic_split(self):
        g = Grid(0, 1, 101)
        op = assemble_mixed(g, 0.3, 1.0)
        u = GridFunction.from_callable(g, lambda x: x * (1 - x))
        np.testing.assert_allclose(apply(op, u).values, 2 + op.A_frac @ u.values, rtol=1e-10)

    def test_matvec_matches_dense(self):
        op = assemble_mixed(Grid(0, 1, 64), 0.6, 0.7)
        v = np.random.default_rng(4).standard_normal(64)
        np.testing.assert_allclose(op.matvec(v), op.matrix @ v, rtol=1e-12, atol=1e-9)

    def test_grid_mismatch(self):
        op = assemble_mixed(Grid(0, 1, 10), 0.5)
        with pytest.raises(ValueError):
            apply(op, GridFunction.zeros(Grid(0, 1, 11)))

    def test_zero_maps_to_zero(self):
        op = assemble_mixed(Grid(0, 1, 10), 0.5)
        assert apply(op, GridFunction.zeros(op.grid)).sup() == 0.0

    def test_linearity(self):
        g = Grid(0, 1, 200)
        op = assemble_mixed(g, 0.45)
        rng = np.random.default_rng(5)
        u, v = (GridFunction(g, rng.standard_normal(g.n)) for _ in range(2))
        lhs = apply(op, 2 * u - 3 * v).values
        rhs = 2 * apply(op, u).values - 3 * apply(op, v).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))

    def test_symmetric_inner_products(self):
        g = Grid(0, 1, 100)
        op = assemble_mixed(g, 0.65)
        rng = np.random.default_rng(6)
        for _ in range(100):
            u, v = rng.standard_normal((2, g.n))
            a, b = u @ op.matvec(v), v @ op.matvec(u)
            assert abs(a - b) <= 1e-10 * max(abs(a), 1.0)

    @given(st.floats(0.05, 0.95), st.floats(0.0, 1.0))
    def test_m_matrix_structure(self, s, t):
        A = assemble_mixed(Grid(0, 1, 30), s, t).matrix
        off = A - np.diag(np.diag(A))
        slack = np.diag(A) - np.abs(off).sum(axis=1)
        assert np.all(off <= 0)
        # interior rows of the pure Laplacian are only weakly dominant
        assert np.all(slack >= -1e-9 * np.diag(A))
        assert slack[0] > 0 and slack[-1] > 0
        if t >= 1e-6:  # smaller t is absorbed by rounding of 2/h^2
            assert np.all(slack > 0)

    def test_inverse_nonnegative(self):
        g = Grid(0, 1, 255)
        op = assemble_mixed(g, 0.5)
        rng = np.random.default_rng(7)
        for _ in range(20):
            u = solve_linear(op, GridFunction(g, rng.uniform(0, 1, g.n)))
            assert u.values.min() >= 0

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
    def test_quadratic_form_monotone_in_t(self, t1, t2, seed):
        t1, t2 = sorted((t1, t2))
        op = assemble_mixed(Grid(0, 1, 40), 0.5)
        v = np.random.default_rng(seed).standard_normal(40)
        assert op.with_t(t1).quadratic_form(v) <= op.with_t(t2).quadratic_form(v) * (1 + 1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_energy_matches_norms(self, seed):
        # smooth random field: h u^T A u against |u'|^2 + (c_s / 2) [u]_s^2
        g = Grid(0, 1, 511)
        rng = np.random.default_rng(seed)
        k = np.arange(1, 9)
        u = GridFunction(g, np.sin(np.pi * np.outer(g.nodes, k)) @ (rng.standard_normal(8) / k))
        op = assemble_mixed(g, 0.5)
        order = FractionalOrder(0.5)
        expected = gradient_sq(u) + order.c_s / 2 * gagliardo_seminorm_sq(u, order)
        assert op.quadratic_form(u.values) == pytest.approx(expected, rel=0.02)


def test_dump_matrix(tmp_path):
    op = assemble_mixed(Grid(0, 1, 12), 0.5)
    dump_matrix(op, tmp_path / "band.csv", band=2)
    rows = (tmp_path / "band.csv").read_text().splitlines()
    assert rows[0] == "i,j,value"
    triplets = [r.split(",") for r in rows[1:]]
    band = [t for t in triplets if t[1] != "-1"]
    tails = [t for t in triplets if t[1] == "-1"]
    assert all(abs(int(i) - int(j)) <= 2 for i, j, _ in band)
    assert len(tails) == 12
    assert float(tails[0][2]) == pytest.approx(op.A_frac.sum(axis=1)[0], rel=1e-9)
    dump_matrix(op, tmp_path / "full.csv", full=True)
    assert len((tmp_path / "full.csv").read_text().splitlines()) == 1 + 144 + 12
