import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixlab import Grid, GridFunction, SolverError, assemble_mixed, eigengap, lp_norm, principal_eigenpair, rayleigh_quotient
from mixlab.spectral import dense_eigenvalues


def local_closed_form(g: Grid, k: int = 1) -> float:
    return 2 / g.h**2 * (1 - math.cos(k * math.pi * g.h))


class TestPrincipal:
    def test_local_converges_to_pi_squared(self):
        pair = principal_eigenpair(assemble_mixed(Grid(0, 1, 2047), 0.5, 0.0))
        assert pair.lambda1 == pytest.approx(math.pi**2, rel=1e-3)

    @pytest.mark.parametrize("n", [7, 64, 300])
    def test_local_closed_form(self, n):
        g = Grid(0, 1, n)
        assert principal_eigenpair(assemble_mixed(g, 0.5, 0.0)).lambda1 == pytest.approx(local_closed_form(g), rel=1e-10)

    def test_mixed_matches_dense(self):
        op = assemble_mixed(Grid(0, 1, 1023), 0.5)
        pair = principal_eigenpair(op)
        dense = dense_eigenvalues(op, 1)[0]
        assert pair.lambda1 == pytest.approx(dense, rel=1e-6)
        assert pair.lambda1 > math.pi**2

    def test_normalization_and_sign(self):
        op = assemble_mixed(Grid(0, 1, 255), 0.3)
        pair = principal_eigenpair(op)
        assert lp_norm(pair.phi1, 2) == pytest.approx(1.0, rel=1e-12)
        assert pair.phi1.values.min() > 0
        assert pair.residual <= 1e-8 * pair.lambda1

    def test_residual_is_reported(self):
        op = assemble_mixed(Grid(0, 1, 127), 0.5)
        pair = principal_eigenpair(op)
        v = pair.phi1.values
        r = op.matvec(v) - pair.lambda1 * v
        assert pair.residual == pytest.approx(math.sqrt(op.grid.h * r @ r), rel=1e-6, abs=1e-14)

    def test_iteration_cap(self):
        op = assemble_mixed(Grid(0, 1, 127), 0.5)
        with pytest.raises(SolverError):
            principal_eigenpair(op, tol=1e-15, max_iter=2)

    def test_rejects_tol(self):
        with pytest.raises(ValueError):
            principal_eigenpair(assemble_mixed(Grid(0, 1, 7), 0.5), tol=0)

    def test_monotone_in_t(self):
        op = assemble_mixed(Grid(0, 1, 255), 0.6)
        lams = [principal_eigenpair(op.with_t(t)).lambda1 for t in (0.0, 0.3, 0.6, 1.0)]
        assert all(b >= a for a, b in zip(lams, lams[1:]))

    def test_abs_phi_is_also_minimal(self):
        op = assemble_mixed(Grid(0, 1, 255), 0.5)
        pair = principal_eigenpair(op)
        assert rayleigh_quotient(op, abs(pair.phi1)) <= rayleigh_quotient(op, pair.phi1) + 1e-8


class TestRayleigh:
    def test_eigenfunction(self):
        op = assemble_mixed(Grid(0, 1, 255), 0.5)
        pair = principal_eigenpair(op)
        assert rayleigh_quotient(op, pair.phi1) == pytest.approx(pair.lambda1, rel=1e-10)

    def test_second_sine_mode(self):
        g = Grid(0, 1, 1023)
        u = GridFunction.from_callable(g, lambda x: np.sin(2 * np.pi * x))
        q = rayleigh_quotient(assemble_mixed(g, 0.5, 0.0), u)
        assert q == pytest.approx(local_closed_form(g, 2), rel=1e-10)
        assert q == pytest.approx(4 * math.pi**2, rel=1e-4)

    def test_zero_field_rejected(self):
        op = assemble_mixed(Grid(0, 1, 15), 0.5)
        with pytest.raises(ValueError):
            rayleigh_quotient(op, GridFunction.zeros(op.grid))

    def test_random_fields_above_lambda1(self):
        op = assemble_mixed(Grid(0, 1, 127), 0.5)
        lam = principal_eigenpair(op).lambda1
        V = np.random.default_rng(0).standard_normal((1000, op.n))
        q = np.einsum("ij,ij->i", V, op.matvec(V.T).T) / np.einsum("ij,ij->i", V, V)
        assert q.min() >= lam - 1e-8

    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1))
    def test_variational_minimality(self, seed):
        op = assemble_mixed(Grid(0, 1, 31), 0.4)
        lam = dense_eigenvalues(op, 1)[0]
        v = np.random.default_rng(seed).standard_normal(op.n)
        assert rayleigh_quotient(op, GridFunction(op.grid, v)) >= lam * (1 - 1e-12)


class TestEigengap:
    def test_local_gap(self):
        g = Grid(0, 1, 1023)
        lam1, lam2 = eigengap(assemble_mixed(g, 0.5, 0.0))
        assert lam2 - lam1 == pytest.approx(local_closed_form(g, 2) - local_closed_form(g, 1), rel=1e-8)
        assert lam2 - lam1 == pytest.approx(3 * math.pi**2, rel=1e-4)

    def test_quarter_order_matches_dense(self):
        op = assemble_mixed(Grid(0, 1, 511), 0.25)
        lam1, lam2 = eigengap(op)
        d1, d2 = dense_eigenvalues(op, 2)
        assert lam1 == pytest.approx(d1, rel=1e-6)
        assert lam2 == pytest.approx(d2, rel=1e-6)
        assert lam2 - lam1 > 0

    @pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
    def test_gap_positive(self, s):
        op = assemble_mixed(Grid(0, 1, 255), s)
        lam1, lam2 = eigengap(op)
        d1, d2 = dense_eigenvalues(op, 2)
        assert lam2 - lam1 > 1e-6 * lam1
        assert (lam1, lam2) == pytest.approx((d1, d2), rel=1e-6)

    @pytest.mark.parametrize("t", [0.0, 0.5, 1.0])
    @pytest.mark.parametrize("n", [31, 200])
    def test_simplicity(self, n, t):
        lam1, lam2 = eigengap(assemble_mixed(Grid(0, 1, n), 0.7, t))
        assert lam2 - lam1 > 1e-6 * lam1

    def test_needs_two_nodes(self):
        with pytest.raises(ValueError):
            eigengap(assemble_mixed(Grid(0, 1, 1), 0.5))
