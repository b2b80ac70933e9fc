"""
Tests for the concrete operators: phi, signed power, the p-Laplacian inverse,
the Nemytskii and Hammerstein operators and the functional F.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from src.analysis.cones import check_membership, sample_direction
from src.analysis.funcspace import GridFunction, Norm, make_uniform_grid, norm
from src.analysis.operators import (
    F_eval,
    apply_T,
    duality_pairing,
    green_integral,
    green_kernel,
    hammerstein,
    nemytskii,
    phi_weight,
    plaplace_inverse,
    plaplacian,
    signed_power,
)
from src.errors import AsymmetricInputError, DomainError, InvalidExponentError
from src.models.schemas import Nonlinearity, OperatorKind, ProblemSpec


class TestPhiAndSignedPower:
    """Test the Harnack weight and the signed power."""

    def test_phi_closed_form_p2(self):
        """Test phi(t) = t - t^2 for p = 2."""
        t = np.linspace(0.0, 0.5, 11)
        np.testing.assert_allclose(phi_weight(t, 2.0), t - t ** 2, atol=1e-15)

    def test_phi_quarter(self):
        """Test phi(1/4) = 3/16 for p = 2."""
        assert phi_weight(0.25, 2.0) == pytest.approx(3.0 / 16.0, abs=1e-15)

    def test_phi_against_quadrature(self):
        """Test the closed form agrees with the defining integral for p = 3."""
        expected, _ = quad(lambda s: (1.0 - 2.0 * s) ** 0.5, 0.0, 0.3)
        assert phi_weight(0.3, 3.0) == pytest.approx(expected, abs=1e-12)

    def test_phi_domain(self):
        """Test phi is only defined on [0, 1/2]."""
        with pytest.raises(DomainError):
            phi_weight(0.6, 2.0)
        with pytest.raises(InvalidExponentError):
            phi_weight(0.2, 1.0)

    def test_signed_power_values(self):
        """Test signed_power keeps the sign of its argument."""
        assert signed_power(-8.0, 1.0 / 3.0) == pytest.approx(-2.0)
        assert signed_power(0.0, 0.5) == 0.0
        np.testing.assert_allclose(signed_power(np.array([-4.0, 9.0]), 0.5), [-2.0, 3.0])

    def test_signed_power_exponent(self):
        """Test non-positive exponents are rejected."""
        with pytest.raises(InvalidExponentError):
            signed_power(1.0, 0.0)

    @given(
        st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
        st.floats(min_value=1.1, max_value=5.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_signed_power_inverse_pair(self, x, p):
        """Property: powers p - 1 and 1/(p - 1) are inverse to each other."""
        y = signed_power(signed_power(x, p - 1.0), 1.0 / (p - 1.0))
        assert y == pytest.approx(x, rel=1e-9, abs=1e-12)


class TestPLaplaceInverse:
    """Test the exact inverse of the one-dimensional p-Laplacian."""

    def setup_method(self):
        """Set up test fixtures."""
        self.grid = make_uniform_grid(1025)
        self.one = GridFunction(self.grid, np.ones(self.grid.n))

    def test_constant_data_p2(self):
        """Test h = 1, p = 2 gives t (1 - t) / 2."""
        u = plaplace_inverse(self.one, 2.0)
        t = self.grid.nodes

        assert np.max(np.abs(u.values - t * (1 - t) / 2)) <= 1e-10
        np.testing.assert_allclose(u.deriv, 0.5 - t, atol=1e-12)

    def test_constant_data_p3(self):
        """Test h = 1, p = 3 matches its closed form."""
        u = plaplace_inverse(self.one, 3.0)
        t = self.grid.nodes
        m = np.minimum(t, 1 - t)
        expected = (2.0 / 3.0) * (0.5 ** 1.5 - (0.5 - m) ** 1.5)

        assert np.max(np.abs(u.values - expected)) <= 1e-8

    def test_output_is_exactly_symmetric(self):
        """Test the mirrored construction is symmetric to the last bit."""
        h = GridFunction.from_callable(self.grid, lambda t: 1 + np.cos(2 * np.pi * t))
        u = plaplace_inverse(h, 2.5)

        np.testing.assert_array_equal(u.values, u.values[::-1])
        assert u.values[0] == 0.0 and u.values[-1] == 0.0

    def test_asymmetric_data_rejected(self):
        """Test right-hand sides not symmetric about 1/2 are refused."""
        h = GridFunction.from_callable(self.grid, lambda t: t)

        with pytest.raises(AsymmetricInputError) as exc_info:
            plaplace_inverse(h, 2.0)
        assert exc_info.value.defect > 0

    def test_inverse_of_laplacian(self):
        """Test plaplacian undoes plaplace_inverse away from the ends."""
        h = GridFunction.from_callable(self.grid, lambda t: 1 + np.cos(2 * np.pi * t))
        back = plaplacian(plaplace_inverse(h, 2.0), 2.0)

        np.testing.assert_allclose(back.values[5:-5], h.values[5:-5], atol=1e-4)

    def test_laplacian_then_inverse(self):
        """Test plaplace_inverse undoes plaplacian on sin(pi t)."""
        u = GridFunction.from_callable(
            self.grid, lambda t: np.sin(np.pi * t), lambda t: np.pi * np.cos(np.pi * t)
        )
        h = plaplacian(u, 2.0)
        symmetric = GridFunction(self.grid, 0.5 * (h.values + h.values[::-1]))

        np.testing.assert_allclose(plaplace_inverse(symmetric, 2.0).values, u.values, atol=1e-4)


class TestKernelOperators:
    """Test the Green kernel and the Hammerstein operator."""

    def setup_method(self):
        """Set up test fixtures."""
        self.grid = make_uniform_grid(1025)

    def test_green_kernel(self):
        """Test k is symmetric and vanishes on the boundary."""
        assert green_kernel(0.3, 0.6) == pytest.approx(0.3 * 0.4)
        assert green_kernel(0.6, 0.3) == green_kernel(0.3, 0.6)
        assert green_kernel(0.0, 0.5) == 0.0

    def test_green_integral_of_one(self):
        """Test the kernel integral of f = 1 is t (1 - t) / 2."""
        t = self.grid.nodes
        values = green_integral(np.ones(self.grid.n), self.grid)

        np.testing.assert_allclose(values, t * (1 - t) / 2, atol=1e-14)
        assert values[0] == 0.0
        assert abs(values[-1]) <= 1e-16

    def test_hammerstein_against_quad(self):
        """Test the Hammerstein operator against adaptive quadrature."""
        f = Nonlinearity.kernel_example()
        u = GridFunction.from_callable(self.grid, lambda t: 5 * np.sin(np.pi * t))
        Tu = hammerstein(f, u)

        t0 = 0.25
        integrand = lambda s: green_kernel(t0, s) * f.f0(5 * math.sin(math.pi * s))
        expected = quad(integrand, 0, t0)[0] + quad(integrand, t0, 1)[0]
        assert Tu.values[256] == pytest.approx(expected, rel=1e-8)

    def test_nemytskii_is_pointwise(self):
        """Test N_f(u, u') evaluates f node by node."""
        f = Nonlinearity.plaplacian_example()
        u = GridFunction.from_callable(self.grid, lambda t: t)
        du = GridFunction.from_callable(self.grid, lambda t: -2 * np.ones_like(t))

        np.testing.assert_allclose(nemytskii(f, u, du).values, self.grid.nodes ** 2 * (1 + 1 / 3))

    @given(st.floats(0, 100), st.floats(-1e3, 1e3))
    @settings(max_examples=200, deadline=None)
    def test_nemytskii_even_in_derivative(self, x, y):
        """Property: the p-Laplacian nonlinearity is even in its second argument."""
        f = Nonlinearity.plaplacian_example()
        assert f.evaluate(x, y) == f.evaluate(x, -y)


class TestFunctionalF:
    """Test the duality pairing, the dispatching operator and F."""

    def setup_method(self):
        """Set up test fixtures."""
        self.grid = make_uniform_grid(257)
        self.kernel = ProblemSpec(operator=OperatorKind.KERNEL, nonlinearity=Nonlinearity.kernel_example(), n=257)
        self.plap = ProblemSpec(
            operator=OperatorKind.PLAPLACIAN,
            nonlinearity=Nonlinearity.plaplacian_example(),
            r=0.1,
            R=300.0,
            n=257,
        )
        self.u = GridFunction.from_callable(
            self.grid, lambda t: np.sin(np.pi * t), lambda t: np.pi * np.cos(np.pi * t)
        )

    def test_pairing_is_norm_power(self):
        """Test <Ju, u> = |u|_{1,p}^p."""
        assert duality_pairing(self.u, self.u, 3.0) == pytest.approx(norm(self.u, Norm.w1p(3.0)) ** 3, rel=1e-12)

    def test_F_vanishes_on_diagonal(self):
        """Test F(u, u, w) = 0 for both problems."""
        w = GridFunction.from_callable(self.grid, lambda t: t * (1 - t), lambda t: 1 - 2 * t)
        assert F_eval(self.kernel, self.u, self.u, w) == 0.0
        assert F_eval(self.plap, self.u, self.u, w) == 0.0

    def test_F_kernel_is_l2_pairing(self):
        """Test the kernel F is the L2 pairing of v - u with w."""
        v = 2.0 * self.u
        assert F_eval(self.kernel, self.u, v, self.u) == pytest.approx(0.5, abs=1e-9)

    def test_apply_T_dispatch(self):
        """Test T is the Hammerstein operator for the kernel problem."""
        np.testing.assert_array_equal(
            apply_T(self.kernel, self.u).values,
            hammerstein(self.kernel.nonlinearity, self.u).values,
        )

    def test_apply_T_plaplacian_stores_derivative(self):
        """Test T of the p-Laplacian problem is symmetric with a stored derivative."""
        Tu = apply_T(self.plap, self.u)

        assert Tu.deriv is not None
        np.testing.assert_array_equal(Tu.values, Tu.values[::-1])

    def test_T_preserves_both_cones(self):
        """Test T maps sampled cone directions, scaled up, back into the cone."""
        for prob, scale in ((self.kernel, 100.0), (self.plap, 5.0)):
            cone = prob.cone_spec()
            for index in range(10):
                v = sample_direction(cone, prob.grid, index, seed=0)
                report = check_membership(apply_T(prob, scale * v), cone)

                assert report.overall, (prob.operator, index, report.failed)
