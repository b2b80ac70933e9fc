"""
Unit tests for problem models and validation logic.
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.models.schemas import (
    KERNEL_DEFAULT_R_CAP,
    ConeKind,
    ConeSpec,
    Mode,
    Nonlinearity,
    NonlinearityKind,
    OperatorKind,
    ProblemSpec,
    Tolerances,
)


class TestEnums:
    """Test cases for the string enums."""

    def test_enum_values(self):
        """Test that all expected enum values are present."""
        assert OperatorKind.PLAPLACIAN == "plaplacian-bvp"
        assert OperatorKind.KERNEL == "hammerstein-kernel"
        assert ConeKind.KERNEL == "kernel-cone"
        assert Mode.MINIMIZE == "minimize"
        assert NonlinearityKind.TABULATED == "tabulated"


class TestNonlinearity:
    """Test cases for the Nonlinearity model."""

    def test_kernel_example(self):
        """Test f(x) = 1e-2 x^2 + 2.5e-3 x + 1."""
        f = Nonlinearity.kernel_example()

        assert f.evaluate(2.0, 0.0) == pytest.approx(0.04 + 0.005 + 1.0)
        assert f.f_inf(2.0) == f.f0(2.0)

    def test_plaplacian_example(self):
        """Test f(x, y) = x^2 (1 + 1/(1 + |y|)) and its limits."""
        f = Nonlinearity.plaplacian_example()

        assert f.f0(3.0) == pytest.approx(18.0)
        assert f.f_inf(3.0) == pytest.approx(9.0)
        assert f.evaluate(3.0, -1.0) == pytest.approx(13.5)
        assert f.f0(3.0) != f.f_inf(3.0)

    def test_array_evaluation(self):
        """Test vectorized evaluation keeps the input shape."""
        f = Nonlinearity.polynomial([1.0, 2.0])
        out = f.evaluate(np.array([0.0, 1.0, 2.0]), np.zeros(3))

        np.testing.assert_allclose(out, [1.0, 3.0, 5.0])

    def test_tabulated_reads_absolute_y(self):
        """Test tables on y >= 0 are read at |y| and clamped to their box."""
        f = Nonlinearity.tabulate(lambda x, y: x + y, [0.0, 1.0, 2.0], [0.0, 1.0, 2.0])

        assert f.evaluate(1.0, -1.0) == pytest.approx(2.0)
        assert f.evaluate(5.0, 0.0) == pytest.approx(2.0)
        assert f.f_inf(1.0) == pytest.approx(3.0)

    def test_tabulated_shape_mismatch(self):
        """Test the table must match its nodes."""
        with pytest.raises(ValidationError):
            Nonlinearity(kind="tabulated", x_nodes=[0, 1], y_nodes=[0, 1], table=[[0, 1, 2], [1, 2, 3]])

    def test_tabulated_needs_table(self):
        """Test tabulated nonlinearities require nodes and values."""
        with pytest.raises(ValidationError):
            Nonlinearity(kind="tabulated")

    def test_tabulated_equality(self):
        """Test equal tables compare equal despite separate interpolators."""
        a = Nonlinearity.tabulate(lambda x, y: x * y, [0.0, 1.0], [0.0, 1.0])
        b = Nonlinearity.tabulate(lambda x, y: x * y, [0.0, 1.0], [0.0, 1.0])

        assert a == b

    def test_unknown_field_rejected(self):
        """Test extra keys are forbidden."""
        with pytest.raises(ValidationError):
            Nonlinearity(kind="quadratic", a3=1.0)


class TestProblemSpec:
    """Test cases for the ProblemSpec model."""

    def setup_method(self):
        """Set up test fixtures."""
        self.valid = {
            "operator": "plaplacian-bvp",
            "nonlinearity": {"kind": "power_rational"},
            "p": 2.0,
            "r": 0.1,
            "R": 300.0,
        }

    def test_valid_problem(self):
        """Test creation of a valid p-Laplacian problem."""
        prob = ProblemSpec(**self.valid)

        assert prob.n == 1025
        assert prob.beta == 0.25
        assert prob.mode == Mode.MAXIMIZE
        assert prob.effective_R() == 300.0
        assert prob.cone_spec() == ConeSpec(kind=ConeKind.PLAPLACIAN, p=2.0, tolerance=1e-9)

    def test_annulus_order(self):
        """Test r >= R is rejected with an annulus message."""
        data = dict(self.valid, r=5.0, R=2.0)

        with pytest.raises(ValidationError) as exc_info:
            ProblemSpec(**data)
        assert "annulus" in str(exc_info.value)

    @pytest.mark.parametrize("n", [2, 1024, 1])
    def test_grid_size(self, n):
        """Test even or tiny grids are rejected."""
        with pytest.raises(ValidationError):
            ProblemSpec(**dict(self.valid, n=n))

    def test_exponent(self):
        """Test p <= 1 is rejected."""
        with pytest.raises(ValidationError):
            ProblemSpec(**dict(self.valid, p=1.0))

    def test_beta_range(self):
        """Test beta must lie strictly inside (0, 1/2)."""
        with pytest.raises(ValidationError):
            ProblemSpec(**dict(self.valid, beta=0.5))

    def test_infinite_radius_plaplacian(self):
        """Test R = inf needs R_cap for the p-Laplacian problem."""
        with pytest.raises(ValidationError):
            ProblemSpec(**dict(self.valid, R=math.inf))

        prob = ProblemSpec(**dict(self.valid, R=math.inf, R_cap=1e4))
        assert prob.effective_R() == 1e4

    def test_kernel_default_cap(self):
        """Test the kernel problem caps an infinite R at its default."""
        prob = ProblemSpec(operator="hammerstein-kernel", nonlinearity={"kind": "quadratic", "a0": 1.0})

        assert prob.effective_R() == KERNEL_DEFAULT_R_CAP
        assert prob.cone_spec().norm.label() == "sup"

    def test_with_updates_validates(self):
        """Test with_updates returns a validated copy."""
        prob = ProblemSpec(**self.valid)

        assert prob.with_updates(r=1.0).r == 1.0
        assert prob.r == 0.1
        with pytest.raises(ValidationError):
            prob.with_updates(r=500.0)

    def test_tolerances_positive(self):
        """Test tolerances that must be positive reject zero."""
        with pytest.raises(ValidationError):
            Tolerances(residual=0.0)
