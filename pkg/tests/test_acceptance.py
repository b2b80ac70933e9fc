"""
End-to-end scenarios at full grid resolution (n = 1025).

Marked slow; run them alone with ``pytest -m slow``.
"""
import math
from pathlib import Path

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from src.analysis.cones import check_membership, sample_directions
from src.analysis.funcspace import GridFunction, Norm, integrate, make_uniform_grid, norm
from src.analysis.operators import phi_weight, plaplace_inverse
from src.cli.config import parse_config
from src.models.schemas import ConeKind, ConeSpec, Mode, Nonlinearity, OperatorKind, ProblemSpec
from src.solver.nehari import CriticalKind, energy_profile, nehari_solve, picard_oracle, scan_profile
from src.verification.hypotheses import Verdict, check_H1, check_H2, check_H3, estimate_cp
from src.verification.kernel_estimates import certify_kernel_intervals

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

pytestmark = pytest.mark.slow


class TestKernelProblem:
    """Test the Green-kernel Hammerstein problem end to end."""

    def setup_method(self):
        """Set up test fixtures."""
        self.prob = parse_config(CONFIGS / "kernel_example.yaml").problem
        self.cone = self.prob.cone_spec()

    def test_interval_certification(self):
        """Test 50 directions satisfy every certified coefficient, discriminant and root bound."""
        report = certify_kernel_intervals(direction_count=50, seed=0, n=1025)

        assert report.verdict == Verdict.SAMPLED_PASS
        assert report.sample_count == 50
        assert min(report.witnesses["min_box_slack"]) >= 0
        assert report.witnesses["min_discriminant"] > 4e-4
        assert report.witnesses["max_quadrature_gap"] <= (1 / 1024) ** 2

    def test_census(self):
        """Test each direction has one local minimum and a unique global maximum in (10, 1e7)."""
        for v in sample_directions(self.cone, 50, seed=0, grid=self.prob.grid):
            census = scan_profile(self.prob, v, 0.0, self.prob.effective_R()).critical_points

            assert [point.kind for point in census] == [CriticalKind.MIN, CriticalKind.MAX]
            assert 10 < census[1].t < 1e7

    def test_fixed_point(self):
        """Test the solve from the tent converges to a cone member at sup residual 1e-8."""
        v0 = sample_directions(self.cone, 1, seed=0, grid=self.prob.grid)[0]
        report = nehari_solve(self.prob, self.cone, v0)

        assert report.converged
        assert report.residual_sup <= 1e-8 * max(1.0, report.norm_u)
        assert report.membership.overall

    def test_picard_agrees_with_lower_fixed_point(self):
        """Test Picard from zero and the minimize-mode solve on (0, 10) find the same solution."""
        lower = self.prob.with_updates(mode=Mode.MINIMIZE, R=10.0)
        v0 = sample_directions(self.cone, 1, seed=0, grid=lower.grid)[0]
        report = nehari_solve(lower, self.cone, v0)
        picard = picard_oracle(lower, GridFunction.zeros(lower.grid))

        assert report.converged and picard.converged
        assert norm(picard.u - report.u, Norm.sup()) <= 1e-6


class TestPLaplacianProblem:
    """Test the p-Laplacian problem with f(x, y) = x^2 (1 + 1/(1 + |y|))."""

    def setup_method(self):
        """Set up test fixtures."""
        self.prob = parse_config(CONFIGS / "plaplacian_example.yaml").problem
        self.f = self.prob.nonlinearity

    def test_nonlinearity_conditions(self):
        """Test (H1), (H2) and (H3) hold on r = 0.1, R = 300, beta = 1/4."""
        assert check_H1(self.f, samples=200, seed=0).holds
        assert check_H2(self.f, 2.0, 0.1, 300.0, 0.25).verdict == Verdict.PASS
        assert check_H3(self.f, 2.0, 300.0, samples=200, seed=0).holds

    def test_solution_in_annulus(self):
        """Test the solve converges with W1p residual 1e-6 and 0.1 < |u| < 300."""
        report = nehari_solve(self.prob)

        assert report.converged
        assert report.residual_w1p <= 1e-6
        assert 0.1 < report.norm_u < 300.0
        assert report.membership.overall


class TestOperatorAccuracy:
    """Test operator exactness and constants at full resolution."""

    def setup_method(self):
        """Set up test fixtures."""
        self.grid = make_uniform_grid(1025)

    def test_inverse_of_constant(self):
        """Test J^{-1}(1) = t (1 - t)/2 for p = 2."""
        u = plaplace_inverse(GridFunction(self.grid, np.ones(self.grid.n)), 2.0)
        t = self.grid.nodes

        assert np.max(np.abs(u.values - t * (1 - t) / 2)) <= 1e-10

    def test_inverse_of_constant_p3(self):
        """Test the p = 3 closed form (2/3)((1/2)^{3/2} - |t - 1/2|^{3/2})."""
        u = plaplace_inverse(GridFunction(self.grid, np.ones(self.grid.n)), 3.0)
        t = self.grid.nodes
        expected = (2.0 / 3.0) * (0.5 ** 1.5 - np.abs(t - 0.5) ** 1.5)

        assert np.max(np.abs(u.values - expected)) <= 1e-8

    def test_cp(self):
        """Test c_2 is within 1e-3 of 1/pi."""
        assert estimate_cp(2.0, n=1025).value == pytest.approx(1.0 / math.pi, abs=1e-3)

    def test_harnack_suite(self):
        """Test 100 admissible right-hand sides give cone members satisfying the Harnack bound."""
        m = self.grid.midpoint_index
        for index in range(100):
            p = 2.0 if index % 2 == 0 else 3.0
            rng = np.random.default_rng(index)
            left = np.cumsum(rng.uniform(0.0, 1.0, m + 1))
            h = np.concatenate((left, left[-2::-1])) / left[-1]

            u = plaplace_inverse(GridFunction(self.grid, h), p)
            weight = phi_weight(self.grid.distance_to_boundary[: m + 1], p)
            margin = u.values[: m + 1] - weight * norm(u, Norm.w1p(p))

            assert np.min(margin) >= -1e-10
            assert check_membership(u, ConeSpec(kind=ConeKind.PLAPLACIAN, p=p)).overall


class TestVariationalRecovery:
    """Test the radial energy reduces to the classical energy when f depends on x only."""

    def test_energy_matches_variational_functional(self):
        """Test E(v)(t) = t^2/2 |v|^2 - integral of G(t v) for p = 2, f = x^2 + x/2."""
        coefficients = [0.0, 0.5, 1.0]
        prob = ProblemSpec(
            operator=OperatorKind.PLAPLACIAN,
            nonlinearity=Nonlinearity.polynomial(coefficients),
            p=2.0,
            r=0.1,
            R=300.0,
        )
        antiderivative = npoly.polyint(coefficients)
        t_samples = np.linspace(0.1, 20.0, 20)

        for v in sample_directions(prob.cone_spec(), 10, seed=0, grid=prob.grid):
            profile = energy_profile(prob, v, t_samples)
            size = norm(v, Norm.w1p(2.0))
            for t, energy in zip(t_samples, profile.energy):
                G = GridFunction(prob.grid, npoly.polyval(t * v.values, antiderivative))
                classical = 0.5 * t * t * size ** 2 - integrate(G)

                assert abs(energy - classical) <= 1e-6 * max(1.0, 0.5 * t * t * size ** 2)
