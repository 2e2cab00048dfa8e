import numpy as np
import pytest

from bileveldc.errors import InfeasiblePolyhedronError, NotSPDError
from bileveldc.subsolvers import (
    AffineSystem,
    LPStatus,
    QPStatus,
    project_polyhedron,
    solve_lp,
    solve_qp,
)

from oracles import (
    lp_vertex_oracle,
    qp_active_set_oracle,
    random_bounded_lp,
    random_spd_qp,
)


def box(lo, hi):
    n = len(lo)
    return AffineSystem(
        np.vstack([np.eye(n), -np.eye(n)]),
        np.concatenate([hi, -np.asarray(lo, float)]),
    )


class TestAffineSystem:
    def test_row_mismatch_rejected(self):
        with pytest.raises(ValueError):
            AffineSystem(np.eye(2), np.zeros(3))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            AffineSystem(np.array([[np.inf, 0.0]]), np.zeros(1))

    def test_violation_and_contains(self):
        sys = box([0.0, 0.0], [1.0, 1.0])
        assert sys.contains(np.array([0.5, 0.5]))
        assert not sys.contains(np.array([1.5, 0.5]))
        assert sys.violation(np.array([1.5, 0.5])) == pytest.approx(0.5)


class TestSolveLP:
    def test_known_vertex(self):
        # min -4 y1 + y2 over y1 - y2 <= 1.5, y2 <= 0, y >= 0.
        sys = AffineSystem(
            np.array([[1.0, -1.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]),
            np.array([1.5, 0.0, 0.0, 0.0]),
        )
        cost = np.array([-4.0, 1.0])
        sol = solve_lp(cost, sys)
        assert sol.status is LPStatus.OPTIMAL
        np.testing.assert_allclose(sol.x, [1.5, 0.0], atol=1e-10)
        assert sol.objective == pytest.approx(-6.0, abs=1e-10)
        # Matches the enumeration oracle.
        val, _ = lp_vertex_oracle(cost, sys.M_ub, sys.g_ub)
        assert sol.objective == pytest.approx(val, abs=1e-10)

    def test_origin_vertex(self):
        sol = solve_lp(np.array([1.0]), AffineSystem(np.array([[-1.0]]), np.zeros(1)))
        assert sol.status is LPStatus.OPTIMAL
        assert sol.x[0] == pytest.approx(0.0, abs=1e-12)
        assert sol.objective == pytest.approx(0.0, abs=1e-12)

    def test_infeasible(self):
        sys = AffineSystem(np.array([[1.0], [-1.0]]), np.array([-1.0, -2.0]))
        assert solve_lp(np.array([1.0]), sys).status is LPStatus.INFEASIBLE

    def test_unbounded(self):
        sys = AffineSystem(np.array([[-1.0]]), np.zeros(1))
        assert solve_lp(np.array([-1.0]), sys).status is LPStatus.UNBOUNDED

    def test_equality_rows(self):
        # min x1 + x2 s.t. x1 + x2 == 1, x >= 0 -> value 1.
        sys = AffineSystem(
            -np.eye(2), np.zeros(2), M_eq=np.array([[1.0, 1.0]]), g_eq=np.array([1.0])
        )
        sol = solve_lp(np.array([1.0, 1.0]), sys)
        assert sol.status is LPStatus.OPTIMAL
        assert sol.objective == pytest.approx(1.0, abs=1e-10)
        # Dual stationarity includes the equality multiplier.
        resid = np.array([1.0, 1.0]) + sys.M_ub.T @ sol.dual_ub + sys.M_eq.T @ sol.dual_eq
        np.testing.assert_allclose(resid, 0.0, atol=1e-9)

    def test_redundant_equality_rows(self):
        sys = AffineSystem(
            -np.eye(2),
            np.zeros(2),
            M_eq=np.array([[1.0, 1.0], [2.0, 2.0]]),
            g_eq=np.array([1.0, 2.0]),
        )
        sol = solve_lp(np.array([0.0, 1.0]), sys)
        assert sol.status is LPStatus.OPTIMAL
        assert sol.objective == pytest.approx(0.0, abs=1e-10)

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        cost, M, g, _ = random_bounded_lp(rng)
        sys = AffineSystem(M, g)
        a = solve_lp(cost, sys)
        b = solve_lp(cost, sys)
        assert a.basis == b.basis
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.dual_ub, b.dual_ub)

    def test_random_against_vertex_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            cost, M, g, _ = random_bounded_lp(rng)
            sys = AffineSystem(M, g)
            sol = solve_lp(cost, sys)
            assert sol.status is LPStatus.OPTIMAL
            val, _ = lp_vertex_oracle(cost, M, g)
            assert sol.objective == pytest.approx(val, abs=1e-8)
            _check_lp_certificates(cost, sys, sol)


def _check_lp_certificates(cost, sys, sol):
    """Primal/dual feasibility, complementary slackness, strong duality."""
    assert sys.violation(sol.x) <= 1e-9
    stat = cost + sys.M_ub.T @ sol.dual_ub
    dual_obj = -float(sys.g_ub @ sol.dual_ub)
    if sys.n_eq:
        stat = stat + sys.M_eq.T @ sol.dual_eq
        dual_obj -= float(sys.g_eq @ sol.dual_eq)
    assert float(np.max(np.abs(stat))) <= 1e-9 * max(1.0, np.abs(cost).max())
    assert np.all(sol.dual_ub >= 0.0)
    slack = sys.g_ub - sys.M_ub @ sol.x
    assert float(np.max(np.abs(sol.dual_ub * slack), initial=0.0)) <= 1e-8
    assert sol.objective == pytest.approx(dual_obj, abs=1e-8)


class TestSolveQP:
    def test_clamped_projection(self):
        sol = solve_qp(
            np.array([[1.0]]),
            np.array([-3.0]),
            AffineSystem(np.array([[1.0]]), np.array([1.0])),
        )
        assert sol.status is QPStatus.OPTIMAL
        assert sol.x[0] == pytest.approx(1.0, abs=1e-10)

    def test_componentwise_clamp(self):
        sol = solve_qp(np.eye(2), np.array([-2.0, 3.0]), box([-1, -1], [1, 1]))
        np.testing.assert_allclose(sol.x, [1.0, -1.0], atol=1e-10)

    def test_not_spd_rejected(self):
        with pytest.raises(NotSPDError):
            solve_qp(np.array([[0.0]]), np.zeros(1), box([-1], [1]))
        with pytest.raises(NotSPDError):
            solve_qp(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros(2), box([-1, -1], [1, 1]))

    def test_infeasible(self):
        sys = AffineSystem(np.array([[1.0], [-1.0]]), np.array([-1.0, -2.0]))
        assert solve_qp(np.eye(1), np.zeros(1), sys).status is QPStatus.INFEASIBLE

    def test_random_against_enumeration_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(120):
            Q, q, M, g, x_feas = random_spd_qp(rng)
            sys = AffineSystem(M, g)
            sol = solve_qp(Q, q, sys, x0=x_feas)
            assert sol.status is QPStatus.OPTIMAL
            val, _ = qp_active_set_oracle(Q, q, M, g)
            assert sol.objective == pytest.approx(val, abs=1e-6)
            _check_qp_kkt(Q, q, sys, sol)

    def test_start_hint_matches_cold_start(self):
        rng = np.random.default_rng(11)
        Q, q, M, g, x_feas = random_spd_qp(rng)
        sys = AffineSystem(M, g)
        warm = solve_qp(Q, q, sys, x0=x_feas)
        cold = solve_qp(Q, q, sys)
        np.testing.assert_allclose(warm.x, cold.x, atol=1e-8)


def _check_qp_kkt(Q, q, sys, sol):
    grad = Q @ sol.x + q + sys.M_ub.T @ sol.multipliers
    if sys.n_eq:
        grad = grad + sys.M_eq.T @ sol.multipliers_eq
    assert float(np.max(np.abs(grad))) <= 1e-8
    assert np.all(sol.multipliers >= 0.0)
    slack = sys.g_ub - sys.M_ub @ sol.x
    assert float(np.max(np.abs(sol.multipliers * slack), initial=0.0)) <= 1e-8
    assert sys.violation(sol.x) <= 1e-9


class TestProjection:
    def test_identity_when_feasible(self):
        sys = box([0.0, 0.0], [1.0, 1.0])
        w0 = np.array([0.25, 0.75])
        np.testing.assert_allclose(project_polyhedron(w0, sys), w0, atol=1e-10)

    def test_halfline(self):
        sys = AffineSystem(np.array([[-1.0]]), np.zeros(1))
        assert project_polyhedron(np.array([-1.0]), sys)[0] == pytest.approx(0.0, abs=1e-10)

    def test_simplex_corner(self):
        # (2, 2) onto {x1 + x2 <= 2, x >= 0}: symmetry forces (1, 1).
        sys = AffineSystem(
            np.array([[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]),
            np.array([2.0, 0.0, 0.0]),
        )
        np.testing.assert_allclose(
            project_polyhedron(np.array([2.0, 2.0]), sys), [1.0, 1.0], atol=1e-9
        )

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            Q, q, M, g, _ = random_spd_qp(rng)
            sys = AffineSystem(M, g)
            w0 = rng.normal(size=sys.n_vars) * 3.0
            p1 = project_polyhedron(w0, sys)
            p2 = project_polyhedron(p1, sys)
            assert float(np.linalg.norm(p2 - p1)) <= 1e-9

    def test_empty_polyhedron(self):
        sys = AffineSystem(np.array([[1.0], [-1.0]]), np.array([-1.0, -2.0]))
        with pytest.raises(InfeasiblePolyhedronError):
            project_polyhedron(np.zeros(1), sys)
