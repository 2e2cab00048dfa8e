import numpy as np
import pytest

from bileveldc.errors import (
    DomainError,
    InfeasiblePointError,
    LowerLevelInfeasibleError,
    LowerLevelUnboundedError,
)
from bileveldc.instances import EX3_DESIRED_PLAN, load_instance
from bileveldc.subsolvers import LPStatus, solve_lp
from bileveldc.value_function import (
    LowerLevel,
    duality_gap,
    eval_value,
    lower_level_solve,
    value_subgradient,
)

from oracles import lp_vertex_oracle


@pytest.fixture(scope="module")
def ex1():
    return load_instance("ex1")


@pytest.fixture(scope="module")
def ex2():
    return load_instance("ex2")


@pytest.fixture(scope="module")
def ex3():
    return load_instance("ex3")


class TestEvalValue:
    def test_ex2_value_is_zero_everywhere(self, ex2):
        # The lower objective is y1 alone and y = (0, max(0, 1 - x)) is
        # always feasible, so the optimal value is identically zero.
        for x in (0.0, 0.3, 0.5, 1.0, 1.9):
            ev = eval_value(ex2.lower_level, [x])
            assert ev.finite
            assert ev.value == pytest.approx(0.0, abs=1e-10)
            assert ev.y_opt[0] == pytest.approx(0.0, abs=1e-10)

    def test_ex1_vertex(self, ex1):
        ev = eval_value(ex1.lower_level, [2.0, 0.0])
        assert ev.finite
        assert ev.value == pytest.approx(-6.0, abs=1e-9)
        np.testing.assert_allclose(ev.y_opt, [1.5, 0.0], atol=1e-9)
        # Agreement with the vertex-enumeration oracle on the frozen point.
        sys = ex1.lower_level.system_at(np.array([2.0, 0.0]))
        val, _ = lp_vertex_oracle(ex1.c, sys.M_ub, sys.g_ub)
        assert ev.value == pytest.approx(val, abs=1e-9)

    def test_ex1_infeasible_parameter(self, ex1):
        # x = (3, 0) violates x1 + x2 <= 2, a pure-parameter row.
        ev = eval_value(ex1.lower_level, [3.0, 0.0])
        assert not ev.finite
        assert ev.value is None and ev.dual is None and ev.y_opt is None

    def test_certificates(self, ex1):
        ev = eval_value(ex1.lower_level, [1.8, 0.1])
        ll = ex1.lower_level
        x = np.array([1.8, 0.1])
        assert float(np.max(np.abs(ll.B.T @ ev.dual + ll.c))) <= 1e-8
        assert np.all(ev.dual >= 0.0)
        assert ev.value == pytest.approx(float(ll.c @ ev.y_opt), abs=1e-8)
        assert ev.value == pytest.approx(float((ll.A @ x - ll.b) @ ev.dual), abs=1e-8)

    def test_unbounded_raises(self):
        # min -y s.t. x - y <= 0: feasible for every x, unbounded below.
        ll = LowerLevel(np.array([[1.0]]), np.array([[-1.0]]), [0.0], [-1.0])
        with pytest.raises(LowerLevelUnboundedError):
            eval_value(ll, [0.0])

    def test_matches_primal_route(self, ex1, ex2, ex3):
        # The dual-form solve must agree with a plain primal LP solve.
        rng = np.random.default_rng(17)
        for inst in (ex1, ex2, ex3):
            ll = inst.lower_level
            box = inst.start_box[: inst.n]
            for _ in range(25):
                x = rng.uniform(box[:, 0], box[:, 1])
                ev = eval_value(ll, x)
                primal = solve_lp(ll.c, ll.system_at(x))
                if ev.finite:
                    assert primal.status is LPStatus.OPTIMAL
                    assert ev.value == pytest.approx(primal.objective, abs=1e-8)
                else:
                    assert primal.status is LPStatus.INFEASIBLE


class TestSubgradient:
    def test_ex2_unique_dual(self, ex2):
        # B.T lam = -c forces lam = (0, 1, 0); the x-column pairs only with
        # the first row, so the subgradient vanishes.
        ev = eval_value(ex2.lower_level, [0.7])
        np.testing.assert_allclose(ev.dual, [0.0, 1.0, 0.0], atol=1e-10)
        np.testing.assert_allclose(value_subgradient(ex2.lower_level, [0.7]), [0.0], atol=1e-10)

    def test_outside_domain(self, ex1):
        with pytest.raises(DomainError):
            value_subgradient(ex1.lower_level, [3.0, 0.0])

    @pytest.mark.parametrize("name", ["ex1", "ex2", "ex3"])
    def test_subgradient_inequality_sampled(self, name, request):
        inst = load_instance(name)
        ll = inst.lower_level
        box = inst.start_box[: inst.n]
        rng = np.random.default_rng(101)
        checked = 0
        attempts = 0
        while checked < 200 and attempts < 4000:
            attempts += 1
            x = rng.uniform(box[:, 0], box[:, 1])
            x2 = rng.uniform(box[:, 0], box[:, 1])
            ev1 = eval_value(ll, x)
            ev2 = eval_value(ll, x2)
            if not (ev1.finite and ev2.finite):
                continue
            xi = ll.A.T @ ev1.dual
            assert ev2.value >= ev1.value + float(xi @ (x2 - x)) - 1e-8
            checked += 1
        assert checked == 200


class TestLowerLevelSolve:
    def test_ex1(self, ex1):
        np.testing.assert_allclose(
            lower_level_solve(ex1.lower_level, [2.0, 0.0]), [1.5, 0.0], atol=1e-9
        )

    def test_ex2_first_component_zero(self, ex2):
        y = lower_level_solve(ex2.lower_level, [0.5])
        assert y[0] == pytest.approx(0.0, abs=1e-10)

    def test_ex3_desired_offer(self, ex3):
        # At the construction offer the desired plan is optimal: the LP
        # value equals its cost.
        x_d = np.full(5, 7.6)
        expected = float(ex3.c @ EX3_DESIRED_PLAN.reshape(-1))
        y = lower_level_solve(ex3.lower_level, x_d)
        assert float(ex3.c @ y) == pytest.approx(expected, abs=1e-8)

    def test_infeasible_parameter_raises(self, ex1):
        with pytest.raises(LowerLevelInfeasibleError):
            lower_level_solve(ex1.lower_level, [3.0, 0.0])


class TestDualityGap:
    def test_zero_on_solutions(self, ex1):
        y = lower_level_solve(ex1.lower_level, [2.0, 0.0])
        assert duality_gap(ex1.lower_level, [2.0, 0.0], y) == pytest.approx(0.0, abs=1e-9)

    def test_ex1_frozen(self, ex1):
        assert duality_gap(ex1.lower_level, [2.0, 0.0], [0.0, 0.0]) == pytest.approx(
            6.0, abs=1e-9
        )

    def test_ex2_frozen(self, ex2):
        assert duality_gap(ex2.lower_level, [0.0], [1.0, 0.0]) == pytest.approx(
            1.0, abs=1e-10
        )

    def test_infeasible_pair_rejected(self, ex1):
        with pytest.raises(InfeasiblePointError):
            duality_gap(ex1.lower_level, [2.0, 0.0], [5.0, 0.0])

    def test_nonnegative_sampled(self, ex2):
        rng = np.random.default_rng(55)
        ll = ex2.lower_level
        count = 0
        while count < 100:
            x = rng.uniform(0.0, 2.0, size=1)
            y = rng.uniform(0.0, 2.0, size=2)
            if np.max(ll.A @ x + ll.B @ y - ll.b) > 0.0:
                continue
            assert duality_gap(ll, x, y) >= -1e-9
            count += 1
