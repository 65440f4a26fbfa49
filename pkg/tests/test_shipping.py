import itertools
import json

import numpy as np
import pytest

from shipcast.lp import simplex_solve
from shipcast.shipping import (
    ShippingInstance,
    ShippingMode,
    allocate,
    baseline_all_standard,
    baseline_uniform,
    build_shipping_lp,
    evaluate_plan,
    oracle_enumerate,
)


def reference_instance(total_demand=1918, budget=5500.0, alpha=0.10):
    return ShippingInstance(
        modes=(
            ShippingMode("First Class", 2.0, 1.5, 560, is_fast=True),
            ShippingMode("Same Day", 1.0, 2.5, 240, is_fast=True),
            ShippingMode("Second Class", 3.0, 1.0, 800, is_fast=False),
            ShippingMode("Standard Class", 4.0, 0.8, 1200, is_fast=False),
        ),
        total_demand=total_demand,
        budget=budget,
        min_fast_share=alpha,
    )


def brute_force(inst):
    """Dumb full cartesian product over all modes; cross-checks the
    interval-pruned oracle on small instances."""
    modes = inst.sorted_modes()
    best = None
    for combo in itertools.product(*[range(m.capacity + 1) for m in modes]):
        if sum(combo) != inst.total_demand:
            continue
        cost = sum(m.unit_cost * v for m, v in zip(modes, combo))
        if cost > inst.budget + 1e-9:
            continue
        fast = sum(v for m, v in zip(modes, combo) if m.is_fast)
        if fast < inst.service_floor():
            continue
        obj = sum(m.avg_delivery_days * v for m, v in zip(modes, combo))
        if best is None or obj < best[0]:
            best = (obj, combo)
    return best


def random_instance(rng, max_modes=4, max_capacity=30, feasible_bias=True):
    k = int(rng.integers(2, max_modes + 1))
    modes = tuple(
        ShippingMode(
            id=f"mode{j}",
            avg_delivery_days=round(float(rng.uniform(0.5, 6.0)), 2),
            unit_cost=round(float(rng.uniform(0.1, 3.0)), 2),
            capacity=int(rng.integers(0, max_capacity + 1)),
            is_fast=bool(rng.integers(0, 2)),
        )
        for j in range(k)
    )
    cap = sum(m.capacity for m in modes)
    if feasible_bias:
        demand = int(rng.integers(0, max(cap, 1)))
        budget = round(float(rng.uniform(1.0, 2.5)) * demand + 5.0, 2)
        alpha = float(rng.choice([0.0, 0.05, 0.1]))
    else:
        demand = int(rng.integers(0, cap + 5))
        budget = round(float(rng.uniform(0.0, 1.2)) * demand, 2)
        alpha = float(rng.choice([0.0, 0.1, 0.3, 0.6]))
    return ShippingInstance(modes, demand, budget, alpha)


class TestInstanceValidation:
    def test_duplicate_ids_rejected(self):
        m = ShippingMode("x", 1.0, 1.0, 5)
        with pytest.raises(ValueError):
            ShippingInstance((m, m), 1, 10.0, 0.0)

    def test_alpha_range_checked(self):
        m = ShippingMode("x", 1.0, 1.0, 5)
        with pytest.raises(ValueError):
            ShippingInstance((m,), 1, 10.0, 1.5)

    def test_service_floor_rounds_up(self):
        inst = reference_instance()
        assert inst.service_floor() == 192  # ceil(0.10 * 1918)

    def test_service_floor_float_guard(self):
        # 0.1 * 30 = 3.0000000000000004 in floats; the floor must stay 3
        m = ShippingMode("x", 1.0, 1.0, 50, is_fast=True)
        inst = ShippingInstance((m,), 30, 100.0, 0.1)
        assert inst.service_floor() == 3

    def test_json_round_trip(self):
        inst = reference_instance()
        back = ShippingInstance.from_json(inst.to_json())
        assert back == inst
        doc = json.loads(inst.to_json())
        assert {"modes", "D_total", "B", "alpha"} <= set(doc)
        assert {"id", "t", "c", "K", "is_fast"} == set(doc["modes"][0])


class TestBuildLp:
    def test_reference_shape(self):
        p = build_shipping_lp(reference_instance())
        assert p.n_vars == 4
        assert len(p.row_senses) == 3  # demand, budget, fast floor
        # id-sorted variables: First, Same Day, Second, Standard
        assert np.array_equal(p.c, [2.0, 1.0, 3.0, 4.0])
        assert np.array_equal(p.upper, [560.0, 240.0, 800.0, 1200.0])
        assert np.all(p.integrality)

    def test_zero_alpha_drops_fast_row(self):
        p = build_shipping_lp(reference_instance(alpha=0.0))
        assert len(p.row_senses) == 2

    def test_zero_demand_solvable(self):
        inst = reference_instance(total_demand=0)
        res = allocate(inst)
        assert res.status == "optimal"
        assert all(v == 0 for v in res.plan.x.values())
        assert res.plan.objective == 0.0


class TestAllocateReference:
    def test_optimal_plan_values(self):
        res = allocate(reference_instance())
        assert res.status == "optimal"
        plan = res.plan
        assert plan.x == {
            "First Class": 560,
            "Same Day": 240,
            "Second Class": 800,
            "Standard Class": 318,
        }
        assert plan.objective == 5032.0
        assert plan.total_cost == pytest.approx(2494.40, abs=1e-9)
        assert plan.total_cost <= 5500.0
        assert plan.fast_share >= 0.10
        assert plan.fast_share == pytest.approx(800 / 1918)
        assert plan.constraints.overall_feasible

    def test_oracle_agrees(self):
        res = allocate(reference_instance())
        orc = oracle_enumerate(reference_instance())
        assert orc.status == "optimal"
        assert orc.plan.x == res.plan.x
        assert orc.plan.objective == res.plan.objective == 5032.0

    def test_average_days_per_unit(self):
        plan = allocate(reference_instance()).plan
        assert plan.objective / 1918 == pytest.approx(2.62, abs=0.01)

    def test_over_capacity_demand_infeasible(self):
        res = allocate(reference_instance(total_demand=3000))
        assert res.status == "infeasible"
        assert "capacity" in res.binding_constraints

    def test_zero_budget_infeasible(self):
        res = allocate(reference_instance(budget=0.0))
        assert res.status == "infeasible"
        assert "budget" in res.binding_constraints

    def test_single_mode(self):
        inst = ShippingInstance(
            (ShippingMode("only", 2.5, 1.0, 10),), 10, 100.0, 0.0
        )
        res = allocate(inst)
        assert res.plan.x == {"only": 10}
        assert res.plan.objective == 25.0


class TestEvaluatePlan:
    def test_published_allocation_audit(self):
        inst = reference_instance()
        plan = evaluate_plan(
            {"First Class": 443, "Same Day": 155, "Second Class": 561, "Standard Class": 759},
            inst,
        )
        assert plan.objective == 5760.0  # 443*2 + 155*1 + 561*3 + 759*4
        assert plan.total_cost == pytest.approx(2220.20, abs=1e-9)
        assert plan.fast_share == pytest.approx(598 / 1918)
        assert round(plan.fast_share * 100, 1) == 31.2
        assert plan.constraints.overall_feasible

    def test_all_zero_plan_violates_demand(self):
        inst = reference_instance()
        plan = evaluate_plan({m.id: 0 for m in inst.modes}, inst)
        assert not plan.constraints.overall_feasible
        assert "demand" in plan.constraints.violated()

    def test_capacity_violation_flagged_with_negative_slack(self):
        inst = reference_instance(total_demand=900)
        plan = evaluate_plan(
            {"First Class": 600, "Same Day": 0, "Second Class": 300, "Standard Class": 0},
            inst,
        )
        checks = {c.name: c for c in plan.constraints.checks}
        assert not checks["capacity[First Class]"].satisfied
        assert checks["capacity[First Class]"].slack == -40.0

    def test_fractional_allocation_rejected(self):
        inst = reference_instance()
        with pytest.raises(ValueError):
            evaluate_plan(
                {"First Class": 0.5, "Same Day": 0, "Second Class": 0, "Standard Class": 0},
                inst,
            )

    def test_negative_allocation_rejected(self):
        inst = reference_instance()
        with pytest.raises(ValueError):
            evaluate_plan(
                {"First Class": -1, "Same Day": 0, "Second Class": 0, "Standard Class": 0},
                inst,
            )

    def test_missing_mode_rejected(self):
        inst = reference_instance()
        with pytest.raises(ValueError):
            evaluate_plan({"First Class": 1918}, inst)


class TestBaselines:
    def test_all_standard_reference_values(self):
        plan = baseline_all_standard(reference_instance())
        assert plan.x["Standard Class"] == 1918
        assert plan.objective == 7672.0  # 1918 * 4
        assert plan.fast_share == 0.0
        violated = plan.constraints.violated()
        assert "fast_service" in violated
        assert "capacity[Standard Class]" in violated
        budget_check = [c for c in plan.constraints.checks if c.name == "budget"][0]
        assert budget_check.satisfied

    def test_all_standard_zero_demand_feasible(self):
        plan = baseline_all_standard(reference_instance(total_demand=0))
        assert plan.constraints.overall_feasible
        assert plan.objective == 0.0

    def test_all_standard_feasible_when_capacity_suffices(self):
        inst = reference_instance(total_demand=1000, alpha=0.0)
        plan = baseline_all_standard(inst)
        assert plan.constraints.overall_feasible

    def test_uniform_reference_allocation(self):
        plan = baseline_uniform(reference_instance())
        # floor(1918/4) = 479 each; remainder 2 goes to the fastest modes
        # (Same Day t=1, then First t=2), so the documented tie rule gives
        # objective 480*1 + 480*2 + 479*3 + 479*4 = 4793
        assert plan.x == {
            "First Class": 480,
            "Same Day": 480,
            "Second Class": 479,
            "Standard Class": 479,
        }
        assert plan.objective == 4793.0
        # cheap but infeasible: Same Day capacity is 240
        assert "capacity[Same Day]" in plan.constraints.violated()

    def test_uniform_exact_quarters(self):
        plan = baseline_uniform(reference_instance(total_demand=1916))
        assert all(v == 479 for v in plan.x.values())

    def test_uniform_single_mode_matches_all_standard(self):
        inst = ShippingInstance(
            (ShippingMode("only", 2.0, 1.0, 2000),), 100, 500.0, 0.0
        )
        assert baseline_uniform(inst).x == baseline_all_standard(inst).x


class TestOracle:
    def test_brute_force_cross_check(self):
        rng = np.random.default_rng(2024)
        feasible_seen = 0
        for _ in range(60):
            inst = random_instance(rng, max_capacity=8, feasible_bias=bool(rng.integers(0, 2)))
            orc = oracle_enumerate(inst)
            bf = brute_force(inst)
            if bf is None:
                assert orc.status == "infeasible"
            else:
                feasible_seen += 1
                assert orc.status == "optimal"
                assert orc.plan.objective == pytest.approx(bf[0], abs=1e-9)
        assert feasible_seen >= 15

    def test_enumeration_cap_enforced(self):
        modes = tuple(
            ShippingMode(f"m{j}", 1.0 + j, 1.0, 400, is_fast=False) for j in range(6)
        )
        inst = ShippingInstance(modes, 100, 1e9, 0.0)
        with pytest.raises(ValueError):
            oracle_enumerate(inst)

    def test_infeasible_status(self):
        inst = reference_instance(total_demand=3000)
        assert oracle_enumerate(inst).status == "infeasible"


class TestSolverProperties:
    def test_solver_matches_oracle_on_100_instances(self):
        rng = np.random.default_rng(424242)
        checked = 0
        for _ in range(100):
            inst = random_instance(rng)
            res = allocate(inst)
            orc = oracle_enumerate(inst)
            assert res.status == orc.status
            if res.status == "optimal":
                checked += 1
                assert res.plan.objective == pytest.approx(orc.plan.objective, abs=1e-9)
        assert checked >= 60

    def test_dominance_over_feasible_baselines(self):
        rng = np.random.default_rng(31337)
        for _ in range(100):
            inst = random_instance(rng, feasible_bias=True)
            res = allocate(inst)
            if res.status != "optimal":
                continue
            for baseline in (baseline_all_standard(inst), baseline_uniform(inst)):
                if baseline.constraints.overall_feasible:
                    assert res.plan.objective <= baseline.objective + 1e-9

    def test_audit_independence(self):
        rng = np.random.default_rng(55)
        for _ in range(30):
            inst = random_instance(rng, feasible_bias=True)
            res = allocate(inst)
            if res.status != "optimal":
                continue
            audit = evaluate_plan(res.plan.x, inst)
            assert audit.objective == pytest.approx(res.plan.objective, abs=1e-9)
            assert audit.total_cost == pytest.approx(res.plan.total_cost, abs=1e-9)
            assert audit.constraints.overall_feasible

    def test_lp_relaxation_lower_bound(self):
        rng = np.random.default_rng(808)
        for _ in range(40):
            inst = random_instance(rng, feasible_bias=True)
            res = allocate(inst)
            if res.status != "optimal":
                continue
            relax = simplex_solve(build_shipping_lp(inst))
            assert relax.status == "optimal"
            assert relax.objective <= res.plan.objective + 1e-9

    def test_objective_scales_with_delivery_times(self):
        inst = reference_instance()
        res = allocate(inst)
        k = 3.5
        scaled = ShippingInstance(
            modes=tuple(
                ShippingMode(m.id, m.avg_delivery_days * k, m.unit_cost, m.capacity, m.is_fast)
                for m in inst.modes
            ),
            total_demand=inst.total_demand,
            budget=inst.budget,
            min_fast_share=inst.min_fast_share,
        )
        scaled_res = allocate(scaled)
        assert scaled_res.plan.objective == pytest.approx(k * res.plan.objective)
        # the pre-scaling optimum stays optimal after scaling
        replay = evaluate_plan(res.plan.x, scaled)
        assert replay.objective == pytest.approx(scaled_res.plan.objective)

    def test_lexicographic_tie_break(self):
        # two indistinguishable modes: every split of one unit is optimal;
        # the lexicographically smallest x by mode id puts the unit on "b"
        modes = (
            ShippingMode("a", 2.0, 1.0, 5),
            ShippingMode("b", 2.0, 1.0, 5),
        )
        inst = ShippingInstance(modes, 1, 100.0, 0.0)
        assert allocate(inst).plan.x == {"a": 0, "b": 1}
        assert oracle_enumerate(inst).plan.x == {"a": 0, "b": 1}

    def test_plan_json_schema(self):
        plan = allocate(reference_instance()).plan
        doc = json.loads(plan.to_json())
        assert set(doc) == {"x", "objective", "total_cost", "fast_share", "feasible", "constraints"}
        assert doc["feasible"] is True
        assert doc["x"]["Same Day"] == 240
