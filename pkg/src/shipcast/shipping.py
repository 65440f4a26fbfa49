"""Shipping-mode allocation: ILP model builder, plan evaluation, heuristic
baselines, and an exhaustive enumeration oracle used as ground truth.

The optimization splits an integer demand total across shipping modes to
minimize total weighted delivery days subject to a budget, per-mode
capacities, and a minimum share of fast-mode units.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .lp import LpProblem, ilp_solve


@dataclass(frozen=True)
class ShippingMode:
    id: str
    avg_delivery_days: float
    unit_cost: float
    capacity: int
    is_fast: bool = False

    def __post_init__(self):
        if self.avg_delivery_days <= 0:
            raise ValueError(f"mode {self.id}: delivery days must be positive")
        if self.unit_cost < 0 or self.capacity < 0:
            raise ValueError(f"mode {self.id}: cost and capacity must be non-negative")


@dataclass(frozen=True)
class ShippingInstance:
    modes: tuple[ShippingMode, ...]
    total_demand: int
    budget: float
    min_fast_share: float

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise ValueError("at least one shipping mode is required")
        ids = [m.id for m in self.modes]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate mode ids: {ids}")
        if self.total_demand < 0:
            raise ValueError("total demand must be non-negative")
        if not (0.0 <= self.min_fast_share <= 1.0):
            raise ValueError("min_fast_share must lie in [0, 1]")

    def sorted_modes(self) -> list[ShippingMode]:
        return sorted(self.modes, key=lambda m: m.id)

    def service_floor(self) -> int:
        """Minimum fast-mode units: ceil(share * demand), with an epsilon
        guard so float artifacts like 0.1*30 = 3.0000000000000004 do not
        overshoot an exactly attainable floor."""
        return int(math.ceil(self.min_fast_share * self.total_demand - 1e-9))

    def to_json(self) -> str:
        return json.dumps(
            {
                "modes": [
                    {
                        "id": m.id,
                        "t": m.avg_delivery_days,
                        "c": m.unit_cost,
                        "K": m.capacity,
                        "is_fast": m.is_fast,
                    }
                    for m in self.modes
                ],
                "D_total": self.total_demand,
                "B": self.budget,
                "alpha": self.min_fast_share,
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ShippingInstance":
        doc = json.loads(text)
        return cls(
            modes=tuple(
                ShippingMode(
                    id=m["id"],
                    avg_delivery_days=float(m["t"]),
                    unit_cost=float(m["c"]),
                    capacity=int(m["K"]),
                    is_fast=bool(m["is_fast"]),
                )
                for m in doc["modes"]
            ),
            total_demand=int(doc["D_total"]),
            budget=float(doc["B"]),
            min_fast_share=float(doc["alpha"]),
        )


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    satisfied: bool
    slack: float


@dataclass(frozen=True)
class ConstraintReport:
    checks: tuple[ConstraintCheck, ...]

    @property
    def overall_feasible(self) -> bool:
        return all(c.satisfied for c in self.checks)

    def violated(self) -> list[str]:
        return [c.name for c in self.checks if not c.satisfied]


@dataclass(frozen=True)
class AllocationPlan:
    x: dict[str, int]
    objective: float
    total_cost: float
    fast_share: float
    constraints: ConstraintReport

    def to_json(self) -> str:
        return json.dumps(
            {
                "x": dict(sorted(self.x.items())),
                "objective": self.objective,
                "total_cost": self.total_cost,
                "fast_share": self.fast_share,
                "feasible": self.constraints.overall_feasible,
                "constraints": [
                    {"name": c.name, "satisfied": c.satisfied, "slack": c.slack}
                    for c in self.constraints.checks
                ],
            },
            indent=2,
            sort_keys=True,
        )


@dataclass(frozen=True)
class AllocationResult:
    status: str  # "optimal" | "infeasible"
    plan: AllocationPlan | None = None
    binding_constraints: tuple[str, ...] = ()


def evaluate_plan(x: dict[str, int], inst: ShippingInstance) -> AllocationPlan:
    """Pure arithmetic audit of an allocation, independent of any solver."""
    modes = inst.sorted_modes()
    missing = [m.id for m in modes if m.id not in x]
    if missing:
        raise ValueError(f"allocation missing modes: {missing}")
    units = {}
    for m in modes:
        v = float(x[m.id])
        if not v.is_integer():
            raise ValueError(f"allocation for {m.id} must be integral, got {x[m.id]}")
        if v < 0:
            raise ValueError(f"allocation for {m.id} must be non-negative, got {x[m.id]}")
        units[m.id] = int(v)

    total_units = sum(units.values())
    objective = float(sum(m.avg_delivery_days * units[m.id] for m in modes))
    total_cost = float(sum(m.unit_cost * units[m.id] for m in modes))
    fast_units = sum(units[m.id] for m in modes if m.is_fast)
    fast_share = fast_units / inst.total_demand if inst.total_demand > 0 else 0.0
    floor = inst.service_floor()

    checks = [
        ConstraintCheck(
            "demand",
            total_units == inst.total_demand,
            float(inst.total_demand - total_units),
        ),
        ConstraintCheck("budget", total_cost <= inst.budget + 1e-9, inst.budget - total_cost),
    ]
    for m in modes:
        checks.append(
            ConstraintCheck(
                f"capacity[{m.id}]",
                units[m.id] <= m.capacity,
                float(m.capacity - units[m.id]),
            )
        )
    checks.append(
        ConstraintCheck("fast_service", fast_units >= floor, float(fast_units - floor))
    )
    return AllocationPlan(
        x=units,
        objective=objective,
        total_cost=total_cost,
        fast_share=fast_share,
        constraints=ConstraintReport(tuple(checks)),
    )


def build_shipping_lp(inst: ShippingInstance) -> LpProblem:
    """Variables are the id-sorted modes with capacity in their bounds;
    rows are demand (=), budget (<=), and, when the share is positive, the
    fast-service floor (>=, integerized by ceiling)."""
    modes = inst.sorted_modes()
    n = len(modes)
    c = np.array([m.avg_delivery_days for m in modes])
    rows = [np.ones(n)]
    senses = ["="]
    rhs = [float(inst.total_demand)]
    rows.append(np.array([m.unit_cost for m in modes]))
    senses.append("<=")
    rhs.append(float(inst.budget))
    if inst.min_fast_share > 0.0:
        rows.append(np.array([1.0 if m.is_fast else 0.0 for m in modes]))
        senses.append(">=")
        rhs.append(float(inst.service_floor()))
    return LpProblem(
        c=c,
        row_coeffs=np.array(rows),
        row_senses=tuple(senses),
        row_rhs=np.array(rhs),
        lower=np.zeros(n),
        upper=np.array([float(m.capacity) for m in modes]),
        integrality=np.ones(n, dtype=bool),
    )


def _diagnose_infeasibility(inst: ShippingInstance) -> tuple[str, ...]:
    reasons = []
    cap_total = sum(m.capacity for m in inst.modes)
    if inst.total_demand > cap_total:
        reasons.append("capacity")
    fast_cap = sum(m.capacity for m in inst.modes if m.is_fast)
    if fast_cap < inst.service_floor():
        reasons.append("fast_service")
    # Cheapest way to meet demand: fill modes by ascending unit cost.
    remaining = inst.total_demand
    min_cost = 0.0
    for m in sorted(inst.modes, key=lambda m: (m.unit_cost, m.id)):
        take = min(m.capacity, remaining)
        min_cost += take * m.unit_cost
        remaining -= take
    if remaining == 0 and min_cost > inst.budget + 1e-9:
        reasons.append("budget")
    return tuple(reasons) if reasons else ("jointly_infeasible",)


def allocate(inst: ShippingInstance) -> AllocationResult:
    """Provably optimal allocation, or an explicit infeasibility result.

    Among equal-objective optima the lexicographically smallest allocation
    by mode id is returned (a deterministic refinement pass pins each
    variable in id order subject to keeping the optimal objective).
    """
    if inst.total_demand == 0:
        plan = evaluate_plan({m.id: 0 for m in inst.modes}, inst)
        return AllocationResult(status="optimal", plan=plan)
    base = build_shipping_lp(inst)
    sol = ilp_solve(base)
    if sol.status != "optimal":
        return AllocationResult(
            status="infeasible", binding_constraints=_diagnose_infeasibility(inst)
        )

    modes = inst.sorted_modes()
    n = len(modes)
    cap_row = np.vstack([base.row_coeffs, base.c[None, :]])
    cap_senses = base.row_senses + ("<=",)
    cap_rhs = np.concatenate([base.row_rhs, [sol.objective + 1e-7]])
    lower = base.lower.copy()
    upper = base.upper.copy()
    values = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        sub = LpProblem(
            c=e,
            row_coeffs=cap_row,
            row_senses=cap_senses,
            row_rhs=cap_rhs,
            lower=lower,
            upper=upper,
            integrality=base.integrality,
        )
        s = ilp_solve(sub)
        if s.status != "optimal":
            # Numerical edge on the objective cap: keep the base solution.
            values = [int(round(v)) for v in sol.x]
            break
        v = int(round(s.x[i]))
        values.append(v)
        lower[i] = upper[i] = float(v)

    plan = evaluate_plan({m.id: v for m, v in zip(modes, values)}, inst)
    return AllocationResult(status="optimal", plan=plan)


def baseline_all_standard(inst: ShippingInstance) -> AllocationPlan:
    """Cost-minimizing heuristic: route every unit through the cheapest
    mode. Evaluated, not solved; capacity and service violations show up
    in the constraint report."""
    cheapest = min(inst.modes, key=lambda m: (m.unit_cost, m.id))
    x = {m.id: 0 for m in inst.modes}
    x[cheapest.id] = inst.total_demand
    return evaluate_plan(x, inst)


def baseline_uniform(inst: ShippingInstance) -> AllocationPlan:
    """Even-split heuristic: floor(D/|M|) per mode, remainder handed one
    unit at a time to the fastest modes (ties by id)."""
    k = len(inst.modes)
    share = inst.total_demand // k
    x = {m.id: share for m in inst.modes}
    remainder = inst.total_demand - share * k
    for m in sorted(inst.modes, key=lambda m: (m.avg_delivery_days, m.id)):
        if remainder == 0:
            break
        x[m.id] += 1
        remainder -= 1
    return evaluate_plan(x, inst)


_MAX_PREFIX = 10_000_000


def oracle_enumerate(inst: ShippingInstance) -> AllocationResult:
    """Exhaustive ground truth for small instances.

    Enumerates every allocation of the first |M|-2 id-sorted modes; the
    demand equality leaves one free variable across the last two modes,
    whose objective is linear, so its optimum sits at an endpoint of the
    feasible integer interval (bounds, budget cut, fast-service cut). Ties
    resolve to the lexicographically smallest allocation by mode id,
    matching ``allocate``.
    """
    modes = inst.sorted_modes()
    k = len(modes)
    D = inst.total_demand
    floor = inst.service_floor()

    if k == 1:
        m = modes[0]
        x = {m.id: D}
        plan = evaluate_plan(x, inst)
        if plan.constraints.overall_feasible:
            return AllocationResult(status="optimal", plan=plan)
        return AllocationResult(
            status="infeasible", binding_constraints=_diagnose_infeasibility(inst)
        )

    prefix = modes[: k - 2]
    a, b = modes[k - 2], modes[k - 1]
    sizes = [m.capacity + 1 for m in prefix]
    total = 1
    for s in sizes:
        total *= s
    if total > _MAX_PREFIX:
        raise ValueError(
            f"prefix grid of {total} combinations exceeds the enumeration cap"
        )

    if prefix:
        grids = np.indices(sizes).reshape(len(sizes), -1)
    else:
        grids = np.zeros((0, 1), dtype=np.int64)

    t_pref = np.array([m.avg_delivery_days for m in prefix])
    c_pref = np.array([m.unit_cost for m in prefix])
    f_pref = np.array([1.0 if m.is_fast else 0.0 for m in prefix])

    d_rem = D - grids.sum(axis=0)
    b_rem = inst.budget - (c_pref @ grids if prefix else 0.0)
    obj_pref = t_pref @ grids if prefix else np.zeros(grids.shape[1])
    need_fast = floor - (f_pref @ grids if prefix else 0.0)

    lo = np.maximum(0, d_rem - b.capacity).astype(np.float64)
    hi = np.minimum(a.capacity, d_rem).astype(np.float64)
    feas = d_rem >= 0

    # Budget cut: (c_a - c_b) * x_a <= b_rem - c_b * d_rem.
    cut = b_rem - b.unit_cost * d_rem
    dc = a.unit_cost - b.unit_cost
    if dc > 0:
        hi = np.minimum(hi, np.floor(cut / dc + 1e-9))
    elif dc < 0:
        lo = np.maximum(lo, np.ceil(cut / dc - 1e-9))
    else:
        feas &= cut >= -1e-9

    # Fast-service cut: (f_a - f_b) * x_a >= need_fast - f_b * d_rem.
    fa, fb = float(a.is_fast), float(b.is_fast)
    need = need_fast - fb * d_rem
    if fa - fb > 0:
        lo = np.maximum(lo, np.ceil(need - 1e-9))
    elif fa - fb < 0:
        hi = np.minimum(hi, np.floor(-need + 1e-9))
    else:
        feas &= need <= 1e-9

    feas &= lo <= hi
    if not np.any(feas):
        return AllocationResult(
            status="infeasible", binding_constraints=_diagnose_infeasibility(inst)
        )

    dt = a.avg_delivery_days - b.avg_delivery_days
    x_a = np.where(dt > 0, lo, np.where(dt < 0, hi, lo))
    objective = obj_pref + dt * x_a + b.avg_delivery_days * d_rem
    objective = np.where(feas, objective, np.inf)
    # argmin returns the first (lexicographically smallest prefix) optimum;
    # within a prefix, x_a was already chosen lex-minimal among optima.
    best = int(np.argmin(objective))

    x = {m.id: int(grids[i, best]) for i, m in enumerate(prefix)}
    x[a.id] = int(x_a[best])
    x[b.id] = int(d_rem[best] - x_a[best])
    plan = evaluate_plan(x, inst)
    return AllocationResult(status="optimal", plan=plan)
