"""Dense linear programming for small allocation problems.

``simplex_solve`` is a two-phase full-tableau simplex with Bland's rule
(deterministic, cycle-free). Variable lower bounds are shifted to zero and
finite upper bounds become internal rows, so the public problem keeps
capacities in bounds while the tableau stays classic standard form.
``ilp_solve`` wraps it in best-first branch and bound on the most
fractional variable with FIFO tie-breaking, so node exploration order is
machine-independent.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace

import numpy as np

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-7
_INT_TOL = 1e-6


@dataclass(frozen=True)
class LpProblem:
    """minimize c @ x subject to rows (coeffs, sense, rhs) and bounds."""

    c: np.ndarray
    row_coeffs: np.ndarray
    row_senses: tuple[str, ...]
    row_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integrality: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64)
        n = c.shape[0]
        A = np.asarray(self.row_coeffs, dtype=np.float64).reshape(-1, n)
        rhs = np.asarray(self.row_rhs, dtype=np.float64)
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        mask = np.asarray(self.integrality, dtype=bool)
        if not (len(self.row_senses) == A.shape[0] == rhs.shape[0]):
            raise ValueError("row count mismatch between coeffs, senses, rhs")
        if any(s not in ("<=", "=", ">=") for s in self.row_senses):
            raise ValueError(f"invalid sense in {self.row_senses}")
        if lo.shape != (n,) or hi.shape != (n,) or mask.shape != (n,):
            raise ValueError("bounds and integrality must match variable count")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        if not np.all(np.isfinite(lo)):
            raise ValueError("finite lower bounds are required")
        for name, val in (
            ("c", c), ("row_coeffs", A), ("row_rhs", rhs),
            ("lower", lo), ("upper", hi), ("integrality", mask),
        ):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "row_senses", tuple(self.row_senses))

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    objective: float | None = None


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row:
            factor = T[r, col]
            if factor != 0.0:
                T[r] -= factor * T[row]
    basis[row] = col


def _iterate(T: np.ndarray, basis: list[int], allowed: np.ndarray) -> str:
    """Run simplex pivots on a tableau whose last row is the (reduced) cost
    row and last column the rhs. Bland's rule throughout."""
    m = T.shape[0] - 1
    while True:
        entering = -1
        for j in range(T.shape[1] - 1):
            if allowed[j] and T[-1, j] < -_PIVOT_TOL:
                entering = j
                break
        if entering < 0:
            return "optimal"
        best_ratio = np.inf
        leaving = -1
        for r in range(m):
            a = T[r, entering]
            if a > _PIVOT_TOL:
                ratio = T[r, -1] / a
                if ratio < best_ratio - _PIVOT_TOL or (
                    abs(ratio - best_ratio) <= _PIVOT_TOL
                    and (leaving < 0 or basis[r] < basis[leaving])
                ):
                    best_ratio = ratio
                    leaving = r
        if leaving < 0:
            return "unbounded"
        _pivot(T, basis, leaving, entering)


def simplex_solve(problem: LpProblem) -> LpSolution:
    """Solve the LP relaxation (integrality ignored).

    Returns status codes instead of raising for infeasible or unbounded
    problems. Optimal solutions satisfy all rows and bounds within 1e-7.
    """
    n = problem.n_vars
    lo = problem.lower
    # Shift to y = x - lower >= 0.
    rows: list[np.ndarray] = []
    senses: list[str] = []
    rhs: list[float] = []
    for coeffs, sense, b in zip(
        problem.row_coeffs, problem.row_senses, problem.row_rhs
    ):
        rows.append(coeffs.copy())
        senses.append(sense)
        rhs.append(float(b - coeffs @ lo))
    for j in range(n):
        if np.isfinite(problem.upper[j]):
            row = np.zeros(n)
            row[j] = 1.0
            rows.append(row)
            senses.append("<=")
            rhs.append(float(problem.upper[j] - lo[j]))

    A = np.array(rows).reshape(len(rows), n)
    b = np.array(rhs)
    # Normalize to non-negative rhs.
    for r in range(len(b)):
        if b[r] < 0:
            A[r] = -A[r]
            b[r] = -b[r]
            senses[r] = {"<=": ">=", ">=": "<=", "=": "="}[senses[r]]

    m = len(b)
    n_slack = sum(1 for s in senses if s == "<=")
    n_surplus = sum(1 for s in senses if s == ">=")
    n_art = sum(1 for s in senses if s in (">=", "="))
    width = n + n_slack + n_surplus + n_art + 1

    T = np.zeros((m + 1, width))
    T[:m, :n] = A
    T[:m, -1] = b
    basis = [-1] * m
    s_idx, p_idx, a_idx = n, n + n_slack, n + n_slack + n_surplus
    art_cols = []
    for r, sense in enumerate(senses):
        if sense == "<=":
            T[r, s_idx] = 1.0
            basis[r] = s_idx
            s_idx += 1
        elif sense == ">=":
            T[r, p_idx] = -1.0
            p_idx += 1
            T[r, a_idx] = 1.0
            basis[r] = a_idx
            art_cols.append(a_idx)
            a_idx += 1
        else:
            T[r, a_idx] = 1.0
            basis[r] = a_idx
            art_cols.append(a_idx)
            a_idx += 1

    allowed = np.ones(width - 1, dtype=bool)
    if art_cols:
        # Phase 1: minimize the artificial sum.
        for col in art_cols:
            T[-1, col] = 1.0
        for r in range(m):
            if basis[r] in art_cols:
                T[-1] -= T[r]
        _iterate(T, basis, allowed)
        if T[-1, -1] < -_FEAS_TOL:
            return LpSolution(status="infeasible")
        # Drive surviving artificials out of the basis; drop redundant rows.
        drop_rows = []
        for r in range(m):
            if basis[r] in art_cols:
                pivot_col = -1
                for j in range(n + n_slack + n_surplus):
                    if abs(T[r, j]) > _PIVOT_TOL:
                        pivot_col = j
                        break
                if pivot_col >= 0:
                    _pivot(T, basis, r, pivot_col)
                else:
                    drop_rows.append(r)
        if drop_rows:
            keep = [r for r in range(m) if r not in drop_rows] + [m]
            T = T[keep]
            basis = [basis[r] for r in range(m) if r not in drop_rows]
            m = len(basis)
        for col in art_cols:
            allowed[col] = False

    # Phase 2: real objective on the shifted variables.
    T[-1, :] = 0.0
    T[-1, :n] = problem.c
    for r in range(m):
        cb = T[-1, basis[r]]
        if cb != 0.0:
            T[-1] -= cb * T[r]
    status = _iterate(T, basis, allowed)
    if status == "unbounded":
        return LpSolution(status="unbounded")

    y = np.zeros(width - 1)
    for r in range(m):
        y[basis[r]] = T[r, -1]
    x = y[:n] + lo
    return LpSolution(status="optimal", x=x, objective=float(problem.c @ x))


def check_feasible(problem: LpProblem, x: np.ndarray, tol: float = _FEAS_TOL) -> bool:
    if np.any(x < problem.lower - tol) or np.any(x > problem.upper + tol):
        return False
    for coeffs, sense, b in zip(
        problem.row_coeffs, problem.row_senses, problem.row_rhs
    ):
        lhs = float(coeffs @ x)
        if sense == "<=" and lhs > b + tol:
            return False
        if sense == ">=" and lhs < b - tol:
            return False
        if sense == "=" and abs(lhs - b) > tol:
            return False
    return True


def ilp_solve(problem: LpProblem, max_nodes: int = 200_000) -> LpSolution:
    """Best-first branch and bound over the LP relaxation.

    Branching picks the most fractional integer variable (lowest index on
    ties); nodes pop in (bound, insertion order) so runs are reproducible.
    Integer variables must carry finite bounds.
    """
    mask = problem.integrality
    if np.any(mask & ~np.isfinite(problem.upper)):
        raise ValueError("integer variables need finite upper bounds")
    root = simplex_solve(problem)
    if root.status != "optimal":
        return root

    counter = 0
    heap: list[tuple[float, int, LpProblem, LpSolution]] = []
    heapq.heappush(heap, (root.objective, counter, problem, root))
    best: LpSolution | None = None
    nodes = 0

    while heap:
        bound, _, node, relax = heapq.heappop(heap)
        if best is not None and bound >= best.objective - 1e-9:
            continue
        nodes += 1
        if nodes > max_nodes:
            raise RuntimeError(f"branch and bound exceeded {max_nodes} nodes")

        x = relax.x
        frac = np.where(mask, np.abs(x - np.round(x)), 0.0)
        if np.all(frac <= _INT_TOL):
            xi = x.copy()
            xi[mask] = np.round(xi[mask])
            obj = float(problem.c @ xi)
            if check_feasible(node, xi) and (best is None or obj < best.objective - 1e-9):
                best = LpSolution(status="optimal", x=xi, objective=obj)
            continue

        j = int(np.argmax(frac))
        floor_v = np.floor(x[j])
        for new_lo, new_hi in (
            (node.lower[j], floor_v),
            (floor_v + 1.0, node.upper[j]),
        ):
            if new_lo > new_hi:
                continue
            lower = node.lower.copy()
            upper = node.upper.copy()
            lower[j], upper[j] = new_lo, new_hi
            child = replace(node, lower=lower, upper=upper)
            sol = simplex_solve(child)
            if sol.status != "optimal":
                continue
            if best is not None and sol.objective >= best.objective - 1e-9:
                continue
            counter += 1
            heapq.heappush(heap, (sol.objective, counter, child, sol))

    if best is None:
        return LpSolution(status="infeasible")
    return best
