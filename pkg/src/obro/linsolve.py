"""Desk-scale LP and MILP solving behind a pluggable solver interface.

The bundled backends favor transparency over speed: a dense two-phase
simplex with Bland's anti-cycling rule for LPs, and best-bound
branch-and-bound on binary variables for MILPs.  Both are deterministic:
identical inputs produce identical primal vectors.  A HiGHS-backed
adapter (via scipy.optimize) exposes the same interface for instances
too large for the bundled code.
"""

from __future__ import annotations

import heapq
import itertools
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "Row",
    "LinearProgram",
    "MixedIntegerProgram",
    "SolveOutcome",
    "Solver",
    "SimplexSolver",
    "BranchBoundSolver",
    "HighsSolver",
    "default_solver",
    "solve_lp",
    "solve_milp",
    "write_lp_text",
]

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9


class SolverError(RuntimeError):
    pass


@dataclass
class Row:
    """One linear constraint: coeffs . x  (sense)  rhs."""

    coeffs: dict
    sense: str  # "<=", "=", ">="
    rhs: float
    name: str = ""

    def __post_init__(self):
        if self.sense not in ("<=", "=", ">="):
            raise ValueError(f"bad row sense {self.sense!r}")
        self.coeffs = {int(j): float(v) for j, v in self.coeffs.items() if v != 0.0}
        self.rhs = float(self.rhs)

    def dense(self, n: int) -> np.ndarray:
        a = np.zeros(n)
        for j, v in self.coeffs.items():
            a[j] = v
        return a


@dataclass
class LinearProgram:
    sense: str  # "min" or "max"
    c: np.ndarray
    rows: list
    lower: np.ndarray
    upper: np.ndarray
    names: list | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        n = self.c.size
        if self.sense not in ("min", "max"):
            raise ValueError(f"objective sense must be min or max, got {self.sense!r}")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bound arrays must match the variable count")
        if np.any(self.lower > self.upper):
            j = int(np.argmax(self.lower > self.upper))
            raise ValueError(f"variable {self.var_name(j)}: lower bound above upper")
        for r in self.rows:
            if r.coeffs and max(r.coeffs) >= n:
                raise ValueError(f"row {r.name!r} references variable {max(r.coeffs)}")

    @property
    def n_vars(self) -> int:
        return self.c.size

    def var_name(self, j: int) -> str:
        return self.names[j] if self.names else f"x{j}"

    def row_matrix(self) -> np.ndarray:
        a = np.zeros((len(self.rows), self.n_vars))
        for i, r in enumerate(self.rows):
            for j, v in r.coeffs.items():
                a[i, j] = v
        return a


@dataclass
class MixedIntegerProgram:
    lp: LinearProgram
    binaries: tuple

    def __post_init__(self):
        self.binaries = tuple(sorted(set(int(j) for j in self.binaries)))
        n = self.lp.n_vars
        for j in self.binaries:
            if not 0 <= j < n:
                raise ValueError(f"binary index {j} out of range")
            if self.lp.lower[j] < -1e-12 or self.lp.upper[j] > 1 + 1e-12:
                raise ValueError(
                    f"binary {self.lp.var_name(j)} has bounds outside [0, 1]"
                )


@dataclass
class SolveOutcome:
    """Result of one LP or MILP solve.

    ``dual`` (LPs only) holds per-row sensitivities d(objective)/d(rhs);
    ``dual_objective`` is the matching dual bound, equal to the primal
    objective at optimality up to round-off.
    """

    status: str  # optimal | infeasible | unbounded | iteration-limit
    objective: float | None = None
    x: np.ndarray | None = None
    dual: np.ndarray | None = None
    dual_objective: float | None = None
    stats: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def primal_violation(lp: LinearProgram, x: np.ndarray) -> float:
    """Worst constraint or bound violation of x (0 when feasible)."""
    worst = max(np.max(lp.lower - x, initial=0.0), np.max(x - lp.upper, initial=0.0))
    for r in lp.rows:
        lhs = sum(v * x[j] for j, v in r.coeffs.items())
        if r.sense == "<=":
            worst = max(worst, lhs - r.rhs)
        elif r.sense == ">=":
            worst = max(worst, r.rhs - lhs)
        else:
            worst = max(worst, abs(lhs - r.rhs))
    return float(worst)


class Solver(ABC):
    """Interface an LP/MILP backend must provide."""

    @abstractmethod
    def solve_lp(self, lp: LinearProgram) -> SolveOutcome: ...

    @abstractmethod
    def solve_milp(self, mip: MixedIntegerProgram) -> SolveOutcome: ...


# ---------------------------------------------------------------------------
# bundled simplex
# ---------------------------------------------------------------------------


class _StandardForm:
    """min-sense equality standard form of a LinearProgram.

    Variables are shifted/mirrored/split to be nonnegative; every row
    (including finite upper bounds on shifted variables and both halves
    of equality rows) becomes `a.t <= rhs`, then gains a slack.  Rows with
    negative rhs are negated and receive a phase-1 artificial.
    """

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        n = lp.n_vars
        self.maximize = lp.sense == "max"
        c = -lp.c if self.maximize else lp.c

        # variable transform: x = shift + sum(sign * t_col)
        self.shift = np.zeros(n)
        self.cols = []  # list of (orig var, sign)
        bound_rows = []  # (t column, ub) for finite shifted ranges
        for j in range(n):
            lo, up = lp.lower[j], lp.upper[j]
            if np.isfinite(lo):
                self.shift[j] = lo
                self.cols.append((j, 1.0))
                if np.isfinite(up):
                    bound_rows.append((len(self.cols) - 1, up - lo))
            elif np.isfinite(up):
                self.shift[j] = up
                self.cols.append((j, -1.0))
            else:
                self.cols.append((j, 1.0))
                self.cols.append((j, -1.0))
        self.nt = len(self.cols)

        ct = np.zeros(self.nt)
        for k, (j, s) in enumerate(self.cols):
            ct[k] += s * c[j]
        self.ct = ct
        self.obj_const = float(c @ self.shift)

        # per-variable t-columns for fast row transforms
        col_of = [[] for _ in range(n)]
        for k, (j, s) in enumerate(self.cols):
            col_of[j].append((k, s))

        rows_t = []  # (dense coeffs over t, rhs, orig row index, sign wrt orig rhs)
        for ri, r in enumerate(lp.rows):
            a = np.zeros(self.nt)
            const = 0.0
            for j, v in r.coeffs.items():
                const += v * self.shift[j]
                for k, s in col_of[j]:
                    a[k] += v * s
            rhs = r.rhs - const
            if r.sense in ("<=", "="):
                rows_t.append((a, rhs, ri, 1.0))
            if r.sense in (">=", "="):
                rows_t.append((-a, -rhs, ri, -1.0))
        for k, ub in bound_rows:
            a = np.zeros(self.nt)
            a[k] = 1.0
            rows_t.append((a, ub, -1, 0.0))

        self.rows_t = rows_t
        self.m = len(rows_t)

    def to_x(self, t: np.ndarray) -> np.ndarray:
        x = self.shift.copy()
        for k, (j, s) in enumerate(self.cols):
            x[j] += s * t[k]
        return x


class SimplexSolver(Solver):
    """Dense two-phase tableau simplex with Bland's rule.

    Bland's rule (lowest-index entering column, lowest-index basic
    variable on ratio ties) makes the pivot sequence cycle-free and fully
    deterministic.  Intended for desk-scale programs; the pivot cap turns
    numerical trouble into an explicit iteration-limit status.
    """

    def __init__(self, pivot_limit: int = 10**6, tol: float = PIVOT_TOL):
        self.pivot_limit = pivot_limit
        self.tol = tol

    def solve_milp(self, mip: MixedIntegerProgram) -> SolveOutcome:
        return BranchBoundSolver(lp_solver=self).solve_milp(mip)

    def solve_lp(self, lp: LinearProgram) -> SolveOutcome:
        sf = _StandardForm(lp)
        m, nt = sf.m, sf.nt
        pivots = 0

        # tableau: [t vars | slacks | artificials | rhs]
        art_rows = [i for i, (_, rhs, _, _) in enumerate(sf.rows_t) if rhs < 0]
        na = len(art_rows)
        width = nt + m + na + 1
        T = np.zeros((m, width))
        basis = np.empty(m, dtype=int)
        art_of_row = {}
        for i, (a, rhs, _, _) in enumerate(sf.rows_t):
            flip = -1.0 if rhs < 0 else 1.0
            T[i, :nt] = flip * a
            T[i, nt + i] = flip
            T[i, -1] = flip * rhs
            basis[i] = nt + i
        for k, i in enumerate(art_rows):
            col = nt + m + k
            T[i, col] = 1.0
            basis[i] = col
            art_of_row[i] = col

        def price_out(costs):
            z = np.zeros(width)
            z[: costs.size] = costs
            obj = 0.0
            for i in range(T.shape[0]):
                cb = costs[basis[i]] if basis[i] < costs.size else 0.0
                if cb != 0.0:
                    z -= cb * T[i]
                    obj += cb * T[i, -1]
            z[-1] = 0.0
            return z, obj

        def pivot(z, row, col):
            piv = T[row, col]
            T[row] /= piv
            for i in range(T.shape[0]):
                if i != row and T[i, col] != 0.0:
                    T[i] -= T[i, col] * T[row]
            if z[col] != 0.0:
                z -= z[col] * T[row]
            basis[row] = col

        def run_phase(z, allowed):
            nonlocal pivots
            while True:
                enter = -1
                for j in allowed:
                    if z[j] < -self.tol:
                        enter = j
                        break
                if enter < 0:
                    return "optimal", z
                ratios = np.full(T.shape[0], np.inf)
                mask = T[:, enter] > self.tol
                ratios[mask] = T[mask, -1] / T[mask, enter]
                best = np.min(ratios) if ratios.size else np.inf
                if not np.isfinite(best):
                    return "unbounded", z
                leave, leave_var = -1, None
                for i in range(T.shape[0]):
                    if ratios[i] <= best + 1e-9 and (
                        leave < 0 or basis[i] < leave_var
                    ):
                        leave, leave_var = i, basis[i]
                pivot(z, leave, enter)
                pivots += 1
                if pivots > self.pivot_limit:
                    return "iteration-limit", z

        structural = range(nt + m)  # artificials never re-enter

        dropped: set[int] = set()
        if na:
            costs1 = np.zeros(nt + m + na)
            costs1[nt + m :] = 1.0
            z1, _ = price_out(costs1)
            status, z1 = run_phase(z1, structural)
            if status != "optimal":
                return SolveOutcome("iteration-limit", stats={"pivots": pivots})
            phase1_obj = sum(
                T[i, -1] for i in range(T.shape[0]) if basis[i] >= nt + m
            )
            if phase1_obj > FEAS_TOL:
                return SolveOutcome("infeasible", stats={"pivots": pivots})
            # drive leftover artificials out; drop dependent rows
            row_ids = list(range(m))
            drop = []
            for i in range(T.shape[0]):
                if basis[i] >= nt + m:
                    col = next(
                        (j for j in structural if abs(T[i, j]) > self.tol), None
                    )
                    if col is None:
                        drop.append(i)
                    else:
                        pivot(z1, i, col)
                        pivots += 1
            if drop:
                dropped = {row_ids[i] for i in drop}
                keep = [i for i in range(T.shape[0]) if i not in set(drop)]
                T = T[keep]
                basis = basis[keep]

        costs2 = np.zeros(nt + m + na)
        costs2[:nt] = sf.ct
        z2, _ = price_out(costs2)
        status, z2 = run_phase(z2, structural)
        if status != "optimal":
            return SolveOutcome(status, stats={"pivots": pivots})

        t = np.zeros(nt)
        for i in range(T.shape[0]):
            if basis[i] < nt:
                t[basis[i]] = T[i, -1]
        x = sf.to_x(t)
        obj_min = float(sf.ct @ t) + sf.obj_const
        objective = -obj_min if sf.maximize else obj_min

        # duals from the slack reduced costs (the phase-0 row flip cancels
        # in the pricing algebra); dependent rows dropped in phase 1 keep 0
        y = np.zeros(m)
        for irow in range(m):
            if irow not in dropped:
                y[irow] = -z2[nt + irow]
        dual_obj_min = sf.obj_const + float(
            sum(y[i] * sf.rows_t[i][1] for i in range(m))
        )
        dual = np.zeros(len(lp.rows))
        for irow, (_, _, ri, sign) in enumerate(sf.rows_t):
            if ri >= 0:
                dual[ri] += sign * y[irow]
        if sf.maximize:
            dual = -dual
            dual_objective = -dual_obj_min
        else:
            dual_objective = dual_obj_min

        stats = {
            "pivots": pivots,
            "primal_violation": primal_violation(lp, x),
            "max_dual_violation": float(max(-np.min(z2[: nt + m]), 0.0)),
        }
        return SolveOutcome("optimal", objective, x, dual, dual_objective, stats)


class BranchBoundSolver(Solver):
    """Best-bound branch-and-bound on binary variables.

    Branches on the most-fractional binary (smallest index on ties) by
    fixing it to 0 then 1; nodes are explored in best-relaxation-bound
    order with a monotone counter breaking ties, so runs are repeatable.
    """

    def __init__(
        self,
        lp_solver: Solver | None = None,
        node_limit: int = 10**6,
        warn_nodes: int = 10**4,
        int_tol: float = 1e-6,
    ):
        self.lp_solver = lp_solver or SimplexSolver()
        self.node_limit = node_limit
        self.warn_nodes = warn_nodes
        self.int_tol = int_tol

    def solve_lp(self, lp: LinearProgram) -> SolveOutcome:
        return self.lp_solver.solve_lp(lp)

    def solve_milp(self, mip: MixedIntegerProgram) -> SolveOutcome:
        lp = mip.lp
        minimize = lp.sense == "min"
        score = (lambda v: v) if minimize else (lambda v: -v)
        nodes = 0
        warned = False
        popped_bounds = []
        incumbent = None
        inc_score = np.inf
        heap = []
        counter = itertools.count()

        def node_lp(fixings):
            lo = lp.lower.copy()
            up = lp.upper.copy()
            for j, v in fixings.items():
                lo[j] = up[j] = float(v)
            return replace(lp, lower=lo, upper=up)

        def consider(fixings):
            nonlocal nodes, incumbent, inc_score, warned
            nodes += 1
            if nodes > self.warn_nodes and not warned:
                warnings.warn(
                    f"branch-and-bound past {self.warn_nodes} nodes", stacklevel=3
                )
                warned = True
            out = self.lp_solver.solve_lp(node_lp(fixings))
            if out.status == "infeasible":
                return None
            if out.status != "optimal":
                return out.status
            s = score(out.objective)
            if s >= inc_score - 1e-9:
                return None
            frac = [
                j
                for j in mip.binaries
                if min(out.x[j], 1.0 - out.x[j]) > self.int_tol
            ]
            if not frac:
                x = out.x.copy()
                for j in mip.binaries:
                    x[j] = round(x[j])
                incumbent = SolveOutcome(
                    "optimal", out.objective, x, stats=dict(out.stats)
                )
                inc_score = s
                return None
            heapq.heappush(heap, (s, next(counter), fixings, out))
            return None

        bad = consider({})
        if bad == "unbounded":
            return SolveOutcome("unbounded", stats={"nodes": nodes})
        if bad == "iteration-limit":
            return SolveOutcome("iteration-limit", stats={"nodes": nodes})

        while heap:
            bound, _, fixings, relax = heapq.heappop(heap)
            if bound >= inc_score - 1e-9:
                break
            popped_bounds.append(bound if minimize else -bound)
            j_star, best_frac = -1, self.int_tol
            for j in mip.binaries:
                if j in fixings:
                    continue
                d = min(relax.x[j], 1.0 - relax.x[j])
                if d > best_frac:
                    j_star, best_frac = j, d
            if j_star < 0:  # integral within tolerance at pop time
                x = relax.x.copy()
                for j in mip.binaries:
                    x[j] = round(x[j])
                if bound < inc_score - 1e-9:
                    incumbent = SolveOutcome("optimal", relax.objective, x)
                    inc_score = bound
                continue
            for v in (0, 1):
                bad = consider({**fixings, j_star: v})
                if bad == "iteration-limit":
                    return SolveOutcome("iteration-limit", stats={"nodes": nodes})
            if nodes > self.node_limit:
                out = incumbent or SolveOutcome("iteration-limit")
                return replace(
                    out,
                    status="iteration-limit",
                    stats={"nodes": nodes, "popped_bounds": popped_bounds},
                )

        if incumbent is None:
            return SolveOutcome("infeasible", stats={"nodes": nodes})
        incumbent.stats.update(
            nodes=nodes,
            popped_bounds=popped_bounds,
            primal_violation=primal_violation(lp, incumbent.x),
        )
        return incumbent


class HighsSolver(Solver):
    """scipy/HiGHS backend for instances beyond the bundled code."""

    def __init__(self, int_tol: float = 1e-6):
        self.int_tol = int_tol

    def _split(self, lp: LinearProgram):
        from scipy.sparse import csr_matrix

        n = lp.n_vars
        data = {"<=": ([], [], [], []), "=": ([], [], [], [])}
        for i, r in enumerate(lp.rows):
            kind = "=" if r.sense == "=" else "<="
            sign = -1.0 if r.sense == ">=" else 1.0
            rows, cols, vals, meta = data[kind]
            k = len(meta)
            for j, v in r.coeffs.items():
                rows.append(k)
                cols.append(j)
                vals.append(sign * v)
            meta.append((i, sign, sign * r.rhs))

        def matrix(kind):
            rows, cols, vals, meta = data[kind]
            if not meta:
                return None, [], np.zeros(0)
            a = csr_matrix(
                (vals, (rows, cols)), shape=(len(meta), n)
            )
            return a, [(i, s) for i, s, _ in meta], np.array([b for _, _, b in meta])

        return matrix("<="), matrix("=")

    def solve_lp(self, lp: LinearProgram) -> SolveOutcome:
        from scipy.optimize import linprog

        maximize = lp.sense == "max"
        c = -lp.c if maximize else lp.c
        (a_ub, ub_meta, b_ub), (a_eq, eq_meta, b_eq) = self._split(lp)
        res = linprog(
            c,
            A_ub=a_ub,
            b_ub=b_ub if a_ub is not None else None,
            A_eq=a_eq,
            b_eq=b_eq if a_eq is not None else None,
            bounds=np.column_stack([lp.lower, lp.upper]),
            method="highs",
        )
        status = {0: "optimal", 1: "iteration-limit", 2: "infeasible", 3: "unbounded"}.get(
            res.status, "iteration-limit"
        )
        if status != "optimal":
            return SolveOutcome(status, stats={"backend": "highs"})
        dual = np.zeros(len(lp.rows))
        dual_obj = 0.0
        for (i, sign), marg, rhs in zip(
            ub_meta, res.ineqlin.marginals, b_ub, strict=True
        ):
            dual[i] += sign * marg
            dual_obj += marg * rhs
        for (i, sign), marg, rhs in zip(
            eq_meta, res.eqlin.marginals, b_eq, strict=True
        ):
            dual[i] += sign * marg
            dual_obj += marg * rhs
        lo_fin = np.isfinite(lp.lower)
        up_fin = np.isfinite(lp.upper)
        dual_obj += float(
            res.lower.marginals[lo_fin] @ lp.lower[lo_fin]
            + res.upper.marginals[up_fin] @ lp.upper[up_fin]
        )
        objective = -res.fun if maximize else res.fun
        if maximize:
            dual, dual_obj = -dual, -dual_obj
        stats = {
            "backend": "highs",
            "pivots": int(res.nit),
            "primal_violation": primal_violation(lp, res.x),
        }
        return SolveOutcome("optimal", float(objective), res.x, dual, dual_obj, stats)

    def solve_milp(self, mip: MixedIntegerProgram) -> SolveOutcome:
        from scipy.optimize import Bounds, LinearConstraint, milp

        lp = mip.lp
        maximize = lp.sense == "max"
        c = -lp.c if maximize else lp.c
        (a_ub, _, b_ub), (a_eq, _, b_eq) = self._split(lp)
        constraints = []
        if a_ub is not None:
            constraints.append(LinearConstraint(a_ub, -np.inf, b_ub))
        if a_eq is not None:
            constraints.append(LinearConstraint(a_eq, b_eq, b_eq))
        integrality = np.zeros(lp.n_vars)
        integrality[list(mip.binaries)] = 1
        res = milp(
            c,
            constraints=constraints,
            integrality=integrality,
            bounds=Bounds(lp.lower, lp.upper),
            options={"mip_rel_gap": 0.0},
        )
        status = {0: "optimal", 1: "iteration-limit", 2: "infeasible", 3: "unbounded"}.get(
            res.status, "iteration-limit"
        )
        if status != "optimal":
            return SolveOutcome(status, stats={"backend": "highs"})
        x = res.x.copy()
        for j in mip.binaries:
            if min(x[j], 1.0 - x[j]) <= self.int_tol:
                x[j] = round(x[j])
        objective = -res.fun if maximize else res.fun
        stats = {
            "backend": "highs",
            "nodes": int(getattr(res, "mip_node_count", 0) or 0),
            "primal_violation": primal_violation(lp, x),
        }
        return SolveOutcome("optimal", float(objective), x, stats=stats)


def default_solver() -> Solver:
    return BranchBoundSolver(lp_solver=SimplexSolver())


def solve_lp(lp: LinearProgram, solver: Solver | None = None) -> SolveOutcome:
    return (solver or default_solver()).solve_lp(lp)


def solve_milp(mip: MixedIntegerProgram, solver: Solver | None = None) -> SolveOutcome:
    return (solver or default_solver()).solve_milp(mip)


def write_lp_text(prog) -> str:
    """Render a program in the fixed debug layout: objective, rows, bounds,
    binaries.  Floats carry 12 significant digits; variables appear by name.
    """
    if isinstance(prog, MixedIntegerProgram):
        lp, binaries = prog.lp, prog.binaries
    else:
        lp, binaries = prog, ()

    def term(j, v):
        return f"{v:+.12g} {lp.var_name(j)}"

    lines = [f"{lp.sense}: " + " ".join(term(j, v) for j, v in enumerate(lp.c) if v)]
    lines.append("subject to")
    for i, r in enumerate(lp.rows):
        label = r.name or f"r{i}"
        body = " ".join(term(j, r.coeffs[j]) for j in sorted(r.coeffs))
        lines.append(f"  {label}: {body} {r.sense} {r.rhs:.12g}")
    lines.append("bounds")
    for j in range(lp.n_vars):
        lines.append(f"  {lp.lower[j]:.12g} <= {lp.var_name(j)} <= {lp.upper[j]:.12g}")
    if binaries:
        lines.append("binaries")
        lines.append("  " + " ".join(lp.var_name(j) for j in binaries))
    return "\n".join(lines) + "\n"
