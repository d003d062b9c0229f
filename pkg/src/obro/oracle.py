"""Brute-force verifiers for the two optimization layers, plus the
partition-refinement consistency study.

These are the trust anchors: the adversary oracle enumerates sample-value
grids directly against the neighborhood definition, and the master oracle
enumerates segment activation patterns, leaving only a tiny LP per
pattern.  Both are deterministic (first best in lexicographic order wins)
and guarded by explicit work budgets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from obro.engine import run
from obro.linsolve import SimplexSolver, Solver
from obro.master import build_master, master_layout
from obro.model import ObroProblem, validate
from obro.pwl import SampledFunction, interp_coefficients

__all__ = [
    "GridBudgetError",
    "brute_force_subproblem",
    "enumerate_master",
    "RefinementTable",
    "refinement_study",
]

GRID_BUDGET = 10**7
PATTERN_BUDGET = 10**6
CHECK_SLACK = 1e-12


class GridBudgetError(RuntimeError):
    pass


def brute_force_subproblem(
    prob: ObroProblem, x: np.ndarray, levels: int = 101
) -> tuple[float, list]:
    """Grid search over the adversary's sample values, term by term.

    Each sample value ranges over ``levels`` evenly spaced offsets inside
    its sup-radius box; combinations violating the deviation budget or the
    ratio bound are discarded.  The problem separates over terms, so terms
    are enumerated independently and their best values summed.  Always a
    lower bound on the LP optimum; within the objective's Lipschitz
    constant times the grid step of it.
    """
    issues = validate(prob)
    if issues:
        raise ValueError("invalid problem: " + "; ".join(issues))
    if levels < 3:
        raise ValueError("levels must be at least 3")
    x = np.asarray(x, dtype=float)

    work = sum(
        (levels if t.spec.delta_max > 0 else 1) ** t.spec.partition.n_points
        for t in prob.terms
    )
    if work > GRID_BUDGET:
        raise GridBudgetError(f"grid budget exceeded: {work:.3g} > {GRID_BUDGET:.0e}")

    total = float(prob.c @ x)
    best_functions = []
    for term in prob.terms:
        spec = term.spec
        part = spec.partition
        n = part.n_points
        coeff = np.zeros(n)
        for e in term.eval_indices:
            p, a_lo, a_hi = interp_coefficients(part, x[e])
            coeff[p] += a_lo
            coeff[p + 1] += a_hi

        if spec.delta_max > 0:
            offsets = np.linspace(-spec.delta_max, spec.delta_max, levels)
        else:
            offsets = np.zeros(1)
        weights = _trapezoid_weights(part.points)
        ratio_cap = spec.lip_ratio * np.abs(np.diff(spec.reference.values))

        best_val, best_off = -np.inf, None
        tail = (
            np.stack(
                np.meshgrid(*([offsets] * (n - 1)), indexing="ij"), axis=-1
            ).reshape(-1, n - 1)
            if n > 1
            else np.zeros((1, 0))
        )
        for off0 in offsets:
            block = np.concatenate(
                [np.full((tail.shape[0], 1), off0), tail], axis=1
            )
            f = spec.reference.values[None, :] + block
            dev = np.abs(block) @ weights
            ok = dev <= spec.dev_max + CHECK_SLACK
            ok &= np.all(
                np.abs(np.diff(f, axis=1)) <= ratio_cap[None, :] + CHECK_SLACK, axis=1
            )
            vals = f @ coeff - prob.epsilon * dev
            vals[~ok] = -np.inf
            j = int(np.argmax(vals))
            if vals[j] > best_val:  # strict: earliest grid index wins ties
                best_val, best_off = float(vals[j]), block[j].copy()
        if best_off is None:
            raise GridBudgetError("no feasible grid point (should be impossible)")
        total += best_val
        best_functions.append(
            SampledFunction(part, spec.reference.values + best_off)
        )
    return total, best_functions


def _trapezoid_weights(points: np.ndarray) -> np.ndarray:
    dx = np.diff(points)
    w = np.zeros(points.size)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def enumerate_master(
    prob: ObroProblem, scenarios: list, lp_solver: Solver | None = None
) -> tuple[float, np.ndarray]:
    """Solve the master exactly by trying every segment activation pattern.

    For each assignment of one segment per evaluation coordinate the
    binaries are fixed and the remaining LP solved; the best pattern wins
    (first one on ties, in lexicographic pattern order).
    """
    lp_solver = lp_solver or SimplexSolver()
    mip = build_master(prob, scenarios)
    lay = master_layout(prob)

    seg_counts = [
        prob.terms[ti].spec.partition.n_segments for ti, _, _ in lay.eval_keys
    ]
    n_patterns = int(np.prod(seg_counts)) if seg_counts else 1
    if n_patterns > PATTERN_BUDGET:
        raise GridBudgetError(
            f"pattern budget exceeded: {n_patterns} > {PATTERN_BUDGET:.0e}"
        )

    best = None
    for pattern in itertools.product(*(range(s) for s in seg_counts)):
        lo = mip.lp.lower.copy()
        up = mip.lp.upper.copy()
        for bslice, choice in zip(lay.beta_slices, pattern):
            lo[bslice] = 0.0
            up[bslice] = 0.0
            lo[bslice.start + choice] = 1.0
            up[bslice.start + choice] = 1.0
        out = lp_solver.solve_lp(replace(mip.lp, lower=lo, upper=up))
        if out.status != "optimal":
            continue
        if best is None or out.objective < best[0] - 1e-12:
            best = (float(out.objective), out.x[: lay.n_x].copy())
    if best is None:
        raise RuntimeError("every segment pattern infeasible")
    return best[0], best[1]


@dataclass(frozen=True)
class RefinementTable:
    """Rows of (step, final value, x distance to previous, value distance
    to previous); the first row has no predecessor (NaN distances)."""

    steps: tuple
    values: tuple
    x_distances: tuple
    value_distances: tuple
    increasing_flags: tuple

    @property
    def trend_ok(self) -> bool:
        return not any(self.increasing_flags)

    def to_csv(self) -> str:
        lines = ["step,value,x_distance_to_previous,value_distance_to_previous"]
        for s, v, dx, dv in zip(
            self.steps, self.values, self.x_distances, self.value_distances
        ):
            lines.append(f"{s:.12g},{v:.12g},{dx:.12g},{dv:.12g}")
        return "\n".join(lines) + "\n"


def refinement_study(
    prob_builder,
    steps,
    tol_pairs: float = 0.0,
    tol: float = 1e-2,
    max_iter: int = 200,
    solver: Solver | None = None,
) -> RefinementTable:
    """Run the full loop per partition step and tabulate solution drift.

    ``prob_builder`` maps a partition step to a problem; ``steps`` must be
    strictly decreasing.  A consecutive pair is flagged when its distance
    grows by more than ``tol_pairs`` over the previous pair's, i.e. when
    refinement stops looking convergent.  The reported value per step is
    the final upper bound (the certified worst-case cost).
    """
    steps = [float(s) for s in steps]
    if len(steps) < 2:
        raise ValueError("need at least two steps")
    if any(b >= a for a, b in zip(steps, steps[1:])):
        raise ValueError("steps must be strictly decreasing")

    values, xs = [], []
    for step in steps:
        prob = prob_builder(step)
        try:
            result = run(prob, tol=tol, max_iter=max_iter, solver=solver)
        except Exception as exc:
            raise type(exc)(f"step {step}: {exc}") from exc
        if not result.converged:
            raise RuntimeError(f"step {step}: engine ended {result.status}")
        values.append(result.ub)
        xs.append(result.x)

    x_dist = [np.nan]
    v_dist = [np.nan]
    for prev, cur, pv, cv in zip(xs, xs[1:], values, values[1:]):
        x_dist.append(float(np.max(np.abs(cur - prev))))
        v_dist.append(abs(cv - pv))
    flags = [False, False]
    for i in range(2, len(steps)):
        flags.append(
            x_dist[i] > x_dist[i - 1] + tol_pairs
            or v_dist[i] > v_dist[i - 1] + tol_pairs
        )
    return RefinementTable(
        tuple(steps), tuple(values), tuple(x_dist), tuple(v_dist), tuple(flags)
    )
