"""Decision update over accumulated scenarios: the outer MILP.

The epigraph variable dominates one cut per stored scenario.  Every
evaluation coordinate gets its own interpolation block: segment-activation
binaries plus interpolation weights, linked so at most two adjacent
weights are nonzero.  All cuts share the weights, since every scenario is
sampled on the same partition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from obro.linsolve import (
    LinearProgram,
    MixedIntegerProgram,
    Row,
    Solver,
    solve_milp,
)
from obro.model import ObroProblem, scenario_issues, validate

__all__ = ["MasterLayout", "master_layout", "build_master", "solve_master"]


class MasterError(RuntimeError):
    pass


@dataclass(frozen=True)
class MasterLayout:
    """Column map of the master MILP: decision vector, epigraph variable,
    then per evaluation coordinate a weight block and a binary block."""

    n_x: int
    eta: int
    alpha_slices: tuple  # (term, eval) -> slice, flattened in term order
    beta_slices: tuple
    eval_keys: tuple  # (term index, eval position, eval var index)
    n_total: int

    def alpha(self, term: int, pos: int) -> slice:
        return self.alpha_slices[self._flat(term, pos)]

    def beta(self, term: int, pos: int) -> slice:
        return self.beta_slices[self._flat(term, pos)]

    def _flat(self, term: int, pos: int) -> int:
        for k, (ti, pi, _) in enumerate(self.eval_keys):
            if ti == term and pi == pos:
                return k
        raise KeyError((term, pos))


def master_layout(prob: ObroProblem) -> MasterLayout:
    n_x = prob.n_vars
    base = n_x + 1
    alphas, betas, keys = [], [], []
    for ti, term in enumerate(prob.terms):
        n = term.spec.partition.n_points
        for pi, e in enumerate(term.eval_indices):
            alphas.append(slice(base, base + n))
            base += n
            betas.append(slice(base, base + n - 1))
            base += n - 1
            keys.append((ti, pi, e))
    return MasterLayout(n_x, n_x, tuple(alphas), tuple(betas), tuple(keys), base)


def build_master(prob: ObroProblem, scenarios: list) -> MixedIntegerProgram:
    """Assemble the scenario-cut MILP over the stored worst cases."""
    issues = validate(prob)
    if issues:
        raise ValueError("invalid problem: " + "; ".join(issues))
    if not scenarios:
        raise ValueError("need at least one scenario")
    for li, scen in enumerate(scenarios):
        bad = scenario_issues(prob, scen)
        if bad:
            raise ValueError(f"scenario {li} invalid: " + "; ".join(bad))

    lay = master_layout(prob)
    n = lay.n_total
    c = np.zeros(n)
    c[lay.eta] = 1.0
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    lower[: lay.n_x] = prob.lower
    upper[: lay.n_x] = prob.upper
    names = [prob.var_name(j) for j in range(lay.n_x)] + ["eta"]
    binaries = []

    rows = [
        Row(dict(r.coeffs), r.sense, r.rhs, r.name or f"poly[{i}]")
        for i, r in enumerate(prob.rows)
    ]

    for k, (ti, pi, e) in enumerate(lay.eval_keys):
        term = prob.terms[ti]
        part = term.spec.partition
        np_, ns = part.n_points, part.n_segments
        a, b = lay.alpha_slices[k], lay.beta_slices[k]
        tag = f"{term.name}@{prob.var_name(e)}"
        names.extend(f"{tag}.alpha[{p}]" for p in range(np_))
        names.extend(f"{tag}.beta[{p}]" for p in range(ns))
        lower[a], upper[a] = 0.0, 1.0
        lower[b], upper[b] = 0.0, 1.0
        binaries.extend(range(b.start, b.stop))

        rows.append(
            Row({b.start + p: 1.0 for p in range(ns)}, "=", 1.0, f"{tag}.one_segment")
        )
        rows.append(
            Row({a.start + p: 1.0 for p in range(np_)}, "=", 1.0, f"{tag}.weights")
        )
        for p in range(np_):
            link = {a.start + p: 1.0}
            if p > 0:
                link[b.start + p - 1] = -1.0
            if p < ns:
                link[b.start + p] = -1.0
            rows.append(Row(link, "<=", 0.0, f"{tag}.adjacent[{p}]"))
        link = {a.start + p: float(part.points[p]) for p in range(np_)}
        link[e] = -1.0
        rows.append(Row(link, "=", 0.0, f"{tag}.coordinate"))

    for li, scen in enumerate(scenarios):
        coeffs = {j: float(v) for j, v in enumerate(prob.c) if v != 0.0}
        coeffs[lay.eta] = coeffs.get(lay.eta, 0.0) - 1.0
        rhs = 0.0
        for k, (ti, pi, e) in enumerate(lay.eval_keys):
            a = lay.alpha_slices[k]
            values = scen.functions[ti].values
            for p in range(values.size):
                coeffs[a.start + p] = coeffs.get(a.start + p, 0.0) + float(values[p])
        rhs += prob.epsilon * sum(scen.deviations)
        rows.append(Row(coeffs, "<=", rhs, f"cut[{li}]"))

    lp = LinearProgram("min", c, rows, lower, upper, names)
    return MixedIntegerProgram(lp, tuple(binaries))


def solve_master(
    prob: ObroProblem, scenarios: list, solver: Solver | None = None
) -> tuple[np.ndarray, float]:
    """Solve the scenario-cut MILP; returns the decision and its bound."""
    mip = build_master(prob, scenarios)
    out = solve_milp(mip, solver)
    if out.status == "infeasible":
        raise MasterError("decision polyhedron is empty")
    if out.status != "optimal":
        raise MasterError(f"master MILP ended {out.status}")
    lay = master_layout(prob)
    x = out.x[: lay.n_x].copy()
    eta = float(out.x[lay.eta])
    return x, eta
