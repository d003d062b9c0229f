"""Problem description for min-max optimization over uncertain objectives.

A problem couples a polyhedral decision set with a certain linear cost and
a list of uncertain terms.  Each term owns a neighborhood of admissible
functions around its reference curve and the decision coordinates at which
the function is evaluated.  The value functional charges the certain cost,
the interpolated function values, and a deviation penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from obro.pwl import (
    NeighborhoodSpec,
    check_neighborhood,
    interpolate,
    trapezoid_deviation,
)

__all__ = [
    "UncertainTerm",
    "ObroProblem",
    "Scenario",
    "validate",
    "evaluate_v",
    "reference_scenario",
]

FEAS_TOL = 1e-7


@dataclass(frozen=True)
class UncertainTerm:
    """One adversarially chosen function and where it enters the objective."""

    name: str
    spec: NeighborhoodSpec
    eval_indices: tuple

    def __post_init__(self):
        object.__setattr__(self, "eval_indices", tuple(int(e) for e in self.eval_indices))
        if not self.eval_indices:
            raise ValueError(f"term {self.name!r} has no evaluation variables")


@dataclass
class ObroProblem:
    """min over the polyhedron, max over the admissible functions.

    The decision vector may carry auxiliary coordinates beyond the
    evaluation variables; ``rows`` is the polyhedron A x <= b, on top of
    the per-variable box bounds.
    """

    c: np.ndarray
    rows: list
    lower: np.ndarray
    upper: np.ndarray
    epsilon: float
    terms: list
    names: list | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)

    @property
    def n_vars(self) -> int:
        return self.c.size

    def var_name(self, j: int) -> str:
        return self.names[j] if self.names else f"x{j}"


@dataclass(frozen=True)
class Scenario:
    """One generated worst-case function per term, with its deviation value.

    Deviations are stored at generation time so master problems reuse them
    without re-integrating.
    """

    functions: tuple
    deviations: tuple
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "deviations", tuple(float(d) for d in self.deviations))
        if len(self.functions) != len(self.deviations):
            raise ValueError("one deviation value per function required")


def reference_scenario(prob: ObroProblem) -> Scenario:
    """The nominal scenario: every term at its reference, zero deviation."""
    return Scenario(
        functions=tuple(t.spec.reference for t in prob.terms),
        deviations=(0.0,) * len(prob.terms),
        label="reference",
    )


def validate(prob: ObroProblem) -> list:
    """Collect every invariant violation as a human-readable string.

    An empty list is the precondition for the solve entry points.
    """
    issues = []
    n = prob.n_vars
    if prob.lower.shape != (n,) or prob.upper.shape != (n,):
        issues.append("bounds: arrays must match the variable count")
        return issues
    if prob.epsilon <= 0:
        issues.append("epsilon: must be positive")
    if np.any(prob.lower > prob.upper):
        j = int(np.argmax(prob.lower > prob.upper))
        issues.append(f"bounds[{prob.var_name(j)}]: lower exceeds upper")
    for i, r in enumerate(prob.rows):
        if r.coeffs and max(r.coeffs) >= n:
            issues.append(f"rows[{i}]: references variable {max(r.coeffs)} >= {n}")

    seen = {}
    for ti, term in enumerate(prob.terms):
        for e in term.eval_indices:
            if not 0 <= e < n:
                issues.append(f"terms[{ti}]: evaluation index {e} out of range")
                continue
            if e in seen:
                issues.append(
                    f"terms[{ti}]: duplicate evaluation variable "
                    f"{prob.var_name(e)} (also in terms[{seen[e]}])"
                )
            seen[e] = ti
            part = term.spec.partition
            if not (np.isfinite(prob.lower[e]) and np.isfinite(prob.upper[e])):
                issues.append(
                    f"terms[{ti}]: evaluation variable {prob.var_name(e)} "
                    "needs finite box bounds"
                )
            elif prob.lower[e] < part.lo - 1e-12 or prob.upper[e] > part.hi + 1e-12:
                issues.append(
                    f"terms[{ti}]: bounds of {prob.var_name(e)} "
                    f"[{prob.lower[e]}, {prob.upper[e]}] exceed partition "
                    f"[{part.lo}, {part.hi}]"
                )
    return issues


def scenario_issues(prob: ObroProblem, scen: Scenario, tol: float = FEAS_TOL) -> list:
    """Check a scenario against the problem's neighborhoods."""
    issues = []
    if len(scen.functions) != len(prob.terms):
        return [f"scenario has {len(scen.functions)} functions, need {len(prob.terms)}"]
    for ti, (term, f, d) in enumerate(zip(prob.terms, scen.functions, scen.deviations)):
        report = check_neighborhood(f, term.spec, tol=tol)
        if not report.passed:
            issues.append(f"terms[{ti}]: {report}")
        if abs(d - trapezoid_deviation(f, term.spec.reference)) > 1e-9:
            issues.append(f"terms[{ti}]: stored deviation disagrees with quadrature")
    return issues


def evaluate_v(
    prob: ObroProblem, scen: Scenario, x: np.ndarray, feas_tol: float = FEAS_TOL
) -> float:
    """Value of the objective functional at (scenario, decision).

    c.x plus the scenario functions interpolated at every evaluation
    coordinate, minus epsilon times the stored total deviations.
    """
    x = np.asarray(x, dtype=float)
    viol = _polyhedron_violation(prob, x)
    if viol > feas_tol:
        raise ValueError(f"decision vector infeasible by {viol:.3e}")
    total = float(prob.c @ x)
    for term, f, dev in zip(prob.terms, scen.functions, scen.deviations):
        for e in term.eval_indices:
            total += interpolate(f, x[e])
        total -= prob.epsilon * dev
    return total


def _polyhedron_violation(prob: ObroProblem, x: np.ndarray) -> float:
    worst = max(
        np.max(prob.lower - x, initial=0.0), np.max(x - prob.upper, initial=0.0)
    )
    for r in prob.rows:
        lhs = sum(v * x[j] for j, v in r.coeffs.items())
        if r.sense == "<=":
            worst = max(worst, lhs - r.rhs)
        elif r.sense == ">=":
            worst = max(worst, r.rhs - lhs)
        else:
            worst = max(worst, abs(lhs - r.rhs))
    return float(worst)
