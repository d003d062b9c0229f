"""Piecewise-linear function representation on a fixed partition.

A continuous function is captured by its values at the partition's sample
points and evaluated in between by linear interpolation.  On top of that
representation this module provides the sampled sup norm, the trapezoidal
total-deviation functional, and the membership test for the admissible
neighborhood around a reference curve (sup radius, deviation budget,
rate-of-change ratio bound).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Partition",
    "SampledFunction",
    "NeighborhoodSpec",
    "MembershipReport",
    "make_partition",
    "interp_coefficients",
    "interpolate",
    "sup_distance",
    "trapezoid_deviation",
    "check_neighborhood",
    "sample_reference",
]

# Absolute tolerance used by membership checks; two orders above the LP
# feasibility tolerance, far below any meaningful problem parameter.
DEFAULT_TOL = 1e-9

# How far an evaluation coordinate may overshoot the partition range before
# it is an error rather than solver round-off (clamped silently below this).
RANGE_SLACK = 1e-6


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Strictly increasing sample coordinates spanning a closed interval."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size < 2:
            raise PartitionError("partition needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise PartitionError("partition points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise PartitionError("partition points must be strictly increasing")

    @property
    def n_points(self) -> int:
        return self.points.size

    @property
    def n_segments(self) -> int:
        return self.points.size - 1

    @property
    def lo(self) -> float:
        return float(self.points[0])

    @property
    def hi(self) -> float:
        return float(self.points[-1])

    def same_as(self, other: "Partition") -> bool:
        return self.points.shape == other.points.shape and np.array_equal(
            self.points, other.points
        )


@dataclass(frozen=True)
class SampledFunction:
    """One value per sample point of a partition; PWL in between."""

    partition: Partition
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.partition.n_points,):
            raise PartitionError(
                f"need {self.partition.n_points} values, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise PartitionError("sampled values must be finite")

    def __call__(self, x: float) -> float:
        return interpolate(self, x)


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Admissible set around a reference function.

    Members stay within ``delta_max`` of the reference at every sample
    point, keep their trapezoidal total deviation below ``dev_max``, and
    never change faster than ``lip_ratio`` times the reference between
    adjacent samples.
    """

    reference: SampledFunction
    delta_max: float
    dev_max: float
    lip_ratio: float

    def __post_init__(self):
        if self.delta_max < 0:
            raise ValueError("delta_max must be nonnegative")
        if self.dev_max < 0:
            raise ValueError("dev_max must be nonnegative")
        if self.lip_ratio <= 1:
            raise ValueError("lip_ratio must exceed 1")

    @property
    def partition(self) -> Partition:
        return self.reference.partition


def make_partition(lo: float, hi: float, scheme) -> Partition:
    """Build a partition of [lo, hi] from a segmentation scheme.

    ``scheme`` is either a positive step (even segmentation; the final
    segment is shortened when the step does not divide the interval) or a
    list of ``(sub_lo, sub_hi, step)`` pieces tiling [lo, hi] with no gaps
    or overlaps, each piece gridded evenly with its own step.
    """
    if not lo < hi:
        raise PartitionError(f"need lo < hi, got [{lo}, {hi}]")
    if np.isscalar(scheme):
        return Partition(np.array(_even_points(lo, hi, float(scheme))))

    pieces = [(float(a), float(b), float(h)) for a, b, h in scheme]
    if abs(pieces[0][0] - lo) > 1e-12 * max(1.0, abs(lo)):
        raise PartitionError("first piece must start at the interval lower bound")
    if abs(pieces[-1][1] - hi) > 1e-12 * max(1.0, abs(hi)):
        raise PartitionError("last piece must end at the interval upper bound")
    points: list[float] = []
    for k, (a, b, h) in enumerate(pieces):
        if k > 0 and abs(a - pieces[k - 1][1]) > 1e-12 * max(1.0, abs(a)):
            raise PartitionError(
                f"piece {k} starts at {a}, previous ends at {pieces[k - 1][1]}"
            )
        sub = _even_points(a, b, h)
        points.extend(sub if k == 0 else sub[1:])
    points[0], points[-1] = lo, hi
    return Partition(np.array(points))


def _even_points(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        raise PartitionError(f"step must be positive, got {step}")
    n_full = int(math.floor((hi - lo) / step + 1e-9))
    pts = [lo + p * step for p in range(n_full + 1)]
    if pts[-1] >= hi - 1e-9 * max(1.0, abs(hi - lo)):
        pts[-1] = hi  # step divides the interval; snap the rounded endpoint
    else:
        pts.append(hi)  # short final segment
    return pts


def interp_coefficients(part: Partition, x: float, tol: float = RANGE_SLACK):
    """Locate ``x`` in the partition: (segment index, alpha_lo, alpha_hi).

    Segment indices are 0-based; ``x == alpha_lo * points[p] + alpha_hi *
    points[p + 1]`` with the coefficients in [0, 1] summing to one.  An ``x``
    equal to an interior sample point resolves to the segment on its left
    (alpha_hi = 1).  Coordinates within ``tol`` outside the range are
    clamped; beyond that is an error.
    """
    pts = part.points
    if x < pts[0] - tol or x > pts[-1] + tol:
        raise PartitionError(f"{x} outside partition range [{pts[0]}, {pts[-1]}]")
    x = min(max(float(x), float(pts[0])), float(pts[-1]))
    i = bisect.bisect_left(pts, x)
    p = max(i - 1, 0)
    width = pts[p + 1] - pts[p]
    alpha_hi = (x - pts[p]) / width
    alpha_hi = min(max(alpha_hi, 0.0), 1.0)
    return p, 1.0 - alpha_hi, alpha_hi


def interpolate(f: SampledFunction, x: float, tol: float = RANGE_SLACK) -> float:
    p, a_lo, a_hi = interp_coefficients(f.partition, x, tol=tol)
    return a_lo * f.values[p] + a_hi * f.values[p + 1]


def _require_same_partition(f: SampledFunction, g: SampledFunction):
    if not f.partition.same_as(g.partition):
        raise PartitionError("functions live on different partitions")


def sup_distance(f: SampledFunction, g: SampledFunction) -> float:
    """Sup norm of f - g, exact for PWL functions on a shared partition."""
    _require_same_partition(f, g)
    return float(np.max(np.abs(f.values - g.values)))


def trapezoid_deviation(f: SampledFunction, ref: SampledFunction) -> float:
    """Trapezoidal quadrature of |f - ref| over the partition interval."""
    _require_same_partition(f, ref)
    s = np.abs(f.values - ref.values)
    dx = np.diff(f.partition.points)
    return float(np.sum(0.5 * (s[1:] + s[:-1]) * dx))


@dataclass(frozen=True)
class MembershipReport:
    """Per-constraint outcome of a neighborhood membership check.

    Violation magnitudes are already net of the allowed bound (0 means
    exactly on the boundary); a family passes when its violation does not
    exceed the check tolerance.
    """

    sup_ok: bool
    sup_violation: float
    dev_ok: bool
    dev_violation: float
    ratio_ok: bool
    ratio_violation: float
    tol: float = field(default=DEFAULT_TOL)

    @property
    def passed(self) -> bool:
        return self.sup_ok and self.dev_ok and self.ratio_ok

    def __str__(self):
        rows = [
            ("sup bound", self.sup_ok, self.sup_violation),
            ("deviation budget", self.dev_ok, self.dev_violation),
            ("ratio bound", self.ratio_ok, self.ratio_violation),
        ]
        return "; ".join(
            f"{name}: {'ok' if ok else f'violated by {v:.3e}'}" for name, ok, v in rows
        )


def check_neighborhood(
    f: SampledFunction, spec: NeighborhoodSpec, tol: float = DEFAULT_TOL
) -> MembershipReport:
    """Test sample-point membership of ``f`` in the neighborhood ``spec``.

    Checks, in order: the sup bound at the sample points, the trapezoidal
    deviation budget, and the adjacent-sample ratio bound.  A flat reference
    segment forces the candidate to be flat there as well (the ratio bound
    degenerates to equality).
    """
    ref = spec.reference
    _require_same_partition(f, ref)
    diff = np.abs(f.values - ref.values)
    sup_violation = float(max(np.max(diff) - spec.delta_max, 0.0))
    dev_violation = float(max(trapezoid_deviation(f, ref) - spec.dev_max, 0.0))
    step_f = np.abs(np.diff(f.values))
    step_ref = np.abs(np.diff(ref.values))
    ratio_violation = float(max(np.max(step_f - spec.lip_ratio * step_ref), 0.0))
    return MembershipReport(
        sup_ok=sup_violation <= tol,
        sup_violation=sup_violation,
        dev_ok=dev_violation <= tol,
        dev_violation=dev_violation,
        ratio_ok=ratio_violation <= tol,
        ratio_violation=ratio_violation,
        tol=tol,
    )


def sample_reference(fn, part: Partition) -> SampledFunction:
    """Sample a scalar closed-form evaluator onto a partition."""
    values = np.array([float(fn(x)) for x in part.points])
    if not np.all(np.isfinite(values)):
        bad = part.points[~np.isfinite(values)][0]
        raise ValueError(f"evaluator returned non-finite value at x={bad}")
    return SampledFunction(part, values)
