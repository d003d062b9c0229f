"""Alternate worst-case generation and decision updates until they agree.

The instance has two cost pockets: whichever one the decision sits in,
the adversary lifts it, so the decision hops to the other until the
lifted pockets balance.  Upper bounds come from the adversary, lower
bounds from the cut collection; the loop stops when they pinch or when a
worst case repeats (a fixed point, already a semi-global saddle point).
"""

import numpy as np

from obro.engine import run, verify_saddle
from obro.model import ObroProblem, UncertainTerm
from obro.pwl import NeighborhoodSpec, Partition, SampledFunction

part = Partition(np.array([0.0, 1 / 3, 2 / 3, 1.0]))
ref = SampledFunction(part, np.array([0.4, 0.0, 0.05, 0.5]))
spec = NeighborhoodSpec(ref, delta_max=0.2, dev_max=10.0, lip_ratio=3.0)
prob = ObroProblem(
    c=np.zeros(1),
    rows=[],
    lower=np.zeros(1),
    upper=np.ones(1),
    epsilon=0.1,
    terms=[UncertainTerm("pockets", spec, (0,))],
    names=["x"],
)

result = run(prob, tol=1e-6, max_iter=50)

print(f"{'k':>3} {'x':>10} {'adversary':>10} {'UB':>10} {'LB':>10} {'gap':>10}")
for r in result.history:
    print(f"{r.k:3d} {r.x[0]:10.6f} {r.sub_value:10.6f} {r.ub:10.6f} {r.lb:10.6f} {r.gap:10.2e}")
print()
print(f"terminated: {result.status} ({result.message})")
print(f"final decision x* = {result.x[0]:.6f}, guaranteed cost {result.ub:.6f}")
print(f"worst cases stored: {len(result.scenarios)}")
print()

report = verify_saddle(prob, result, tol=1e-4)
for name, ok, value in report.rows():
    print(f"{name:<26} {'pass' if ok else 'FAIL'}  ({value:.2e})")
