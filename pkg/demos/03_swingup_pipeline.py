"""End-to-end swing-up: decompose, wire the mode graph, search, solve.

The full pipeline on one of the benchmark systems (default: configs/
w8.json, the richest one).  Long-horizon planning never touches a
nonlinear program: regions are grown once, composable region pairs become
graph edges costed by product volume, candidate mode sequences come out
of a cost-ordered walk enumerator, and each candidate is one linear
feasibility program.

Run:  python3 demos/03_swingup_pipeline.py [path/to/system.json]
      (takes a minute or two: the decomposition dominates)
"""

import json
import sys as _sys
import time

import numpy as np

from polyplan import PendulumSystem, decompose, default_config
from polyplan.mode_graph import attach_boundary, build_graph, calibrate_costs
from polyplan.planner import plan, verify_solution

config_path = _sys.argv[1] if len(_sys.argv) > 1 else "configs/w8.json"
with open(config_path) as fh:
    config = json.load(fh)
sys = PendulumSystem.from_config(config)
print(f"system: n={sys.spec.n}, T={sys.spec.T}s, u_max={sys.u_max} N·m")

t0 = time.perf_counter()
lib = decompose(sys, default_config(sys, rng_seed=0))
print(f"decomposed into {len(lib.regions)} regions "
      f"[{time.perf_counter() - t0:.1f}s]")

t1 = time.perf_counter()
edges = build_graph(lib, seed=0)
graph = calibrate_costs(edges, l_min=1.0, l_max=9.0, k_max=2.0,
                        vertices=[S.id for S in lib.regions])
cal = graph.calibration
print(f"mode graph: {len(edges)} composable pairs, {len(graph.edges)} kept "
      f"after volume pruning (mu={cal['mu']:.3g}, sigma={cal['sigma']:.3g}) "
      f"[{time.perf_counter() - t1:.1f}s]")

x0 = np.array([0.0, 0.0])
xf = np.array([np.pi, 0.0])
g_full = attach_boundary(graph, x0, xf, lib)

t2 = time.perf_counter()
solution = plan(lib, g_full, x0, xf)
print(f"\nswing-up found [{time.perf_counter() - t2:.2f}s]:")
print(f"  sequence pi = {list(solution.pi)}")
print(f"  candidates tested k = {solution.candidates_tested}")
print(f"  horizon lT = {solution.horizon} s over {solution.l} segments")
print(f"  continuity defect = {solution.defect:.2e}, "
      f"boundary residual = {solution.boundary_residual:.2e}")

report = verify_solution(sys, lib, solution)
print("\nindependent re-verification:")
for name, (ok, worst) in report.items():
    print(f"  {name:>10}: {'pass' if ok else 'FAIL'} (worst {worst:+.2e})")

segments = solution.segments(sys.spec.n)
print("\nper-segment boundary states:")
from polyplan import eval_H
H0, HT = eval_H(sys.spec, 0.0), eval_H(sys.spec, sys.spec.T)
for i, omega in enumerate(segments):
    q0, qd0 = H0 @ omega
    qT, qdT = HT @ omega
    print(f"  segment {i} (region {solution.pi[i]}): "
          f"({q0:+.3f}, {qd0:+.3f}) -> ({qT:+.3f}, {qdT:+.3f})")
