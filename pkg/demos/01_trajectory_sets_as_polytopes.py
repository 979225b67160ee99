"""A first look at trajectory sets as polytopes.

A fixed-horizon pendulum trajectory is a vector omega = [q0, c_0, ...]:
the initial angle plus Bernstein control values for the angular velocity.
The state at any time is H(t) @ omega, linear in omega, so a box of
parameter values is literally a box full of trajectories, and asking
"does this set contain a trajectory from x0 to xf?" is a linear program.

Run:  python3 demos/01_trajectory_sets_as_polytopes.py
"""

import numpy as np

from polyplan import BasisSpec, PolytopicActionSet, contains, eval_H
from polyplan import lp

spec = BasisSpec(n=5, T=0.5)
print(f"basis: n={spec.n} parameters over T={spec.T}s, "
      f"velocity degree {spec.velocity_degree}")

H0 = eval_H(spec, 0.0)
HT = eval_H(spec, spec.T)
print("\nH(0) selects [q0, c_0] as the initial state:")
print(H0)
print("\nH(T) mixes all controls into the final state:")
print(HT.round(4))

# an action set: every parameter vector in this box is "allowed"
n = spec.n
A = np.vstack([np.eye(n), -np.eye(n)])
b = np.concatenate([np.full(n, 2.0), np.full(n, 2.0)])
action_set = PolytopicActionSet(id=0, A=A, b=b)
print(f"\naction set: box of half-width 2 in R^{n}, "
      f"{A.shape[0]} inequality rows")

# boundary-constrained feasibility: find a trajectory from x0 to xf
x0 = np.array([0.0, 0.0])
xf = np.array([0.4, 1.0])
program = lp.LinearProgram(
    n, action_set.A, action_set.b,
    A_eq=np.vstack([H0, HT]), b_eq=np.concatenate([x0, xf]))
result = lp.solve_feasibility(program)
print(f"\ntrajectory from {x0} to {xf}: {result.status}")
omega = result.witness
print("witness omega:", omega.round(4))
print("member of the action set:", contains(action_set, omega))

print("\nstate samples along the witness trajectory:")
print(f"{'t':>6} {'q':>8} {'qdot':>8}")
for t in np.linspace(0.0, spec.T, 6):
    q, qd = eval_H(spec, t) @ omega
    print(f"{t:6.2f} {q:8.4f} {qd:8.4f}")

# an unreachable boundary pair: the LP says so immediately
xf_bad = np.array([40.0, 0.0])
program = lp.LinearProgram(
    n, action_set.A, action_set.b,
    A_eq=np.vstack([H0, HT]), b_eq=np.concatenate([x0, xf_bad]))
print(f"\ntrajectory from {x0} to {xf_bad}: "
      f"{lp.solve_feasibility(program).status}")
