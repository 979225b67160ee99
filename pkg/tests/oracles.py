"""Independent brute-force oracles used to freeze expected test values.

Nothing here may call into the code paths it checks: feasibility is
decided by bounded vertex enumeration, trajectories by numerical
quadrature, and walk streams by exhaustive enumeration.
"""

from __future__ import annotations

import heapq
import itertools

import numpy as np

# Any feasible system with small integer data has a feasible point well
# inside this box (Cramer bound for 3x3 integer matrices with entries in
# [-5, 5] is a few hundred).
_ORACLE_BOX = 1e4
_ORACLE_TOL = 1e-6


def feasible_by_vertex_enumeration(A_ineq, b_ineq, A_eq=None, b_eq=None) -> bool:
    """Decide feasibility of a small system by enumerating candidate vertices.

    Equalities become inequality pairs.  The system is intersected with a
    huge box so a feasible region always has vertices; every subset of n
    constraints is solved and candidates are tested against the full
    system.
    """
    A = np.asarray(A_ineq, dtype=float)
    b = np.asarray(b_ineq, dtype=float).ravel()
    if A_eq is not None and len(A_eq):
        A_eq = np.asarray(A_eq, dtype=float)
        b_eq = np.asarray(b_eq, dtype=float).ravel()
        A = np.vstack([A, A_eq, -A_eq])
        b = np.concatenate([b, b_eq, -b_eq])
    n = A.shape[1]
    A = np.vstack([A, np.eye(n), -np.eye(n)])
    b = np.concatenate([b, np.full(2 * n, _ORACLE_BOX)])

    rows = range(A.shape[0])
    for subset in itertools.combinations(rows, n):
        M = A[list(subset)]
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, b[list(subset)])
        if np.all(A @ x <= b + _ORACLE_TOL):
            return True
    return False


def quadrature_position(qdot_of_t, T: float, t: float, q0: float,
                        n_points: int = 20001) -> float:
    """Angle at ``t`` by trapezoidal integration of a velocity function."""
    ts = np.linspace(0.0, t, n_points)
    return q0 + np.trapezoid(qdot_of_t(ts), ts)


def exhaustive_walks(edges: dict, start, goal, max_length: int, k_max: int):
    """All start-goal walks up to ``max_length`` interior vertices, sorted
    by (cost, length, sequence); the first ``k_max`` of them.

    ``edges`` maps (src, dst) -> cost.  Grown breadth-first over interior
    vertices, so every walk (revisits and self-loops included) appears.
    """
    interior = sorted({v for (u, v) in edges if v not in (start, goal)})
    walks = []
    frontier = []
    for v in interior:
        if (start, v) in edges:
            frontier.append(((v,), edges[(start, v)]))
    while frontier:
        next_frontier = []
        for pi, cost in frontier:
            if (pi[-1], goal) in edges:
                walks.append((cost + edges[(pi[-1], goal)], len(pi), pi))
            if len(pi) < max_length:
                for v in interior:
                    if (pi[-1], v) in edges:
                        next_frontier.append((pi + (v,), cost + edges[(pi[-1], v)]))
        frontier = next_frontier
    walks.sort()
    return walks[:k_max]
