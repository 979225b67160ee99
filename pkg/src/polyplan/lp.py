"""Linear feasibility and optimization kernel.

Every geometric predicate in this package (emptiness, membership,
reachability, stacked sequence programs) reduces to a small dense linear
program.  This module wraps scipy's HiGHS dual simplex behind a fixed
contract: feasible results always carry a witness satisfying the raw
constraint data within ``FEASIBILITY_TOL``, and identical inputs produce
identical outputs.

Variables are free by default (no implicit nonnegativity).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

# Witnesses returned as feasible satisfy A x <= b + FEASIBILITY_TOL and
# |A_eq x - b_eq| <= FEASIBILITY_TOL componentwise.
FEASIBILITY_TOL = 1e-7

# Radius cap used when the inscribed-ball program is unbounded (the set
# contains balls of arbitrary radius).
_RADIUS_CAP = 1e9

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class MalformedProgram(ValueError):
    """LP data with mismatched shapes, non-finite entries, or a missing objective."""


class SolverFailure(RuntimeError):
    """The backend solver returned a numerical-failure status."""


@dataclass
class LinearProgram:
    """Dense linear program: min/max c.x  s.t.  A_ineq x <= b_ineq, A_eq x = b_eq.

    ``objective`` may be None for pure feasibility problems.  Empty
    constraint blocks are represented by arrays with zero rows.
    """

    n_vars: int
    A_ineq: np.ndarray
    b_ineq: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    objective: Optional[np.ndarray] = None
    sense: str = "min"

    def __post_init__(self):
        n = int(self.n_vars)
        if n < 1:
            raise MalformedProgram("n_vars must be >= 1")
        self.n_vars = n
        self.A_ineq = _as_matrix(self.A_ineq, n, "A_ineq")
        self.b_ineq = _as_vector(self.b_ineq, self.A_ineq.shape[0], "b_ineq")
        if self.A_eq is None:
            self.A_eq = np.zeros((0, n))
        self.A_eq = _as_matrix(self.A_eq, n, "A_eq")
        if self.b_eq is None:
            self.b_eq = np.zeros(0)
        self.b_eq = _as_vector(self.b_eq, self.A_eq.shape[0], "b_eq")
        if self.objective is not None:
            self.objective = _as_vector(np.asarray(self.objective), n, "objective")
        if self.sense not in ("min", "max"):
            raise MalformedProgram("sense must be 'min' or 'max'")


@dataclass
class LPResult:
    status: str
    witness: Optional[np.ndarray] = None
    objective_value: Optional[float] = None


def _as_matrix(A, n_cols, name):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[1] != n_cols:
        raise MalformedProgram(f"{name} must be a matrix with {n_cols} columns, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise MalformedProgram(f"{name} contains non-finite entries")
    return A

def _as_vector(b, n_rows, name):
    b = np.asarray(b, dtype=float).ravel()
    if b.shape[0] != n_rows:
        raise MalformedProgram(f"{name} must have length {n_rows}, got {b.shape[0]}")
    if not np.all(np.isfinite(b)):
        raise MalformedProgram(f"{name} contains non-finite entries")
    return b


def _linprog_robust(c, A_ub, b_ub, A_eq, b_eq, bounds):
    """Dual simplex first; on a numerical-failure status retry with the
    interior-point method.  The fallback chain is fixed, so results stay
    deterministic for identical inputs."""
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs-ds")
    if res.status == 4:
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=bounds, method="highs-ipm")
    return res


def _run_linprog(c, lp: LinearProgram):
    A_ub = lp.A_ineq if lp.A_ineq.shape[0] else None
    b_ub = lp.b_ineq if lp.A_ineq.shape[0] else None
    A_eq = lp.A_eq if lp.A_eq.shape[0] else None
    b_eq = lp.b_eq if lp.A_eq.shape[0] else None
    return _linprog_robust(c, A_ub, b_ub, A_eq, b_eq, (None, None))


def solve_feasibility(lp: LinearProgram) -> LPResult:
    """Decide feasibility of the constraint system, ignoring any objective.

    Returns a feasible result with a witness, or an infeasible result.
    A feasibility problem is never unbounded.
    """
    if lp.A_ineq.shape[0] == 0 and lp.A_eq.shape[0] == 0:
        return LPResult(FEASIBLE, witness=np.zeros(lp.n_vars))
    res = _run_linprog(np.zeros(lp.n_vars), lp)
    if res.status == 0:
        return LPResult(FEASIBLE, witness=np.asarray(res.x, dtype=float))
    if res.status == 2:
        return LPResult(INFEASIBLE)
    raise SolverFailure(f"unexpected solver status {res.status}: {res.message}")


def solve_optimize(lp: LinearProgram) -> LPResult:
    """Optimize the program's objective; requires ``lp.objective``."""
    if lp.objective is None:
        raise MalformedProgram("solve_optimize requires an objective")
    c = lp.objective if lp.sense == "min" else -lp.objective
    res = _run_linprog(c, lp)
    if res.status == 0:
        value = float(res.fun) if lp.sense == "min" else -float(res.fun)
        return LPResult(FEASIBLE, witness=np.asarray(res.x, dtype=float), objective_value=value)
    if res.status == 2:
        return LPResult(INFEASIBLE)
    if res.status == 3:
        return LPResult(UNBOUNDED)
    raise SolverFailure(f"unexpected solver status {res.status}: {res.message}")


def chebyshev_center(A, b) -> Optional[tuple[np.ndarray, float]]:
    """Center and radius of the largest ball inscribed in {x : A x <= b}.

    Solves  max r  s.t.  a_i . x + ||a_i|| r <= b_i,  r >= 0.  Returns
    ``None`` when the set is empty.  A zero radius is possible for
    degenerate (lower-dimensional) nonempty sets.  If the set contains
    arbitrarily large balls the radius is capped at ``_RADIUS_CAP``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if A.ndim != 2 or A.shape[0] != b.shape[0]:
        raise MalformedProgram(f"inconsistent shapes A {A.shape}, b {b.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise MalformedProgram("non-finite entries in A or b")
    m, n = A.shape
    if m == 0:
        return np.zeros(n), _RADIUS_CAP

    row_norms = np.sqrt(np.einsum("ij,ij->i", A, A))
    A_aug = np.hstack([A, row_norms[:, None]])
    c = np.zeros(n + 1)
    c[n] = -1.0
    bounds = [(None, None)] * n + [(0.0, None)]
    res = _linprog_robust(c, A_aug, b, None, None, bounds)
    if res.status == 2:
        return None
    if res.status == 3:
        bounds[n] = (0.0, _RADIUS_CAP)
        res = _linprog_robust(c, A_aug, b, None, None, bounds)
        if res.status != 0:
            raise SolverFailure(f"unexpected solver status {res.status}: {res.message}")
    elif res.status != 0:
        raise SolverFailure(f"unexpected solver status {res.status}: {res.message}")
    x = np.asarray(res.x, dtype=float)
    return x[:n], float(x[n])
