"""H-representation polytope algebra over trajectory-parameter space.

A :class:`PolytopicActionSet` is a nonempty polytope ``{w : A w <= b}``
whose points all parameterize feasible fixed-horizon trajectories.  This
module provides membership and emptiness tests, the continuity-conditioned
product of two action sets re-expressed in the kernel coordinates of the
junction constraint (a polytope of dimension ``2n - r`` with a usable
volume), coordinate bounding boxes, hit-and-run sampling, and Monte Carlo
volume estimation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from . import lp

MEMBERSHIP_TOL = 1e-9
KERNEL_TOL = 1e-10
ZERO_ROW_TOL = 1e-12

REJECTION_BOX = "rejection_box"
GAUSSIAN_PROXY = "gaussian_proxy"

# Below this acceptance fraction the rejection estimate is dominated by
# noise and the Gaussian proxy takes over.
_MIN_ACCEPTANCE = 1e-3


class DimensionMismatch(ValueError):
    pass


class EmptySet(RuntimeError):
    """The polytope has no points."""


class RankDeficientContinuity(ValueError):
    """Continuity matrix does not have full row rank."""


class UnboundedDirection(RuntimeError):
    def __init__(self, coordinate: int):
        super().__init__(f"polytope unbounded along coordinate {coordinate}")
        self.coordinate = coordinate


@dataclass
class PolytopicActionSet:
    """Nonempty polytope ``{w in R^n : A w <= b}`` of feasible trajectory parameters.

    Construction rejects rows with (near-)zero normals and verifies
    nonemptiness with a feasibility LP.
    """

    id: int
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.A.ndim != 2 or self.A.shape[0] != self.b.shape[0]:
            raise DimensionMismatch(f"A {self.A.shape} and b {self.b.shape} do not agree")
        norms = np.linalg.norm(self.A, axis=1)
        if np.any(norms < ZERO_ROW_TOL):
            raise ValueError("constraint rows with zero normal are not allowed")
        if is_empty(self.A, self.b):
            raise EmptySet(f"action set {self.id} is empty")

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass
class ConditionedProduct:
    """Pairs of trajectories from two action sets joined continuously.

    ``null_basis`` (shape 2n x (2n-r), orthonormal columns) parameterizes
    the kernel of the junction continuity matrix; ``lambda_A x <= lambda_b``
    cuts that kernel down to the pairs whose halves belong to the two sets.
    """

    left_id: int
    right_id: int
    lambda_A: np.ndarray
    lambda_b: np.ndarray
    null_basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.null_basis.shape[1]


@dataclass
class VolumeEstimate:
    value: float
    method: str
    samples_used: int
    rng_seed: object


def contains(S: PolytopicActionSet, omega, tol: float = MEMBERSHIP_TOL) -> bool:
    """Membership test; boundary points count as inside."""
    omega = np.asarray(omega, dtype=float).ravel()
    if omega.shape[0] != S.n:
        raise DimensionMismatch(f"point has dimension {omega.shape[0]}, set has {S.n}")
    return bool(np.all(S.A @ omega <= S.b + tol))


def is_empty(A, b) -> bool:
    """True iff no point satisfies ``A w <= b``."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    res = lp.solve_feasibility(lp.LinearProgram(A.shape[1], A, b))
    return res.status == lp.INFEASIBLE


def continuity_kernel(H_c: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``ker H_c`` for a full-row-rank continuity matrix.

    The basis is computed once per junction matrix and shared by every
    mode pair, and it is orthonormal, so volumes measured in the kernel
    coordinates are comparable across pairs.
    """
    H_c = np.asarray(H_c, dtype=float)
    r, m = H_c.shape
    if np.linalg.matrix_rank(H_c) < r:
        raise RankDeficientContinuity(f"continuity matrix has rank < {r}")
    basis = scipy.linalg.null_space(H_c)
    if basis.shape != (m, m - r):
        raise RankDeficientContinuity(
            f"kernel has dimension {basis.shape[1]}, expected {m - r}")
    return basis


def conditioned_product(S_i: PolytopicActionSet, S_j: PolytopicActionSet,
                        H_c: np.ndarray,
                        null_basis: Optional[np.ndarray] = None) -> ConditionedProduct:
    """Continuity-conditioned product of two action sets in kernel coordinates.

    The map ``lam -> null_basis @ lam`` parameterizes exactly the stacked
    vectors ``[w_i; w_j]`` with ``w_i in S_i``, ``w_j in S_j`` and
    ``H_c [w_i; w_j] = 0``.
    """
    if S_i.n != S_j.n:
        raise DimensionMismatch("action sets live in different parameter spaces")
    H_c = np.asarray(H_c, dtype=float)
    if H_c.shape[1] != 2 * S_i.n:
        raise DimensionMismatch(f"continuity matrix has {H_c.shape[1]} columns, expected {2 * S_i.n}")
    if null_basis is None:
        null_basis = continuity_kernel(H_c)
    elif np.max(np.abs(H_c @ null_basis)) > KERNEL_TOL:
        raise RankDeficientContinuity("supplied basis does not span ker H_c")
    lambda_A = np.vstack([S_i.A @ null_basis[:S_i.n, :],
                          S_j.A @ null_basis[S_i.n:, :]])
    lambda_b = np.concatenate([S_i.b, S_j.b])
    return ConditionedProduct(left_id=S_i.id, right_id=S_j.id,
                              lambda_A=lambda_A, lambda_b=lambda_b,
                              null_basis=null_basis)


def bounding_box(A, b) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate [min, max] of ``{x : A x <= b}`` via 2*dim LPs."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    d = A.shape[1]
    lo = np.empty(d)
    hi = np.empty(d)
    for k in range(d):
        c = np.zeros(d)
        c[k] = 1.0
        for sense, dest in (("min", lo), ("max", hi)):
            res = lp.solve_optimize(lp.LinearProgram(d, A, b, objective=c, sense=sense))
            if res.status == lp.UNBOUNDED:
                raise UnboundedDirection(k)
            if res.status == lp.INFEASIBLE:
                raise EmptySet("cannot bound an empty set")
            dest[k] = res.objective_value
    return lo, hi


def hit_and_run(A, b, n_samples: int, rng: np.random.Generator,
                start: Optional[np.ndarray] = None, n_chains: int = 16) -> np.ndarray:
    """Hit-and-run samples from a bounded polytope ``{x : A x <= b}``.

    Runs ``n_chains`` interleaved chains from the Chebyshev center (or
    ``start``, a single point or one row per chain), each step picking a
    uniform direction and a uniform point on the feasible chord.  Returns
    ``n_samples`` states in chain-major step order.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    d = A.shape[1]
    if start is None:
        cheb = lp.chebyshev_center(A, b)
        if cheb is None:
            raise EmptySet("cannot sample an empty set")
        start = cheb[0]
    start = np.asarray(start, dtype=float)
    n_chains = max(1, min(n_chains, n_samples))
    steps = -(-n_samples // n_chains)  # ceil
    if start.ndim == 1:
        X = np.tile(start, (n_chains, 1))
    else:
        if start.shape[0] < n_chains:
            raise ValueError(f"need {n_chains} chain starts, got {start.shape[0]}")
        X = start[:n_chains].copy()
    AT = np.ascontiguousarray(A.T)
    # all randomness drawn upfront; AX updated incrementally to avoid a
    # second matmul per step
    directions = rng.normal(size=(steps, n_chains, d))
    jumps = rng.uniform(size=(steps, n_chains))
    AX = X @ AT
    out = np.empty((steps * n_chains, d))
    with np.errstate(divide="ignore", invalid="ignore"):
        for s in range(steps):
            D = directions[s]
            D /= np.linalg.norm(D, axis=1, keepdims=True)
            AD = D @ AT
            ratio = np.maximum(b[None, :] - AX, 0.0) / AD
            t_hi = np.where(AD > 1e-14, ratio, np.inf).min(axis=1)
            t_lo = np.where(AD < -1e-14, ratio, -np.inf).max(axis=1)
            if np.any(np.isinf(t_hi)) or np.any(np.isinf(t_lo)):
                k = int(np.argmax(np.isinf(t_hi) | np.isinf(t_lo)))
                raise UnboundedDirection(k)
            t = t_lo + jumps[s] * np.maximum(t_hi - t_lo, 0.0)
            X += t[:, None] * D
            AX += t[:, None] * AD
            out[s * n_chains:(s + 1) * n_chains] = X
    return out[:n_samples]


def _gaussian_proxy_value(A, b, budget: int, rng: np.random.Generator) -> float:
    samples = hit_and_run(A, b, budget, rng)
    if samples.shape[1] == 1:
        cov = np.atleast_2d(np.var(samples[:, 0]))
    else:
        cov = np.cov(samples.T)
    cov = 0.5 * (cov + cov.T)
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0 or not np.isfinite(logdet):
        return 0.0
    return float(np.exp(0.5 * logdet))


def _seed_tuple(seed) -> tuple:
    try:
        return tuple(int(s) for s in seed)
    except TypeError:
        return (int(seed),)


def estimate_volume(A, b, budget: int, seed, method: Optional[str] = None,
                    nonempty: bool = False) -> VolumeEstimate:
    """Monte Carlo volume of a bounded polytope.

    Default path draws ``budget`` uniform points in the coordinate
    bounding box and returns box volume times acceptance fraction (an
    unbiased estimate).  When the acceptance fraction falls below 1e-3
    the estimate degrades to a Gaussian proxy: ``exp(0.5 logdet)`` of the
    sample covariance of hit-and-run states, a monotone stand-in used
    only for relative comparisons.  ``method`` forces one of the two
    paths (`"rejection_box"` / `"gaussian_proxy"`); each path has its own
    RNG stream derived from ``seed``, so a forced proxy run reproduces a
    fallback run exactly.  ``nonempty`` skips the emptiness test when the
    caller has already established it.

    An empty input yields value 0 with no sampling.
    """
    if method not in (None, REJECTION_BOX, GAUSSIAN_PROXY):
        raise ValueError(f"unknown method {method!r}")
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if not nonempty and is_empty(A, b):
        return VolumeEstimate(0.0, method or REJECTION_BOX, 0, seed)
    base = _seed_tuple(seed)
    if method != GAUSSIAN_PROXY:
        rng = np.random.default_rng(base + (0,))
        lo, hi = bounding_box(A, b)
        widths = hi - lo
        box_volume = float(np.prod(widths))
        if box_volume <= 0.0:
            # flat along some coordinate: measure zero
            return VolumeEstimate(0.0, REJECTION_BOX, 0, seed)
        pts = rng.uniform(lo, hi, size=(budget, A.shape[1]))
        inside = np.all(pts @ A.T <= b[None, :] + MEMBERSHIP_TOL, axis=1)
        fraction = float(np.mean(inside))
        if method == REJECTION_BOX or fraction >= _MIN_ACCEPTANCE:
            return VolumeEstimate(box_volume * fraction, REJECTION_BOX, budget, seed)
    rng = np.random.default_rng(base + (1,))
    return VolumeEstimate(_gaussian_proxy_value(A, b, budget, rng),
                          GAUSSIAN_PROXY, budget, seed)


def minimal_representation(A, b, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Drop redundant rows of ``{x : A x <= b}`` without changing the set.

    Row i is redundant when maximizing ``a_i . x`` over the remaining
    rows cannot exceed ``b_i``; redundant rows are removed as they are
    found so later tests run against the shrinking system.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    keep = np.ones(A.shape[0], dtype=bool)
    for i in range(A.shape[0]):
        keep[i] = False
        others = keep.copy()
        res = lp.solve_optimize(lp.LinearProgram(
            A.shape[1], A[others], b[others], objective=A[i], sense="max"))
        redundant = (res.status == lp.FEASIBLE
                     and res.objective_value is not None
                     and res.objective_value <= b[i] + tol)
        keep[i] = not redundant
    return A[keep], b[keep]


def regions_to_dict(n: int, regions: Sequence[PolytopicActionSet]) -> dict:
    """JSON form of a region collection: row-major matrices, IEEE doubles."""
    return {
        "n": int(n),
        "regions": [
            {"id": int(S.id), "A": S.A.tolist(), "b": S.b.tolist()}
            for S in regions
        ],
    }


def regions_from_dict(payload: dict) -> tuple[int, list[PolytopicActionSet]]:
    n = int(payload["n"])
    regions = []
    for entry in payload["regions"]:
        S = PolytopicActionSet(id=int(entry["id"]),
                               A=np.asarray(entry["A"], dtype=float),
                               b=np.asarray(entry["b"], dtype=float))
        if S.n != n:
            raise DimensionMismatch(f"region {S.id} has dimension {S.n}, library says {n}")
        regions.append(S)
    return n, regions
