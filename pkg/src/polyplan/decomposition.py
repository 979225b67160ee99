"""Growth of torque-feasible parameter regions from free-fall seeds.

Region growth starts from the parameter box and hunts for counterexamples
(parameter vectors violating the torque bound) on spheres of increasing
radius around a feasible seed.  Each violator found is bisected back to
the feasibility boundary along its ray from the seed, and the region is
cut by the tangent halfspace of the violation surface there, oriented to
keep the seed.  A radius pass with no violators lets the sphere expand;
after the radius ladder, interior hit-and-run batches scrub out what the
shells missed.

The resulting polytopes are inner approximations of the torque-feasible
set at the check times: every interior point is a feasible trajectory,
which is what makes the downstream sequence programs sound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import lp
from .basis import BasisSpec
from .pendulum import (PendulumSystem, ZeroTorqueAmbiguity, max_violation,
                       max_violation_batch, fit_free_fall, torques_at_checks,
                       violation_gradient)
from .polytope import (PolytopicActionSet, contains, hit_and_run,
                       minimal_representation)

_BOUNDARY_TOL = 1e-6
_MIN_CHEBYSHEV_RADIUS = 1e-4
_MEMBERSHIP_TOL = 1e-9

# consecutive violation-free interior batches required before a region is
# accepted; three batches keep the residual violating volume fraction well
# below the 1e-3 audit threshold
_SCRUB_CLEAN_PASSES = 3

# scrub cuts are placed where the torque excess equals -margin * u_max
# rather than exactly 0; the shaved layer is thin but it converts the
# curved violating shells into strictly interior-feasible territory.
# Samples inside the buffer (upper half of the margin band) also trigger
# cuts: a pocket with negligible violating volume still has a large
# buffer halo, which is what makes it findable by sampling.
_SCRUB_MARGIN = 0.06


class InfeasibleSeed(ValueError):
    """Seed violates the torque bound or lies outside the parameter box."""


class NoSeedsAccepted(RuntimeError):
    """No grid seed produced a region."""


@dataclass
class DecompositionConfig:
    """Knobs for seeding and growing regions.

    ``q0_seeds`` / ``qdot0_seeds`` are (low, high, count) ranges for the
    free-fall seed grid.  ``param_box`` is the pair (lower, upper) of
    per-coordinate bounds on the parameter vector; region growth starts
    from this box.  Growth samples ``sphere_samples`` points per radius,
    starting at radius ``rho0`` and multiplying by ``growth`` after every
    clean pass, up to ``rho_max`` or ``max_cuts`` cutting planes.  After
    the radius ladder, interior batches of ``scrub_samples`` points are
    cut the same way until several consecutive batches come back clean,
    which is what certifies the region against uniform interior audits.
    """

    q0_seeds: tuple[float, float, int]
    qdot0_seeds: tuple[float, float, int]
    param_box: tuple[np.ndarray, np.ndarray]
    sphere_samples: int = 2048
    rho0: float = 0.25
    growth: float = 1.2
    rho_max: float = 50.0
    max_cuts: int = 400
    scrub_samples: int = 16384
    rng_seed: int = 0

    def __post_init__(self):
        lo = np.asarray(self.param_box[0], dtype=float)
        hi = np.asarray(self.param_box[1], dtype=float)
        if lo.shape != hi.shape or np.any(hi <= lo) or not np.all(np.isfinite(lo)) \
                or not np.all(np.isfinite(hi)):
            raise ValueError("param_box must be finite per-coordinate bounds with hi > lo")
        self.param_box = (lo, hi)
        if self.sphere_samples < 2 * lo.shape[0]:
            raise ValueError("sphere_samples must be at least twice the parameter dimension")
        if self.growth <= 1.0:
            raise ValueError("radius growth factor must exceed 1")

    def to_dict(self) -> dict:
        return {
            "q0_seeds": list(self.q0_seeds),
            "qdot0_seeds": list(self.qdot0_seeds),
            "param_box": [self.param_box[0].tolist(), self.param_box[1].tolist()],
            "sphere_samples": int(self.sphere_samples),
            "rho0": self.rho0,
            "growth": self.growth,
            "rho_max": self.rho_max,
            "max_cuts": int(self.max_cuts),
            "scrub_samples": int(self.scrub_samples),
            "rng_seed": int(self.rng_seed),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DecompositionConfig":
        return cls(
            q0_seeds=tuple(payload["q0_seeds"]),
            qdot0_seeds=tuple(payload["qdot0_seeds"]),
            param_box=(np.asarray(payload["param_box"][0], dtype=float),
                       np.asarray(payload["param_box"][1], dtype=float)),
            sphere_samples=int(payload["sphere_samples"]),
            rho0=float(payload["rho0"]),
            growth=float(payload["growth"]),
            rho_max=float(payload["rho_max"]),
            max_cuts=int(payload["max_cuts"]),
            scrub_samples=int(payload["scrub_samples"]),
            rng_seed=int(payload["rng_seed"]),
        )


def default_config(sys: PendulumSystem, rng_seed: int = 0) -> DecompositionConfig:
    """Defaults scaled by the natural frequency sqrt(g/l).

    Swing velocities stay within a few multiples of that scale, so the
    velocity control values are boxed at 3x and the seed-grid velocities
    at 2x; the initial angle covers two turns.
    """
    omega_n = math.sqrt(sys.g / sys.l) if sys.g > 0 else 1.0
    n = sys.spec.n
    lo = np.concatenate([[-2 * math.pi], -3 * omega_n * np.ones(n - 1)])
    hi = -lo
    return DecompositionConfig(
        q0_seeds=(-math.pi, 2 * math.pi, 9),
        qdot0_seeds=(-2 * omega_n, 2 * omega_n, 9),
        param_box=(lo, hi),
        rho_max=float(np.linalg.norm(hi - lo)),
        rng_seed=rng_seed,
    )


@dataclass
class RegionLibrary:
    """A system's decomposition: regions, the seeds that grew them, and the config."""

    system: PendulumSystem
    regions: list[PolytopicActionSet]
    seeds: list[np.ndarray]
    config: DecompositionConfig

    @property
    def spec(self) -> BasisSpec:
        return self.system.spec

    def region_by_id(self, region_id: int) -> PolytopicActionSet:
        return self._index[region_id]

    def __post_init__(self):
        self._index = {S.id: S for S in self.regions}


def _unit_sphere(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    d = rng.normal(size=(count, dim))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _bisect_to_boundary(sys: PendulumSystem, seed: np.ndarray, violators: np.ndarray,
                        target: float = 0.0, max_iter: int = 40
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Points with ``excess = target`` along each seed->violator ray.

    The seed side has excess <= 0, the violator side > 0; bisection on
    the ray parameters (vectorized over violators) converges far below
    the 1e-6 boundary tolerance.  ``target`` 0 lands on the boundary;
    negative lands strictly inside the feasible surface (falls back to 0
    when the seed cannot bracket it).  Returns the points and the check
    index binding at each.
    """
    _, seed_excess = max_violation(sys, seed)
    if seed_excess >= target:
        target = 0.0
    count = violators.shape[0]
    t_lo = np.zeros(count)
    t_hi = np.ones(count)
    rays = violators - seed[None, :]
    points = violators.copy()
    ks = np.zeros(count, dtype=int)
    for _ in range(max_iter):
        t_mid = 0.5 * (t_lo + t_hi)
        points = seed[None, :] + t_mid[:, None] * rays
        ks, excesses = max_violation_batch(sys, points)
        above = excesses > target
        t_hi = np.where(above, t_mid, t_hi)
        t_lo = np.where(above, t_lo, t_mid)
    return points, ks


def _boundary_normal(sys: PendulumSystem, point: np.ndarray, worst_k: int) -> Optional[np.ndarray]:
    """Violation-surface normal at a boundary point, trying other check
    times if the torque vanishes at the worst one."""
    u = np.abs(torques_at_checks(sys, point))
    order = np.argsort(-u)
    candidates = [worst_k] + [int(k) for k in order if int(k) != worst_k]
    for k in candidates:
        try:
            return violation_gradient(sys, point, k)
        except ZeroTorqueAmbiguity:
            continue
    return None


class _RegionBuilder:
    """Mutable halfspace system plus the bisect-and-cut step shared by
    the sphere ladder and the interior scrub."""

    def __init__(self, sys: PendulumSystem, seed: np.ndarray, cfg: DecompositionConfig):
        lo, hi = cfg.param_box
        n = lo.shape[0]
        self.sys = sys
        self.seed = seed
        self.max_cuts = cfg.max_cuts
        self.A = np.vstack([np.eye(n), -np.eye(n)])
        self.b = np.concatenate([hi, -lo])
        self.cuts = 0

    @property
    def full(self) -> bool:
        return self.cuts >= self.max_cuts

    def inside(self, points: np.ndarray) -> np.ndarray:
        return np.all(points @ self.A.T <= self.b[None, :] + _MEMBERSHIP_TOL, axis=1)

    def cut_violators(self, violators: np.ndarray, excesses: np.ndarray,
                      target: float = 0.0) -> None:
        """Cut at the bisected boundary point of each violator, worst first.

        Boundary points are bisected for the whole batch at once (they do
        not depend on the evolving halfspace system); violators excluded
        by a cut placed earlier in the same batch are then skipped.  Cuts
        are oriented to keep the seed.
        """
        order = np.argsort(-excesses)
        boundaries, worst_ks = _bisect_to_boundary(self.sys, self.seed,
                                                   violators[order], target=target)
        for violator, boundary, worst_k in zip(violators[order], boundaries, worst_ks):
            if np.any(self.A @ violator > self.b + _MEMBERSHIP_TOL):
                continue
            normal = _boundary_normal(self.sys, boundary, int(worst_k))
            if normal is None:
                continue
            norm = np.linalg.norm(normal)
            if norm < 1e-12:
                continue
            normal = normal / norm
            if normal @ (self.seed - boundary) > 0.0:
                normal = -normal
            self.A = np.vstack([self.A, normal])
            self.b = np.append(self.b, normal @ boundary)
            self.cuts += 1
            if self.full:
                return


def grow_region(sys: PendulumSystem, seed: np.ndarray, cfg: DecompositionConfig,
                rng: Optional[np.random.Generator] = None) -> PolytopicActionSet:
    """Grow one polytopic region of torque-feasible parameters around a seed.

    Phase one expands the sampling sphere per the radius schedule, cutting
    every violator found until a radius pass comes back clean.  Phase two
    scrubs the interior: batches of hit-and-run samples are cut the same
    way until one full batch is free of violations, so the region also
    holds up under uniform interior auditing, not just on the probed
    shells.
    """
    seed = np.asarray(seed, dtype=float)
    _, excess = max_violation(sys, seed)
    if excess > 0.0:
        raise InfeasibleSeed(f"seed violates the torque bound by {excess:.3g}")
    lo, hi = cfg.param_box
    n = lo.shape[0]
    if seed.shape[0] != n:
        raise InfeasibleSeed(f"seed has dimension {seed.shape[0]}, box has {n}")
    if np.any(seed < lo - _MEMBERSHIP_TOL) or np.any(seed > hi + _MEMBERSHIP_TOL):
        raise InfeasibleSeed("seed lies outside the parameter box")
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)

    builder = _RegionBuilder(sys, seed, cfg)
    rho = cfg.rho0
    while rho <= cfg.rho_max and not builder.full:
        points = seed + rho * _unit_sphere(rng, cfg.sphere_samples, n)
        candidates = points[builder.inside(points)]
        if candidates.shape[0]:
            _, excesses = max_violation_batch(sys, candidates)
            mask = excesses > 0.0
            if np.any(mask):
                builder.cut_violators(candidates[mask], excesses[mask])
                continue  # repeat this radius until a pass is clean
        rho *= cfg.growth

    # scrub cuts land slightly inside the feasible surface so each one
    # removes the whole violating shell left by tangency at that spot
    cut_target = -_SCRUB_MARGIN * sys.u_max
    trigger = 0.5 * cut_target
    n_chains = 64
    hunt_samples = max(cfg.scrub_samples // 4, 2048)
    clean_streak = 0
    starts = None
    while not builder.full and clean_streak < _SCRUB_CLEAN_PASSES:
        # small batches while cuts are still firing, full batches only to
        # certify the clean streak
        count = hunt_samples if clean_streak == 0 else cfg.scrub_samples
        samples = hit_and_run(builder.A, builder.b, count, rng,
                              start=starts, n_chains=n_chains)
        # chains continue across batches (ends become next starts) so
        # mixing accumulates over the whole scrub; drop carried states
        # that newer cuts have excluded
        tail = samples[-n_chains:]
        keep = builder.inside(tail)
        starts = tail[keep] if np.count_nonzero(keep) >= n_chains else None
        _, excesses = max_violation_batch(sys, samples)
        mask = excesses > trigger
        if not np.any(mask):
            clean_streak += 1
            continue
        clean_streak = 0
        builder.cut_violators(samples[mask], excesses[mask], target=cut_target)
        if starts is not None and not np.all(builder.inside(starts)):
            starts = None
    return PolytopicActionSet(id=-1, A=builder.A, b=builder.b)


def decompose(sys: PendulumSystem, cfg: Optional[DecompositionConfig] = None) -> RegionLibrary:
    """Build a region library from a grid of free-fall seeds.

    Grid points are visited row-major (initial angle outer, initial
    velocity inner).  Seeds whose free-fall fit violates the torque bound
    are rejected; seeds already covered by an existing region are
    skipped; grown regions with Chebyshev radius below 1e-4 are dropped.
    Region ids follow creation order.  Each growth draws from an RNG
    sub-seeded by (rng_seed, grid index), so the library is a pure
    function of (system, config).
    """
    if cfg is None:
        cfg = default_config(sys)
    q0_lo, q0_hi, q0_count = cfg.q0_seeds
    qd_lo, qd_hi, qd_count = cfg.qdot0_seeds
    q0_values = np.linspace(q0_lo, q0_hi, int(q0_count))
    qd_values = np.linspace(qd_lo, qd_hi, int(qd_count))

    regions: list[PolytopicActionSet] = []
    seeds: list[np.ndarray] = []
    for idx, (q0, qd0) in enumerate((a, c) for a in q0_values for c in qd_values):
        omega = fit_free_fall(sys, q0, qd0)
        if omega is None:
            continue
        lo, hi = cfg.param_box
        if np.any(omega < lo) or np.any(omega > hi):
            continue
        if any(contains(S, omega) for S in regions):
            continue
        rng = np.random.default_rng([cfg.rng_seed, idx])
        region = grow_region(sys, omega, cfg, rng=rng)
        cheb = lp.chebyshev_center(region.A, region.b)
        if cheb is None or cheb[1] < _MIN_CHEBYSHEV_RADIUS:
            continue
        # most accumulated cuts end up redundant; shrinking to a minimal
        # representation (same set) speeds every downstream LP and sampler
        A_min, b_min = minimal_representation(region.A, region.b)
        region = PolytopicActionSet(id=len(regions), A=A_min, b=b_min)
        regions.append(region)
        seeds.append(omega)
    if not regions:
        raise NoSeedsAccepted("no grid seed produced a region")
    return RegionLibrary(system=sys, regions=regions, seeds=seeds, config=cfg)


def audit_region(sys: PendulumSystem, region: PolytopicActionSet,
                 n_samples: int = 1000, seed: int = 0,
                 tol: float = 1e-6) -> float:
    """Fraction of uniform interior samples violating the torque bound.

    Samples by hit-and-run from the Chebyshev center.  Soundness of the
    inner approximation means this fraction stays at (numerically) zero.
    """
    rng = np.random.default_rng([seed, region.id])
    samples = hit_and_run(region.A, region.b, n_samples, rng)
    _, excesses = max_violation_batch(sys, samples)
    return float(np.mean(excesses > tol))


def audit_library(lib: RegionLibrary, n_samples: int = 1000, seed: int = 0,
                  tol: float = 1e-6) -> dict[int, float]:
    """Per-region violation rates for the whole library."""
    return {S.id: audit_region(lib.system, S, n_samples=n_samples, seed=seed, tol=tol)
            for S in lib.regions}


def library_to_dict(lib: RegionLibrary) -> dict:
    """Region-collection JSON schema extended with seeds, config, and system."""
    payload = {
        "n": lib.spec.n,
        "regions": [{"id": int(S.id), "A": S.A.tolist(), "b": S.b.tolist()}
                    for S in lib.regions],
        "seeds": [s.tolist() for s in lib.seeds],
        "config": lib.config.to_dict(),
        "system": lib.system.to_config(),
    }
    return payload


def library_from_dict(payload: dict) -> RegionLibrary:
    sys = PendulumSystem.from_config(payload["system"])
    regions = []
    for entry in payload["regions"]:
        regions.append(PolytopicActionSet(id=int(entry["id"]),
                                          A=np.asarray(entry["A"], dtype=float),
                                          b=np.asarray(entry["b"], dtype=float)))
    seeds = [np.asarray(s, dtype=float) for s in payload["seeds"]]
    cfg = DecompositionConfig.from_dict(payload["config"])
    return RegionLibrary(system=sys, regions=regions, seeds=seeds, config=cfg)
