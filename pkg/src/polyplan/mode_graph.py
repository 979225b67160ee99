"""Mode adjacency graph over a region library.

Vertices are regions (modes); a directed edge i -> j exists when the
continuity-conditioned product of the two regions is nonempty, i.e. some
trajectory in i hands off continuously to some trajectory in j.  Edge
costs come from the product volumes: a normal distribution is fit to the
volumes of all surviving edges, below-mean edges are pruned, and the rest
are mapped linearly so that mean volume costs ``l_max`` and mean plus
``k_max`` standard deviations (or more) costs ``l_min``.  Cheap edges are
therefore the ones with the widest choice of continuations.

Boundary vertices for the start and goal states attach separately so one
calibrated graph serves many queries.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import lp
from .basis import eval_H, pair_continuity
from .decomposition import RegionLibrary
from .polytope import (GAUSSIAN_PROXY, REJECTION_BOX, conditioned_product,
                       continuity_kernel, estimate_volume, is_empty)

START_VERTEX = "x0"
GOAL_VERTEX = "xf"

VertexId = Union[int, str]

DEFAULT_VOLUME_BUDGET = 4096


class NoStartEdges(RuntimeError):
    """No region's trajectories can begin at the requested start state."""


class NoGoalEdges(RuntimeError):
    """No region's trajectories can end at the requested goal state."""


class DegenerateCalibration(RuntimeError):
    pass


@dataclass
class GraphEdge:
    src: VertexId
    dst: VertexId
    volume: Optional[float] = None
    cost: Optional[float] = None


@dataclass
class ModeGraph:
    vertices: list[VertexId]
    edges: list[GraphEdge]
    calibration: Optional[dict] = None

    def out_edges(self, v: VertexId) -> list[GraphEdge]:
        return self._adjacency.get(v, [])

    def __post_init__(self):
        self._adjacency: dict[VertexId, list[GraphEdge]] = {}
        for e in self.edges:
            self._adjacency.setdefault(e.src, []).append(e)


def build_graph(lib: RegionLibrary, budget: int = DEFAULT_VOLUME_BUDGET,
                seed: int = 0) -> list[GraphEdge]:
    """Raw composability edges with product volumes, costs unset.

    Examines every ordered region pair (self-pairs included).  Pairs with
    an empty conditioned product get no edge.  Volume estimation is
    seeded per pair by (seed, i, j); a single method must back one
    calibration, so once any pair falls back to the Gaussian proxy the
    remaining pairs are estimated with the proxy directly and any earlier
    rejection estimates are redone (the per-pair RNG streams make the
    result identical to running the fallback everywhere).
    """
    spec = lib.spec
    H_c = pair_continuity(spec)
    kernel = continuity_kernel(H_c)
    edges: list[GraphEdge] = []
    estimates = []
    force = None
    for S_i in lib.regions:
        for S_j in lib.regions:
            product = conditioned_product(S_i, S_j, H_c, null_basis=kernel)
            if is_empty(product.lambda_A, product.lambda_b):
                continue
            est = estimate_volume(product.lambda_A, product.lambda_b, budget,
                                  seed=[seed, S_i.id, S_j.id], method=force,
                                  nonempty=True)
            if force is None and est.method == GAUSSIAN_PROXY:
                force = GAUSSIAN_PROXY
            edges.append(GraphEdge(src=S_i.id, dst=S_j.id, volume=est.value))
            estimates.append((est, product))
    if force == GAUSSIAN_PROXY:
        for edge, (est, product) in zip(edges, estimates):
            if est.method == REJECTION_BOX:
                redo = estimate_volume(product.lambda_A, product.lambda_b, budget,
                                       seed=[seed, edge.src, edge.dst],
                                       method=GAUSSIAN_PROXY, nonempty=True)
                edge.volume = redo.value
    return edges


def calibrate_costs(edges: list[GraphEdge], l_min: float, l_max: float,
                    k_max: float, vertices: Optional[list[int]] = None,
                    prune_below_mean: bool = True) -> ModeGraph:
    """Fit a normal to the edge volumes and map them to costs.

    Volume mu maps to ``l_max``, mu + k_max sigma (and anything larger)
    to ``l_min``, linear in between; edges with volume strictly below the
    mean are pruned (``prune_below_mean=False`` keeps them at ``l_max``
    instead, a recovery mode for graphs the pruning would disconnect).
    With zero volume spread the heuristic carries no information: every
    edge is kept at ``l_min`` and a warning is issued.
    """
    if l_min > l_max or l_min <= 0 or k_max <= 0:
        raise ValueError("need 0 < l_min <= l_max and k_max > 0")
    if not edges:
        raise ValueError("cannot calibrate an empty edge set")
    volumes = np.array([e.volume for e in edges], dtype=float)
    mu = float(np.mean(volumes))
    sigma = float(np.std(volumes))
    if vertices is None:
        vertices = sorted({v for e in edges for v in (e.src, e.dst)})
    calibration = {"mu": mu, "sigma": sigma, "l_min": l_min, "l_max": l_max,
                   "k_max": k_max}

    if sigma == 0.0 or len(edges) < 2:
        warnings.warn("degenerate volume calibration (zero spread); "
                      "all edge costs set to l_min", stacklevel=2)
        kept = [GraphEdge(e.src, e.dst, e.volume, l_min) for e in edges]
        return ModeGraph(vertices=list(vertices), edges=kept, calibration=calibration)

    kept = []
    slope = (l_min - l_max) / (k_max * sigma)
    for e in edges:
        if e.volume < mu:
            if prune_below_mean:
                continue
            kept.append(GraphEdge(e.src, e.dst, e.volume, l_max))
            continue
        cost = l_max + (e.volume - mu) * slope
        kept.append(GraphEdge(e.src, e.dst, e.volume, max(cost, l_min)))
    return ModeGraph(vertices=list(vertices), edges=kept, calibration=calibration)


def attach_boundary(graph: ModeGraph, x0, xf, lib: RegionLibrary) -> ModeGraph:
    """Add start/goal vertices wired to the regions that can realize them.

    ``x0 -> j`` exists iff some trajectory of region j starts at ``x0``
    (an LP over the region with the initial-state equality), and
    ``j -> xf`` iff some trajectory ends at ``xf``.  Boundary edges cost
    ``l_min`` so they do not distort the inter-mode ranking.
    """
    if graph.calibration is None:
        raise ValueError("attach_boundary requires a calibrated graph")
    x0 = np.asarray(x0, dtype=float)
    xf = np.asarray(xf, dtype=float)
    spec = lib.spec
    H0 = eval_H(spec, 0.0)
    HT = eval_H(spec, spec.T)
    l_min = graph.calibration["l_min"]

    def reaches(S, H, x):
        res = lp.solve_feasibility(lp.LinearProgram(S.n, S.A, S.b, A_eq=H, b_eq=x))
        return res.status == lp.FEASIBLE

    start_edges = [GraphEdge(START_VERTEX, S.id, None, l_min)
                   for S in lib.regions if reaches(S, H0, x0)]
    goal_edges = [GraphEdge(S.id, GOAL_VERTEX, None, l_min)
                  for S in lib.regions if reaches(S, HT, xf)]
    if not start_edges:
        raise NoStartEdges(f"no region can start at {x0.tolist()}")
    if not goal_edges:
        raise NoGoalEdges(f"no region can end at {xf.tolist()}")
    return ModeGraph(vertices=list(graph.vertices) + [START_VERTEX, GOAL_VERTEX],
                     edges=list(graph.edges) + start_edges + goal_edges,
                     calibration=dict(graph.calibration))


def graph_to_dict(graph: ModeGraph) -> dict:
    return {
        "vertices": list(graph.vertices),
        "edges": [
            {"from": e.src, "to": e.dst, "cost": e.cost, "vol": e.volume}
            for e in graph.edges
        ],
        "calibration": graph.calibration,
    }


def graph_from_dict(payload: dict) -> ModeGraph:
    edges = [GraphEdge(src=e["from"], dst=e["to"], volume=e.get("vol"),
                       cost=e.get("cost"))
             for e in payload["edges"]]
    return ModeGraph(vertices=list(payload["vertices"]), edges=edges,
                     calibration=payload.get("calibration"))
