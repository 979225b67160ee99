import json
import warnings

import numpy as np
import pytest
import scipy.linalg

import polyplan.decomposition as dec
from polyplan import lp
from polyplan.basis import BasisSpec, eval_H, pair_continuity
from polyplan.decomposition import DecompositionConfig, RegionLibrary, decompose
from polyplan.mode_graph import (GraphEdge, ModeGraph, NoGoalEdges, NoStartEdges,
                                 attach_boundary, build_graph, calibrate_costs,
                                 graph_from_dict, graph_to_dict)
from polyplan.pendulum import PendulumSystem
from polyplan.polytope import PolytopicActionSet


def _system(n=3, T=0.4, u_max=50.0):
    return PendulumSystem(m=0.1, l=1.0, g=9.81, u_max=u_max, spec=BasisSpec(n=n, T=T))


def _library(sys, regions, seeds=None):
    cfg = DecompositionConfig(q0_seeds=(0, 0, 1), qdot0_seeds=(0, 0, 1),
                              param_box=(-10 * np.ones(sys.spec.n),
                                         10 * np.ones(sys.spec.n)))
    seeds = seeds if seeds is not None else [np.zeros(sys.spec.n)] * len(regions)
    return RegionLibrary(system=sys, regions=regions, seeds=seeds, config=cfg)


def _box_region(set_id, lo, hi):
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    A = np.vstack([np.eye(lo.size), -np.eye(lo.size)])
    return PolytopicActionSet(id=set_id, A=A, b=np.concatenate([hi, -lo]))


def _final_state_band(sys, set_id, lo_state, hi_state, box=10.0):
    """Region whose trajectories end with state in a band."""
    HT = eval_H(sys.spec, sys.spec.T)
    n = sys.spec.n
    A = np.vstack([np.eye(n), -np.eye(n), HT, -HT])
    b = np.concatenate([np.full(n, box), np.full(n, box), hi_state, -np.asarray(lo_state)])
    return PolytopicActionSet(id=set_id, A=A, b=b)


def _initial_state_band(sys, set_id, lo_state, hi_state, box=10.0):
    H0 = eval_H(sys.spec, 0.0)
    n = sys.spec.n
    A = np.vstack([np.eye(n), -np.eye(n), H0, -H0])
    b = np.concatenate([np.full(n, box), np.full(n, box), hi_state, -np.asarray(lo_state)])
    return PolytopicActionSet(id=set_id, A=A, b=b)


def test_build_graph_prunes_unreachable_pairs():
    sys = _system()
    # region 0 ends in states near (-5,-5); region 1 starts near (+5,+5):
    # no continuous handoff between them in either direction.  Region 2
    # starts exactly where region 0 ends, so that edge must exist.
    S0 = _final_state_band(sys, 0, [-5.5, -5.5], [-4.5, -4.5])
    S1 = _initial_state_band(sys, 1, [4.5, 4.5], [5.5, 5.5])
    S2 = _initial_state_band(sys, 2, [-5.5, -5.5], [-4.5, -4.5])
    lib = _library(sys, [S0, S1, S2])
    edges = build_graph(lib, budget=512, seed=0)
    pairs = {(e.src, e.dst) for e in edges}
    assert (0, 1) not in pairs
    assert (1, 0) not in pairs
    assert (0, 2) in pairs


def test_build_graph_self_loop_for_rest_region():
    sys = _system()
    lib = _library(sys, [_box_region(0, -np.ones(3), np.ones(3))])
    edges = build_graph(lib, budget=512, seed=0)
    assert {(e.src, e.dst) for e in edges} == {(0, 0)}
    assert edges[0].volume > 0.0


def test_build_graph_edge_count_bound(pendulum_small):
    cfg = DecompositionConfig(q0_seeds=(-0.5, 0.5, 2), qdot0_seeds=(-1.0, 1.0, 2),
                              param_box=(-3 * np.ones(3), 3 * np.ones(3)),
                              sphere_samples=64, rho0=0.05, growth=1.3,
                              rho_max=12.0, max_cuts=80, scrub_samples=2048,
                              rng_seed=0)
    lib = decompose(pendulum_small, cfg)
    edges = build_graph(lib, budget=512, seed=0)
    m = len(lib.regions)
    assert len(edges) <= m * m
    assert all(e.volume >= 0.0 for e in edges)


def test_pruned_pairs_match_stacked_lp(pendulum_small):
    cfg = DecompositionConfig(q0_seeds=(-0.5, 0.5, 2), qdot0_seeds=(-1.0, 1.0, 2),
                              param_box=(-3 * np.ones(3), 3 * np.ones(3)),
                              sphere_samples=64, rho0=0.05, growth=1.3,
                              rho_max=12.0, max_cuts=80, scrub_samples=2048,
                              rng_seed=0)
    lib = decompose(pendulum_small, cfg)
    edges = build_graph(lib, budget=512, seed=0)
    pairs = {(e.src, e.dst) for e in edges}
    H_c = pair_continuity(lib.spec)
    n = lib.spec.n
    for S_i in lib.regions:
        for S_j in lib.regions:
            A = scipy.linalg.block_diag(S_i.A, S_j.A)
            b = np.concatenate([S_i.b, S_j.b])
            res = lp.solve_feasibility(
                lp.LinearProgram(2 * n, A, b, A_eq=H_c, b_eq=np.zeros(2)))
            assert ((S_i.id, S_j.id) in pairs) == (res.status == lp.FEASIBLE)


def _edges(volumes):
    return [GraphEdge(src=i, dst=i + 1, volume=v) for i, v in enumerate(volumes)]


def test_calibration_endpoint_mapping():
    # deviations (4, 0, -2, -2, 0, 0) around 10: mean exactly 10, population
    # std exactly 2, so the set contains volumes at mu and at mu + 2 sigma
    vols = [14.0, 10.0, 8.0, 8.0, 10.0, 10.0]
    graph = calibrate_costs(_edges(vols), l_min=1.0, l_max=9.0, k_max=2.0)
    assert graph.calibration["mu"] == 10.0
    assert graph.calibration["sigma"] == 2.0
    by_volume = {e.volume: e.cost for e in graph.edges}
    assert by_volume[10.0] == 9.0     # mean volume -> l_max exactly
    assert by_volume[14.0] == 1.0     # mean + k_max sigma -> l_min exactly
    assert 8.0 not in by_volume       # below the mean: pruned


def test_calibration_midpoint_interpolation():
    # an edge one sigma above the mean with k_max = 2 lands halfway:
    # cost (l_max + l_min)/2 = 5 for l_max 9, l_min 1
    vols = [14.0, 10.0, 8.0, 8.0, 10.0, 10.0, 12.0, 8.0]
    graph = calibrate_costs(_edges(vols), l_min=1.0, l_max=9.0, k_max=2.0)
    mu, sigma = graph.calibration["mu"], graph.calibration["sigma"]
    by_volume = {e.volume: e.cost for e in graph.edges}
    expected = 9.0 + (12.0 - mu) * (1.0 - 9.0) / (2.0 * sigma)
    assert by_volume[12.0] == pytest.approx(max(expected, 1.0), abs=1e-12)


def test_calibration_clamps_far_volumes():
    # mu = 10, sigma = sqrt(5): the outlier at 15 lies beyond mu + 2 sigma
    vols = [9.0, 9.0, 9.0, 9.0, 9.0, 15.0]
    graph = calibrate_costs(_edges(vols), l_min=1.0, l_max=9.0, k_max=2.0)
    mu, sigma = graph.calibration["mu"], graph.calibration["sigma"]
    assert 15.0 > mu + 2.0 * sigma
    by_volume = {e.volume: e.cost for e in graph.edges}
    assert by_volume[15.0] == 1.0


def test_calibration_retains_exact_mean():
    vols = [1.0, 3.0, 5.0]
    graph = calibrate_costs(_edges(vols), l_min=1.0, l_max=9.0, k_max=2.0)
    by_volume = {e.volume: e.cost for e in graph.edges}
    assert 3.0 in by_volume and by_volume[3.0] == 9.0
    assert 1.0 not in by_volume


def test_calibration_cost_monotone_in_volume():
    rng = np.random.default_rng(0)
    vols = list(rng.uniform(0.1, 10.0, size=40))
    graph = calibrate_costs(_edges(vols), l_min=1.0, l_max=9.0, k_max=2.0)
    kept = sorted(graph.edges, key=lambda e: e.volume)
    costs = [e.cost for e in kept]
    assert all(c1 >= c2 - 1e-12 for c1, c2 in zip(costs, costs[1:]))
    assert all(1.0 <= c <= 9.0 for c in costs)


def test_calibration_degenerate_sigma_warns():
    with pytest.warns(UserWarning):
        graph = calibrate_costs(_edges([2.0, 2.0, 2.0]), l_min=1.0, l_max=9.0,
                                k_max=2.0)
    assert all(e.cost == 1.0 for e in graph.edges)
    assert len(graph.edges) == 3


def test_calibration_uniform_when_lmax_equals_lmin():
    vols = [1.0, 2.0, 3.0, 4.0]
    graph = calibrate_costs(_edges(vols), l_min=1.0, l_max=1.0, k_max=2.0)
    assert all(e.cost == 1.0 for e in graph.edges)


def test_calibration_validation():
    with pytest.raises(ValueError):
        calibrate_costs(_edges([1.0, 2.0]), l_min=5.0, l_max=1.0, k_max=2.0)
    with pytest.raises(ValueError):
        calibrate_costs([], l_min=1.0, l_max=9.0, k_max=2.0)


def test_build_graph_reproducible(pendulum_small):
    cfg = DecompositionConfig(q0_seeds=(-0.5, 0.5, 2), qdot0_seeds=(-1.0, 1.0, 2),
                              param_box=(-3 * np.ones(3), 3 * np.ones(3)),
                              sphere_samples=64, rho0=0.05, growth=1.3,
                              rho_max=12.0, max_cuts=80, scrub_samples=2048,
                              rng_seed=0)
    lib = decompose(pendulum_small, cfg)
    first = build_graph(lib, budget=512, seed=3)
    second = build_graph(lib, budget=512, seed=3)
    assert [(e.src, e.dst, e.volume) for e in first] == \
        [(e.src, e.dst, e.volume) for e in second]


def test_attach_boundary_wiring():
    sys = _system()
    lib = _library(sys, [_box_region(0, -np.ones(3), np.ones(3))])
    edges = build_graph(lib, budget=512, seed=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        graph = calibrate_costs(edges, l_min=1.0, l_max=9.0, k_max=2.0,
                                vertices=[0])
    g_full = attach_boundary(graph, [0.0, 0.0], [0.0, 0.0], lib)
    kinds = {(e.src, e.dst) for e in g_full.edges}
    assert ("x0", 0) in kinds and (0, "xf") in kinds
    boundary_costs = [e.cost for e in g_full.edges if e.src == "x0" or e.dst == "xf"]
    assert all(c == 1.0 for c in boundary_costs)
    assert "x0" in g_full.vertices and "xf" in g_full.vertices

    with pytest.raises(NoStartEdges):
        attach_boundary(graph, [50.0, 0.0], [0.0, 0.0], lib)
    with pytest.raises(NoGoalEdges):
        attach_boundary(graph, [0.0, 0.0], [50.0, 0.0], lib)


def test_attach_boundary_goal_band():
    sys = _system()
    # region 0 can only end near state (2, 0); region 1 ends anywhere in a box
    S0 = _final_state_band(sys, 0, [1.9, -0.1], [2.1, 0.1])
    S1 = _box_region(1, -np.ones(3), np.ones(3))
    lib = _library(sys, [S0, S1])
    edges = build_graph(lib, budget=512, seed=0)
    graph = calibrate_costs(edges, l_min=1.0, l_max=9.0, k_max=2.0, vertices=[0, 1])
    g_full = attach_boundary(graph, [0.0, 0.0], [2.0, 0.0], lib)
    goal_edges = {e.src for e in g_full.edges if e.dst == "xf"}
    assert goal_edges == {0}


def test_graph_json_round_trip():
    graph = ModeGraph(vertices=[0, 1, "x0", "xf"],
                      edges=[GraphEdge(0, 1, 2.5, 3.0),
                             GraphEdge("x0", 0, None, 1.0)],
                      calibration={"mu": 2.0, "sigma": 0.5, "l_min": 1.0,
                                   "l_max": 9.0, "k_max": 2.0})
    payload = json.loads(json.dumps(graph_to_dict(graph)))
    back = graph_from_dict(payload)
    assert back.vertices == graph.vertices
    assert [(e.src, e.dst, e.volume, e.cost) for e in back.edges] == \
        [(e.src, e.dst, e.volume, e.cost) for e in graph.edges]
    assert back.calibration == graph.calibration
    assert json.dumps(graph_to_dict(back), sort_keys=True) == \
        json.dumps(graph_to_dict(graph), sort_keys=True)
