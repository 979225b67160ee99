"""Command-line pipeline: decompose, graph, plan, validate, bench.

All artifacts are JSON files; bench emits CSV.  Randomness flows from a
single ``--seed`` flag: decomposition growth draws from generators
sub-seeded by (seed, grid index), per-pair volume estimation from
(seed, i, j), so runs are bitwise reproducible.

Exit codes: 0 ok, 2 parse/configuration failure, 3 decomposition failure,
4 no plan found, 5 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys as _sys
import time

import numpy as np

from .decomposition import (DecompositionConfig, NoSeedsAccepted, audit_library,
                            decompose, default_config, library_from_dict,
                            library_to_dict)
from .mode_graph import (NoGoalEdges, NoStartEdges, attach_boundary, build_graph,
                         calibrate_costs, graph_from_dict, graph_to_dict)
from .pendulum import PendulumSystem
from .planner import (BudgetExhausted, NoPathExists, PlannerConfig, plan,
                      solution_from_dict, solution_to_dict, verify_solution)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DECOMPOSITION = 3
EXIT_NO_PLAN = 4
EXIT_VALIDATION = 5

DEFAULT_L_MIN = 1.0
DEFAULT_K_MAX_SIGMA = 2.0


class CliError(Exception):
    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_PARSE, f"cannot read {path}: {exc}")


def _write_json_atomic(path: str, payload: dict) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def _write_text_atomic(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _parse_state(text: str, flag: str) -> np.ndarray:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise CliError(EXIT_PARSE, f"{flag} must be 'q,qdot', got {text!r}")
    if len(parts) != 2:
        raise CliError(EXIT_PARSE, f"{flag} must have two components, got {text!r}")
    return np.array(parts)


def _system_from_config(config: dict) -> PendulumSystem:
    try:
        return PendulumSystem.from_config(config)
    except (KeyError, ValueError, TypeError) as exc:
        raise CliError(EXIT_PARSE, f"bad system config: {exc}")


def _decomposition_config(sys_: PendulumSystem, config: dict, seed: int) -> DecompositionConfig:
    cfg = default_config(sys_, rng_seed=seed)
    overrides = config.get("decomposition", {})
    try:
        for key in ("q0_seeds", "qdot0_seeds"):
            if key in overrides:
                setattr(cfg, key, tuple(overrides[key]))
        if "param_box" in overrides:
            cfg.param_box = (np.asarray(overrides["param_box"][0], dtype=float),
                             np.asarray(overrides["param_box"][1], dtype=float))
        for key in ("sphere_samples", "max_cuts"):
            if key in overrides:
                setattr(cfg, key, int(overrides[key]))
        for key in ("rho0", "growth", "rho_max"):
            if key in overrides:
                setattr(cfg, key, float(overrides[key]))
        cfg.__post_init__()
    except (ValueError, TypeError, KeyError, IndexError) as exc:
        raise CliError(EXIT_PARSE, f"bad decomposition overrides: {exc}")
    return cfg


def cmd_decompose(config_path: str, out_path: str, seed: int = 0) -> int:
    config = _load_json(config_path)
    sys_ = _system_from_config(config)
    cfg = _decomposition_config(sys_, config, seed)
    try:
        lib = decompose(sys_, cfg)
    except NoSeedsAccepted as exc:
        print(f"decomposition failed: {exc}", file=_sys.stderr)
        return EXIT_DECOMPOSITION
    rates = audit_library(lib, seed=seed)
    pass_rate = 1.0 - float(np.mean(list(rates.values())))
    _write_json_atomic(out_path, library_to_dict(lib))
    print(f"regions: {len(lib.regions)}  audit pass rate: {pass_rate:.4%}")
    return EXIT_OK


def cmd_graph(library_path: str, l_max: float, out_path: str, seed: int = 0,
              l_min: float = DEFAULT_L_MIN, k_max: float = DEFAULT_K_MAX_SIGMA,
              budget: int = None) -> int:
    payload = _load_json(library_path)
    try:
        lib = library_from_dict(payload)
    except (KeyError, ValueError, TypeError) as exc:
        raise CliError(EXIT_PARSE, f"bad region library: {exc}")
    if not lib.regions:
        print("empty region library", file=_sys.stderr)
        return EXIT_DECOMPOSITION
    kwargs = {} if budget is None else {"budget": budget}
    edges = build_graph(lib, seed=seed, **kwargs)
    if not edges:
        print("no composable region pairs", file=_sys.stderr)
        return EXIT_DECOMPOSITION
    graph = calibrate_costs(edges, l_min=l_min, l_max=l_max, k_max=k_max,
                            vertices=[S.id for S in lib.regions])
    _write_json_atomic(out_path, graph_to_dict(graph))
    cal = graph.calibration
    print(f"edges: {len(graph.edges)}  mu: {cal['mu']:.6g}  sigma: {cal['sigma']:.6g}")
    return EXIT_OK


def cmd_plan(graph_path: str, library_path: str, x0_text: str, xf_text: str,
             out_path: str, k_max: int = None, l_max_walk: int = None) -> int:
    lib_payload = _load_json(library_path)
    graph_payload = _load_json(graph_path)
    try:
        lib = library_from_dict(lib_payload)
        graph = graph_from_dict(graph_payload)
    except (KeyError, ValueError, TypeError) as exc:
        raise CliError(EXIT_PARSE, f"bad input file: {exc}")
    x0 = _parse_state(x0_text, "--x0")
    xf = _parse_state(xf_text, "--xf")
    cfg = PlannerConfig()
    if k_max is not None:
        cfg.k_max = k_max
    if l_max_walk is not None:
        cfg.l_max = l_max_walk
    t0 = time.perf_counter()
    try:
        g_full = attach_boundary(graph, x0, xf, lib)
        solution = plan(lib, g_full, x0, xf, cfg)
    except (NoStartEdges, NoGoalEdges, NoPathExists, BudgetExhausted) as exc:
        print(f"no plan: {exc}", file=_sys.stderr)
        return EXIT_NO_PLAN
    wall = time.perf_counter() - t0
    _write_json_atomic(out_path, solution_to_dict(solution, lib.system))
    print(f"pi: {list(solution.pi)}  k: {solution.candidates_tested}  "
          f"lT: {solution.horizon:g} s  wall: {wall * 1e3:.1f} ms")
    return EXIT_OK


def cmd_validate(solution_path: str, config_path: str, library_path: str) -> int:
    config = _load_json(config_path)
    sys_ = _system_from_config(config)
    try:
        lib = library_from_dict(_load_json(library_path))
        solution = solution_from_dict(_load_json(solution_path))
    except (KeyError, ValueError, TypeError) as exc:
        raise CliError(EXIT_PARSE, f"bad input file: {exc}")
    try:
        report = verify_solution(sys_, lib, solution)
    except KeyError as exc:
        raise CliError(EXIT_PARSE, f"solution references unknown region: {exc}")
    all_ok = True
    for name, (ok, value) in report.items():
        print(f"{name}: {'pass' if ok else 'FAIL'} (worst {value:.3e})")
        all_ok = all_ok and ok
    return EXIT_OK if all_ok else EXIT_VALIDATION


def cmd_bench(manifest_path: str, out_path: str) -> int:
    manifest = _load_json(manifest_path)
    rows = manifest.get("rows", [])
    seed = int(manifest.get("seed", 0))
    x0 = _parse_state(manifest.get("x0", "0,0"), "x0")
    xf = _parse_state(manifest.get("xf", f"{np.pi},0"), "xf")
    planner_cfg = PlannerConfig(
        k_max=int(manifest.get("kmax", PlannerConfig.k_max)),
        l_max=int(manifest.get("lmaxwalk", PlannerConfig.l_max)))
    budget = manifest.get("volume_budget")

    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["system_id", "lmax", "t_solve_ms", "k", "lT_s", "error"])
    any_error = False
    cache: dict[str, tuple] = {}
    for row in rows:
        system_id = row.get("system_id", "?")
        l_max = float(row["lmax"])
        try:
            config = row["config"] if "config" in row else _load_json(row["config_path"])
            key = json.dumps(config, sort_keys=True)
            if key not in cache:
                sys_ = _system_from_config(config)
                lib = decompose(sys_, _decomposition_config(sys_, config, seed))
                kwargs = {} if budget is None else {"budget": int(budget)}
                cache[key] = (lib, build_graph(lib, seed=seed, **kwargs))
            lib, edges = cache[key]
            graph = calibrate_costs(edges, l_min=DEFAULT_L_MIN, l_max=l_max,
                                    k_max=DEFAULT_K_MAX_SIGMA,
                                    vertices=[S.id for S in lib.regions])
            g_full = attach_boundary(graph, x0, xf, lib)
            solution = plan(lib, g_full, x0, xf, planner_cfg)
            writer.writerow([system_id, f"{l_max:g}", f"{solution.solve_time * 1e3:.3f}",
                             solution.candidates_tested, f"{solution.horizon:g}", ""])
        except Exception as exc:  # per-row isolation: error lands in the CSV
            any_error = True
            writer.writerow([system_id, f"{l_max:g}", "", "", "", str(exc)])
    _write_text_atomic(out_path, buffer.getvalue())
    print(f"wrote {len(rows)} rows to {out_path}")
    return 1 if any_error else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyplan",
        description="Polytopic trajectory-set planning pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="grow a region library from a system config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("graph", help="build and calibrate the mode adjacency graph")
    p.add_argument("--library", required=True)
    p.add_argument("--lmax", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("plan", help="search for a feasible long-horizon trajectory")
    p.add_argument("--graph", required=True)
    p.add_argument("--library", required=True)
    p.add_argument("--x0", required=True, help="start state 'q,qdot'")
    p.add_argument("--xf", required=True, help="goal state 'q,qdot'")
    p.add_argument("--out", required=True)
    p.add_argument("--kmax", type=int, default=None, help="candidate budget")
    p.add_argument("--lmaxwalk", type=int, default=None, help="max walk length")

    p = sub.add_parser("validate", help="re-verify a solution from raw data")
    p.add_argument("--solution", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--library", required=True)

    p = sub.add_parser("bench", help="run (system, lmax) pairs and emit CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "decompose":
            return cmd_decompose(args.config, args.out, seed=args.seed)
        if args.command == "graph":
            return cmd_graph(args.library, args.lmax, args.out, seed=args.seed)
        if args.command == "plan":
            return cmd_plan(args.graph, args.library, args.x0, args.xf, args.out,
                            k_max=args.kmax, l_max_walk=args.lmaxwalk)
        if args.command == "validate":
            return cmd_validate(args.solution, args.config, args.library)
        if args.command == "bench":
            return cmd_bench(args.manifest, args.out)
    except CliError as exc:
        print(str(exc), file=_sys.stderr)
        return exc.exit_code
    raise AssertionError(f"unhandled command {args.command}")


def entrypoint() -> None:
    raise SystemExit(main())
