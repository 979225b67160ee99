"""Long-horizon motion planning with polytopic trajectory-parameter sets.

The pipeline: decompose a system's feasible trajectory parameters into
polytopic action sets (`decomposition`), wire composable sets into a mode
adjacency graph with volume-calibrated edge costs (`mode_graph`), then
enumerate candidate mode sequences in cost order and solve each with a
linear feasibility program (`planner`).  Supporting layers: an LP kernel
(`lp`), polytope algebra (`polytope`), the Bernstein trajectory basis
(`basis`), and torque-limited pendulum dynamics (`pendulum`).
"""

from .basis import BasisSpec, StackedMatrices, build_stacked, eval_H, eval_accel_row
from .decomposition import (DecompositionConfig, RegionLibrary, decompose,
                            default_config, grow_region)
from .mode_graph import (GraphEdge, ModeGraph, attach_boundary, build_graph,
                         calibrate_costs)
from .pendulum import (PendulumSystem, fit_free_fall, max_violation,
                       simulate_free_fall, torque_at, violation_gradient)
from .planner import (CandidateWalk, PlannerConfig, PlanSolution,
                      check_admissible, enumerate_walks, plan, prefix_feasible)
from .polytope import (ConditionedProduct, PolytopicActionSet, VolumeEstimate,
                       conditioned_product, contains, estimate_volume, is_empty)

__version__ = "0.1.0"

__all__ = [
    "BasisSpec", "StackedMatrices", "build_stacked", "eval_H", "eval_accel_row",
    "DecompositionConfig", "RegionLibrary", "decompose", "default_config",
    "grow_region", "GraphEdge", "ModeGraph", "attach_boundary", "build_graph",
    "calibrate_costs", "PendulumSystem", "fit_free_fall", "max_violation",
    "simulate_free_fall", "torque_at", "violation_gradient", "CandidateWalk",
    "PlannerConfig", "PlanSolution", "check_admissible", "enumerate_walks",
    "plan", "prefix_feasible", "ConditionedProduct", "PolytopicActionSet",
    "VolumeEstimate", "conditioned_product", "contains", "estimate_volume",
    "is_empty",
]
