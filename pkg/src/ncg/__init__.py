"""Exact workbench for network creation games.

Players buy edges at price alpha; cost = alpha * (edges bought) + sum of
graph distances.  The package computes exact costs, verifies Nash and strong
equilibria by pruned exhaustive coalition search, constructs the studied
profile families, runs improvement dynamics with potential tracking and
cycle detection, and measures the strong price of anarchy.
"""

from .core import (
    CostBreakdown,
    GameParams,
    GraphProperties,
    INFINITE,
    Infinity,
    NEG_INFINITE,
    NotATree,
    StrategyProfile,
    UndirectedGraph,
    build_graph,
    centroid,
    complement_is_forest,
    graph_properties,
    is_rational,
    normalize,
    player_cost,
    shortest_path_distances,
    social_cost,
)
from .equilibrium import (
    BudgetExhausted,
    DeviationWitness,
    OraclePrediction,
    OracleVerdict,
    SearchBudget,
    SEVerdict,
    StrongResult,
    best_response,
    find_improving_coalition,
    is_nash,
    is_strong_equilibrium,
    necessary_conditions,
    theory_oracle,
)
from .constructions import (
    BuyerPattern,
    Example1Params,
    make_cfip3_profile,
    make_example1,
    make_hoffman_singleton,
    make_standard,
    star_profile,
)
from .dynamics import (
    Move,
    PathRecord,
    Policy,
    Termination,
    TerminationKind,
    enumerate_improving_moves,
    find_improvement_cycle,
    potential_value,
    run_dynamics,
    script_alpha1_to_strong,
    script_tree_to_star,
    search_improvement_path,
)
from .metrics import (
    SpoaReport,
    enumerate_strong_equilibria,
    example1_ratio,
    social_optimum_cost,
    spoa_closed_form,
    strong_price_of_anarchy,
)

__version__ = "0.1.0"
