"""Sensor placement on water distribution networks.

Combines scenario-based coverage with a network-diffusion objective weighted
by demand-adjusted entropic degree.
"""

__version__ = "0.1.0"

from .errors import WdnError
from .metrics import (
    anc_terms,
    betweenness,
    closeness,
    clustering,
    critical_fraction,
    degree_stats,
    demand_adjusted,
    entropic_degree,
    link_capacity,
    metric_summary,
    shortest_paths,
)
from .network import (
    HydraulicSeries,
    HydraulicSnapshot,
    Link,
    LinkKind,
    Network,
    Node,
    NodeKind,
    ingest_hydraulics,
    load_network,
    parse_inp,
    parse_native,
    serialize_native,
    validate,
)
from .optimizer import (
    ObjectiveValues,
    ParetoRecord,
    Placement,
    PlacementProblem,
    centrality_baseline,
    dispersion,
    evaluate_f1,
    evaluate_f2,
    most_frequent_sensors,
    pareto_sweep,
    scalarize,
    solve_exact,
    solve_greedy,
)
from .scenarios import (
    CoverageRelation,
    coverage_relation,
    coverage_stats,
    flow_digraph,
    generate_scenarios,
    travel_times,
)
