"""Overlapping link-community detection for bipartite citation networks.

The toolkit finds pervasively overlapping link communities ("topics") by
memetic minimization of a normalized node-cut over link sets, decomposes each
community into core-periphery "towns", and ships the downstream analysis
suite (membership shares, poly-hierarchy, dendrogram matching, significance-
filtered co-citation projections) plus synthetic benchmarks and a brute-force
oracle for validation.
"""

from .graph import (
    BipartiteCitationGraph,
    CoCitationProjection,
    GraphError,
    LinkGraph,
    LinkSet,
    cocitation_projection,
    complement,
    is_connected_link_set,
    largest_component,
    load_edge_list,
    load_edge_list_path,
    prune_single_citers,
)
from .nodecut import (
    CutScore,
    cut_after_move,
    cut_mass,
    escape_probability,
    is_weak_community,
    normalized_cut,
)
from .search import (
    ResolutionParam,
    SearchTrace,
    candidate_moves,
    invalidation_probe,
    tunneling_descent,
)
from .evolve import (
    ClusterRecord,
    ClusterRegistry,
    EvolutionConfig,
    ScheduleResult,
    crossover,
    derive_secondary_seeds,
    evolve,
    find_valid_clusters,
    init_population,
    mutate,
    run_schedule,
)
from .seeds import (
    BranchEntry,
    BranchSelection,
    Dendrogram,
    seed_links_for_sources,
    select_long_branch_clusters,
    view_distance_matrix,
    ward_dendrogram,
    ward_seeds,
)
from .towns import (
    Star,
    Town,
    TownDecomposition,
    build_towns,
    explore_resolutions,
    extract_stars,
    first_top_two_split,
    verify_never_uphill,
)
from .analysis import (
    MatchReport,
    MembershipReport,
    OverlapTable,
    PolyHierarchy,
    export_cluster_views,
    match_dendrogram,
    overlap_table,
    poly_hierarchy,
    salton_index,
    significance_filter,
    source_membership,
    write_clusters_csv,
)
from .bench import (
    PlantedSpec,
    brute_force_valid_clusters,
    generate_planted,
    ground_truth_json,
    random_bipartite_graph,
    recovery_score,
)

__version__ = "0.1.0"

from .pipeline import (  # noqa: E402  (needs __version__ above)
    PipelineError,
    RunConfig,
    analyze_run,
    load_run_clusters,
    run_pipeline,
)

__all__ = [name for name in dir() if not name.startswith("_")]
