"""Multicommodity capacitated fixed-charge network design with partial
commodity aggregation: instance handling, aggregation construction, model
generation, desk-scale solving, and cross-formulation analysis."""

from .aggregation import (
    Dispersion,
    GadgetSets,
    PartialAggregation,
    arc_groups,
    build_da_aggregation,
    build_fa_aggregation,
    build_ksp_aggregation,
    gadget_sets,
    validate_aggregation,
)
from .analysis import (
    bound_loss,
    compare_formulations,
    fa_reduction,
    map_da_to_pae,
    map_pa_to_fa,
    size_reduction,
    time_reduction,
)
from .instances import (
    Arc,
    Commodity,
    Instance,
    emit_native,
    generate_random,
    parse_dow,
    parse_native,
    validate,
)
from .model import (
    ModelIR,
    ModelStats,
    add_cutset_constraints,
    build_da_model,
    build_fa_model,
    build_model,
    relax,
    stats,
)
from .mps import emit_mps, parse_mps
from .paths import Path, k_shortest_paths, shortest_path, surrogate_costs
from .solve import (
    LpSolution,
    MipSolution,
    brute_force_mip,
    check_solution,
    solve_lp,
    solve_mip,
)

__version__ = "0.1.0"
