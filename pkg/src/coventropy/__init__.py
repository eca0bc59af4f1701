"""Coloured covers, cp approximants, and entropy experiments on finite cell models."""

from .cellspace import (
    CellMap,
    CellSpace,
    ColouredRefinement,
    Cover,
    DynamicalModel,
    cover_atoms,
    cycle_space,
    disjoint_union,
    dynamical_join,
    grid_space,
    join,
    load_model,
    minimal_coloured_refinement,
    minimal_subcover,
    model_from_json,
    model_to_json,
    path_space,
    pullback,
    relabel,
    save_model,
)
from .cpapprox import (
    CpcSystem,
    FunctionSample,
    QdSystem,
    TraceVector,
    approx_error,
    build_pou_system,
    constant_one,
    indicator,
    matrix_shift_qd,
    matrix_shift_series,
    qd_from_decomposable,
    uniform_trace,
)
from .errors import (
    CoveringError,
    DepthExhaustedError,
    FamilySizeError,
    InfeasibleColouringError,
    StructuralError,
    ToleranceExceededError,
)
from .estimator import (
    CheckResult,
    GrowthSeries,
    RateEstimate,
    SandwichReport,
    SandwichRow,
    entropy_experiment,
    growth_rate,
    permanence_suite,
    sandwich_verdict,
    series_rows,
)
from .lowerbound import (
    EquivalenceReport,
    VectorFamily,
    block_shift_map,
    coordinate_family,
    kerr_witness,
    l1_equivalence_constant,
    shifted_family,
)
from .symbolic import (
    TransferMatrix,
    WordSpace,
    cylinder_count,
    cylinder_cover,
    enumerate_words,
    full_shift,
    golden_mean_shift,
    load_matrix,
    power_system,
    sft_entropy,
)

__version__ = "0.1.0"
