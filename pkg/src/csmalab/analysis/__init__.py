"""Exact analysis: joint generator, stationary laws, Gibbs objective, capacity LP and design."""

from .capacity import (
    BOUNDARY_TOL,
    CapacityRegionOracle,
    LPError,
    Membership,
    capacity_margin,
    capacity_membership,
    capacity_oracle,
    polytope_empty_mass,
    polytope_ray_scale,
    ray_boundary,
    symmetric_boundary,
)
from .design import (
    InfeasibleTargetError,
    LimitedBackoffDesign,
    alpha_lower_bound,
    exp_from_ucsma,
    limited_backoff_design,
    ucsma_design,
)
from .gibbs import (
    ChannelAverage,
    NonConvergenceError,
    conditional_gibbs,
    gibbs_table,
    gradient_F,
    lemma_box,
    maximize_F,
    objective_F,
    service_rate,
)
from .markov import (
    MAX_ARBORESCENCE_STATES,
    MAX_EXACT_STATES,
    JointGenerator,
    StationaryDistribution,
    arborescence_stationary,
    arborescence_weights,
    build_generator,
    exact_throughput,
    product_form_deviation,
    reversibility_check,
    stationary_exact,
)
