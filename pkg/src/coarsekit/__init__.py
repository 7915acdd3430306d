"""coarsekit: finite-scale constructions and checkable certificates from
the coarse geometry of metric families."""

from .errors import CoarsekitError, ParseError, PreconditionError, StructuralError
from .metric import (
    FiniteMetricSpace,
    GroupAction,
    MetricFamily,
    PointSubset,
    ValidationReport,
    ball,
    neighborhood,
    product,
    quotient,
    quotient_with_map,
    validate_action,
    validate_metric,
)
from .maps import (
    FamilyMap,
    MapFunction,
    MonotoneEnvelope,
    closeness_constant,
    compose,
    control_envelope,
    is_coarsely_onto,
    preimage_family,
    properness_envelope,
)
from .covers import (
    ANControlCertificate,
    AsdimCertificate,
    Cover,
    check_an_control,
    check_asdim_certificate,
    cover_dimension,
    greedy_color,
    lebesgue_number,
    mesh,
    product_control_coefficient,
    product_cover,
    pushforward_quotient_cover,
)
from .decomposition import (
    DecompositionCertificate,
    FiberingWitness,
    RPartition,
    SearchResult,
    check_decomposition,
    check_fibering_witness,
    r_components,
    search_decomposition,
    union_separator_map,
)
from .cone import (
    ConePoint,
    RhoFunction,
    chain_oracle,
    cone_distance,
    cone_extension,
    cone_sample,
    parse_rho,
    phi,
    phi_closed_exp,
    theta_embedding,
)
from .constructions import (
    RayTree,
    UltrametricSpace,
    minimax_ultrametric,
    ray_tree_embed,
    scale_balls_partition,
    shell_sequence,
)

__version__ = "0.1.0"
