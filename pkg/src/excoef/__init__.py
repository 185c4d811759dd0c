"""Extremal coefficient functions of max-stable random fields.

Validation through complete alternation, the max-linear model realising a
valid table, dependency polytopes, Bernstein transforms, Monte-Carlo checks
and the discretised storm process.
"""

from .alternation import (
    CapacityTable,
    ValidationReport,
    Violation,
    alternation_witness,
    is_completely_alternating_bruteforce,
    tau_coefficients,
    validate_capacity,
    validate_ecf,
)
from .depset import (
    DependencyPolytope,
    build_polytope,
    contains,
    face_touch_check,
    support_function,
    vertices,
)
from .errors import (
    BoundTooSmall,
    DegenerateMarginal,
    DegenerateTransform,
    ExcoefError,
    FormatError,
    InsufficientExceedances,
    InvalidArgument,
    InvalidSubset,
    NotCompletelyAlternating,
    TooLarge,
)
from .estimate import (
    EstimateResult,
    check_bivariate_cdf,
    check_continuity_bound,
    estimate_chi,
    estimate_theta,
)
from .maxlinear import (
    BivariateSummary,
    RandomSetDistribution,
    SampleBatch,
    SpectralAtoms,
    TauTable,
    binary_realization,
    bivariate,
    build_tau,
    chi_matrix,
    joint_cdf,
    marginalize,
    max_combine,
    product_chi,
    recover_theta,
    simulate,
    spectral_atoms,
    stable_tail_dependence,
    theta_from_tau,
)
from .setfun import (
    EcfTable,
    GroundSet,
    SetFunction,
    complete_dependence,
    delta,
    independence,
    successive_delta,
)
from .stationary import (
    GridSpec,
    StormModel,
    is_translation_invariant,
    storm_chi,
    storm_simulate,
    storm_tau,
)
from .transform import (
    BernsteinSpec,
    bernstein_eval,
    transform_ecf,
    triangle_check_eta,
    triangle_check_theta,
)

__version__ = "0.1.0"
