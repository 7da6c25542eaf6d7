"""Homotopy-invariant iterated integrals on punctured spheres and tori.

Transport series along piecewise paths, shuffle-regularized values at
punctures, multiple zeta values and associator coefficients from asymptotic
limits, monodromy operators, and variational formulas in the puncture
positions.
"""

from .errors import (
    ConfigError,
    ConventionError,
    DecompositionUnavailableError,
    EndpointMismatchError,
    FitError,
    IterintError,
    MissingLabelError,
    NotGoodPunctureError,
    PoleProximityError,
    ToleranceError,
    VariationUnsupportedError,
)
from .paths import (
    ArcSegment,
    LineSegment,
    LoopSpec,
    Path,
    compose,
    line_path,
    loop_around,
    path_from_json,
    path_to_json,
    reverse,
)
from .regularization import (
    AssociatorSeries,
    AsymptoticExpansion,
    MzvRow,
    MzvTable,
    RegularizedTransport,
    RegularizedValue,
    associator,
    asymptotic_expansion,
    monodromy,
    mzv,
    reg_iterated,
    reg_line_integral,
    zeta_word,
)
from .surfaces import (
    FormBasis,
    FormSpec,
    StructureConstants,
    SurfaceConfig,
    ThetaParams,
    basis_from_json,
    basis_to_json,
    eval_form,
    fay_residual,
    lattice_distance,
    structure_constants,
)
from .transport import (
    IntegralResult,
    NcSeries,
    TransportResult,
    all_words,
    compose_series,
    invert_series,
    iterated_integral,
    transport_series,
)
from .variation import (
    VariationRequest,
    elliptic_variation_rhs,
    fd_variation,
    genus0_variation_rhs,
    random_sphere_request,
    random_torus_request,
    variation_rhs,
)
from .words import (
    EMPTY_WORD,
    DifferentialStructure,
    GeneralizedWord,
    Word,
    chen_d,
    decompose_at,
    decompose_leading,
    is_homotopy_invariant,
    shuffle,
    shuffle_gw,
    word,
    word_power,
)

__version__ = "0.1.0"

__all__ = [
    "ArcSegment",
    "AssociatorSeries",
    "AsymptoticExpansion",
    "ConfigError",
    "ConventionError",
    "DecompositionUnavailableError",
    "DifferentialStructure",
    "EMPTY_WORD",
    "EndpointMismatchError",
    "FitError",
    "FormBasis",
    "FormSpec",
    "GeneralizedWord",
    "IntegralResult",
    "IterintError",
    "LineSegment",
    "LoopSpec",
    "MissingLabelError",
    "MzvRow",
    "MzvTable",
    "NcSeries",
    "NotGoodPunctureError",
    "Path",
    "PoleProximityError",
    "RegularizedTransport",
    "RegularizedValue",
    "StructureConstants",
    "SurfaceConfig",
    "ThetaParams",
    "ToleranceError",
    "TransportResult",
    "VariationRequest",
    "VariationUnsupportedError",
    "Word",
    "all_words",
    "associator",
    "asymptotic_expansion",
    "basis_from_json",
    "basis_to_json",
    "chen_d",
    "compose",
    "compose_series",
    "decompose_at",
    "decompose_leading",
    "elliptic_variation_rhs",
    "eval_form",
    "fay_residual",
    "fd_variation",
    "genus0_variation_rhs",
    "invert_series",
    "is_homotopy_invariant",
    "iterated_integral",
    "lattice_distance",
    "line_path",
    "loop_around",
    "monodromy",
    "mzv",
    "path_from_json",
    "path_to_json",
    "random_sphere_request",
    "random_torus_request",
    "reg_iterated",
    "reg_line_integral",
    "reverse",
    "shuffle",
    "shuffle_gw",
    "structure_constants",
    "transport_series",
    "variation_rhs",
    "word",
    "word_power",
    "zeta_word",
]
