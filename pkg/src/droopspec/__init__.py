"""Spectral small-signal stability assessment for droop-controlled microgrids.

The package decomposes a microgrid into oscillatory clusters through the
spectrum of the droop-weighted susceptance matrix C = M B', compares the
largest eigenvalue against the topology-independent threshold mu_cr, and
cross-validates every verdict against the full linearized state matrix.
"""

__version__ = "0.1.0"

from .netmodel import (  # noqa: E402
    BaseSystem,
    InverterRecord,
    LineRecord,
    NetworkModel,
    ParseError,
    ValidationError,
    Violation,
    parse_network,
    serialize_network,
    validate,
    DEFAULT_OMEGA_C,
)
from .admittance import (  # noqa: E402
    KronReductionError,
    SusceptanceSet,
    build_susceptance,
    kron_reduce,
    scale_to_bprime,
    susceptance_set,
)
from .spectral import (  # noqa: E402
    ClusterDescriptor,
    InternalConsistencyError,
    WeightedSpectrum,
    WeylCheck,
    droop_matrix,
    extract_clusters,
    weighted_spectrum,
    weyl_bound_check,
)
from .charpoly import (  # noqa: E402
    CharPolyModel,
    NumericalError,
    RootLocusResult,
    is_stable_mode,
    mu_critical,
    quintic_roots,
    root_locus,
)
from .statespace import (  # noqa: E402
    StateSpaceModel,
    Theorem1Report,
    TimeResponse,
    assemble_state_matrix,
    oracle_eigenvalues,
    theorem1_check,
    time_response,
)
from .analysis import (  # noqa: E402
    MuCrSurface,
    StabilityReport,
    SweepResult,
    analyze_network,
    find_crossings,
    mu_cr_surface,
    sweep_droop,
    sweep_line_length,
)
from .sampling import random_added_line, random_network  # noqa: E402

__all__ = [
    "__version__",
    # netmodel
    "BaseSystem", "InverterRecord", "LineRecord", "NetworkModel",
    "ParseError", "ValidationError", "Violation",
    "parse_network", "serialize_network", "validate", "DEFAULT_OMEGA_C",
    # admittance
    "KronReductionError", "SusceptanceSet",
    "build_susceptance", "kron_reduce", "scale_to_bprime", "susceptance_set",
    # spectral
    "ClusterDescriptor", "InternalConsistencyError", "WeightedSpectrum",
    "WeylCheck", "droop_matrix", "extract_clusters", "weighted_spectrum",
    "weyl_bound_check",
    # charpoly
    "CharPolyModel", "NumericalError", "RootLocusResult",
    "is_stable_mode", "mu_critical", "quintic_roots", "root_locus",
    # statespace
    "StateSpaceModel", "Theorem1Report", "TimeResponse",
    "assemble_state_matrix", "oracle_eigenvalues", "theorem1_check",
    "time_response",
    # analysis
    "MuCrSurface", "StabilityReport", "SweepResult",
    "analyze_network", "find_crossings", "mu_cr_surface",
    "sweep_droop", "sweep_line_length",
    # sampling
    "random_added_line", "random_network",
]
