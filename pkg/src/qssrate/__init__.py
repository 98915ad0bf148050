"""Secret-key rates for group-based continuous-variable quantum secret sharing."""

from .errors import ConsistencyError, DomainError, ValidationError
from .fiber import distance_to_transmissivity, plob_reference, transmissivity_to_distance
from .gaussian import entropic_h, symplectic_eigenvalues, two_mode_spectrum
from .oracle import oracle_reduced_cm
from .protocol import ChannelParams, GroupSpec, ProtocolConfig, bipartite_cm, reduced_cm_multipartite
from .rates import RateReport, asymptotic_rate_fh, optimize_modulation, secret_key_rate
from .schemes import Series, SweepSpec, build_scheme, max_distance, run_sweep

__all__ = [
    "ChannelParams", "ConsistencyError", "DomainError", "GroupSpec", "ProtocolConfig", "RateReport",
    "Series", "SweepSpec", "ValidationError", "asymptotic_rate_fh", "bipartite_cm", "build_scheme",
    "distance_to_transmissivity", "entropic_h", "max_distance", "optimize_modulation",
    "oracle_reduced_cm", "plob_reference", "reduced_cm_multipartite", "run_sweep",
    "secret_key_rate", "symplectic_eigenvalues", "transmissivity_to_distance", "two_mode_spectrum",
]
__version__ = "0.1.0"
