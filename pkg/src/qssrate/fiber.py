"""Fiber attenuation and the repeaterless reference bound."""

from __future__ import annotations

import math

from .errors import ValidationError

ALPHA_DB_PER_KM = 0.2


def distance_to_transmissivity(d_km: float, alpha_db_per_km: float = ALPHA_DB_PER_KM) -> float:
    if not d_km >= 0.0:
        raise ValidationError(f"distance must be >= 0 km, got {d_km}")
    if alpha_db_per_km < 0.0:
        raise ValidationError(f"attenuation must be >= 0 dB/km, got {alpha_db_per_km}")
    return 10.0 ** (-alpha_db_per_km * d_km / 10.0)


def transmissivity_to_distance(eta: float, alpha_db_per_km: float = ALPHA_DB_PER_KM) -> float:
    if not 0.0 < eta <= 1.0:
        raise ValidationError(f"transmissivity must lie in (0, 1], got {eta}")
    if alpha_db_per_km <= 0.0:
        raise ValidationError("attenuation must be > 0 dB/km to invert")
    return -10.0 * math.log10(eta) / alpha_db_per_km


def plob_reference(eta: float) -> float:
    """Repeaterless point-to-point key capacity ``-log2(1 - eta)``; ``inf`` at eta = 1."""
    if not 0.0 < eta <= 1.0:
        raise ValidationError(f"transmissivity must lie in (0, 1], got {eta}")
    if eta == 1.0:
        return math.inf
    return -math.log2(1.0 - eta)
