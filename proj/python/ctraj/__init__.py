"""Complex-trajectory semiclassical wave packet propagation."""

from ._core import (
    CtrajError,
    RunConfig,
    branches,
    capability_matrix,
    checks,
    compare,
    free_particle_exact,
    harmonic_exact,
    load_config,
    parse_config,
    propagate,
    propagate_csv,
    propagator,
    state_size,
    stirling,
)

__all__ = [
    "CtrajError",
    "RunConfig",
    "branches",
    "capability_matrix",
    "checks",
    "compare",
    "free_particle_exact",
    "harmonic_exact",
    "load_config",
    "parse_config",
    "propagate",
    "propagate_csv",
    "propagator",
    "state_size",
    "stirling",
]
