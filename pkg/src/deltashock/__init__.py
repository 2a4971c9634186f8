"""Exact Riemann solutions with delta shocks for weakly coupled 2x2 systems.

``u_t + f(u)_x = 0`` closes on its own (``f`` piecewise quadratic); ``v`` is
transported by ``v_t + G(u, v)_x = 0`` with ``G = u v`` or ``G = u v**2``.
"""

from .core import (
    DeltaAtom,
    DeltaShockError,
    FluxError,
    InconsistentFan,
    PiecewiseQuadraticFlux,
    Rarefaction,
    Shock,
    ShockClass,
    ShockTag,
    SolutionProfile,
    State,
    SystemSpec,
    UnsupportedScenario,
    VFluxKind,
    WaveFan,
    atom_mass_at,
    burgers_flux,
    double_well_flux,
    double_well_system,
    eval_u,
    eval_v,
    korchinski_system,
    modified_system,
)
from .delta_solver import amplitude_rate, build_profile, classify, threshold_report
from .scalar_riemann import oleinik_check, sampled_envelope_oracle, solve_scalar, tangency_points

__version__ = "0.1.0"
