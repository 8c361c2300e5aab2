"""deltascat: exact scattering from arrays of renormalized point scatterers
in three dimensions.

The exact N-scatterer solve (solver), the closed-form amplitude of the
mirrored conjugate-coupling pair (closed_form), a correct Neumann
multiple-scattering expansion and the flawed far-zone-iterated Born
recursion it is contrasted with (series), cross sections (observables),
cutoff renormalization diagnostics (renorm), and a scene-driven CLI (cli).
"""

from .closed_form import (
    ClosedFormBreakdown,
    amplitude_closed_form,
    closed_form_breakdown,
    pair_determinant,
)
from .errors import OnSiteSingularityError, SpectralSingularityError
from .greens import far_zone_error, far_zone_green, green, regularized_onsite
from .model import (
    Direction,
    IncidentWave,
    PointScatterer,
    PTDoubleDeltaParams,
    ScattererConfig,
    interference_phases,
    orthonormal_frame,
    pt_to_config,
)
from .observables import (
    AngularGrid,
    differential_cross_section,
    optical_theorem_residual,
    total_cross_section,
)
from .renorm import (
    CutoffScheme,
    cutoff_matched_amplitude,
    effective_inverse_coupling,
    renormalization_flow_check,
)
from .series import (
    FarZoneIterationState,
    FarZoneSeriesParams,
    SeriesResult,
    discrepancy_slope,
    estimate_spectral_radius,
    far_zone_born_amplitude,
    far_zone_discrepancy_scan,
    far_zone_site_iterates,
    far_zone_transfer_matrix,
    first_born,
    neumann_amplitude,
)
from .solver import (
    AmplitudeResult,
    CoefficientMatrix,
    Scheme,
    SolveResult,
    amplitude_exact,
    amplitude_from_solution,
    amplitudes_for_directions,
    build_matrix,
    solve_for_wave,
    solve_system,
    total_field,
    total_field_from_solution,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeResult",
    "AngularGrid",
    "ClosedFormBreakdown",
    "CoefficientMatrix",
    "CutoffScheme",
    "Direction",
    "FarZoneIterationState",
    "FarZoneSeriesParams",
    "IncidentWave",
    "OnSiteSingularityError",
    "PTDoubleDeltaParams",
    "PointScatterer",
    "ScattererConfig",
    "Scheme",
    "SeriesResult",
    "SolveResult",
    "SpectralSingularityError",
    "amplitude_closed_form",
    "amplitude_exact",
    "amplitude_from_solution",
    "amplitudes_for_directions",
    "build_matrix",
    "closed_form_breakdown",
    "cutoff_matched_amplitude",
    "differential_cross_section",
    "discrepancy_slope",
    "effective_inverse_coupling",
    "estimate_spectral_radius",
    "far_zone_born_amplitude",
    "far_zone_discrepancy_scan",
    "far_zone_error",
    "far_zone_green",
    "far_zone_site_iterates",
    "far_zone_transfer_matrix",
    "first_born",
    "green",
    "interference_phases",
    "neumann_amplitude",
    "optical_theorem_residual",
    "orthonormal_frame",
    "pair_determinant",
    "pt_to_config",
    "regularized_onsite",
    "renormalization_flow_check",
    "solve_for_wave",
    "solve_system",
    "total_cross_section",
    "total_field",
    "total_field_from_solution",
]
