"""Explicit closed-form amplitude for the mirrored conjugate-coupling pair.

For two scatterers at +-r0 with couplings -k^2 (s + i g) and its conjugate
(s = alpha*sigma, g = alpha*gamma), the 2 x 2 system inverts by hand:

    u_s = (1 / 2 pi D) [ (s cos x- - g sin x-) / (k^2 (s^2 + g^2))
                         + (e^{2ikr0} cos x+ - 2ikr0 cos x-) / (8 pi r0) ]

    D = (2 pi - i k^3 s) / (2 pi k^4 (s^2 + g^2))
        - (4 k^2 r0^2 + e^{4ikr0}) / (64 pi^2 r0^2)

with x+- = k r0.(a_hat +- s_hat) the pair's interference phases and D the
determinant of the coefficient matrix. This module is an independent
verification path: the generic solver is ground truth, and any
disagreement beyond ~1e-12 relative is a bug in one of the two
transcriptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SpectralSingularityError
from .model import Direction, PTDoubleDeltaParams, interference_phases
from .solver import FOUR_PI, PIVOT_RATIO_FLOOR, AmplitudeResult, Scheme

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ClosedFormBreakdown:
    """The closed-form amplitude split into its ingredients.

    amplitude = (term_interaction + term_geometry) / (2 pi determinant);
    term_interaction carries the coupling-dependent interference, while
    term_geometry depends on the pair separation only.
    """

    determinant: complex
    term_interaction: complex
    term_geometry: complex
    amplitude: complex


def pair_determinant(params: PTDoubleDeltaParams) -> complex:
    """Determinant of the two-scatterer coefficient matrix, in closed form."""
    s = params.alpha * params.sigma
    g = params.alpha * params.gamma
    k = params.k
    r0 = params.r0_mag
    sg2 = s * s + g * g
    coupling_term = (TWO_PI - 1j * k**3 * s) / (TWO_PI * k**4 * sg2)
    geometry_term = (4.0 * k * k * r0 * r0 + complex(np.exp(4j * k * r0))) / (
        64.0 * math.pi**2 * r0 * r0
    )
    return coupling_term - geometry_term


def _singularity_floor(params: PTDoubleDeltaParams) -> float:
    # Mirror of the solver's pivot test: for a 2x2 the smallest pivot is
    # ~ |det| / max-entry, so det is compared against threshold * max^2.
    k = params.k
    r0 = params.r0_mag
    z1 = -(k**2) * params.strength
    max_entry = max(
        abs(1.0 / z1 + 1j * k / FOUR_PI),
        abs(1.0 / z1.conjugate() + 1j * k / FOUR_PI),
        1.0 / (8.0 * math.pi * r0),
    )
    return PIVOT_RATIO_FLOOR * max_entry * max_entry


def closed_form_breakdown(
    params: PTDoubleDeltaParams, a_hat: Direction, s_hat: Direction
) -> ClosedFormBreakdown:
    """Evaluate the closed-form amplitude, returning all intermediate terms."""
    s = params.alpha * params.sigma
    g = params.alpha * params.gamma
    k = params.k
    r0 = params.r0_mag
    sg2 = s * s + g * g

    determinant = pair_determinant(params)
    if abs(determinant) < _singularity_floor(params):
        raise SpectralSingularityError(
            f"closed-form determinant {abs(determinant):.3e} below the "
            f"spectral-singularity threshold",
            smallest_pivot=abs(determinant),
        )

    phase_plus, phase_minus = interference_phases(params, a_hat, s_hat)
    term_interaction = complex(
        (s * math.cos(phase_minus) - g * math.sin(phase_minus)) / (k * k * sg2)
    )
    term_geometry = (
        complex(np.exp(2j * k * r0)) * math.cos(phase_plus)
        - 2j * k * r0 * math.cos(phase_minus)
    ) / (8.0 * math.pi * r0)
    amplitude = (term_interaction + term_geometry) / (TWO_PI * determinant)
    return ClosedFormBreakdown(determinant, term_interaction, term_geometry, amplitude)


def amplitude_closed_form(
    params: PTDoubleDeltaParams, a_hat: Direction, s_hat: Direction
) -> AmplitudeResult:
    """Closed-form scattering amplitude for the mirrored pair."""
    breakdown = closed_form_breakdown(params, a_hat, s_hat)
    return AmplitudeResult(breakdown.amplitude, Scheme.CLOSED_FORM)
