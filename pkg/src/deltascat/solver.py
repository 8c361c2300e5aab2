"""Exact solution of the N-scatterer problem.

Evaluating the scattered-field ansatz at the scatterer sites gives a dense
complex N x N linear system

    A X = b,   A_nn = 1/z_n + ik/(4 pi),   A_mn = G(|a_m - a_n|)  (m != n),
    b_m = exp(i k a_m . a_hat),            X_n = z_n u(a_n),

whose solution carries everything observable: the far-field amplitude is
-(1/4 pi) sum_m X_m exp(-i k a_m . s_hat) (the coefficient of exp(ikr)/r)
and the total field is u(r) = u0(r) - sum_n X_n G(|r - a_n|).

A is symmetric and independent of the incident and outgoing directions,
so it is factorized once per (configuration, k) and reused across
direction scans. Singular A is a physical spectral singularity and is
reported as an error, never regularized away.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import SpectralSingularityError
from .model import Direction, IncidentWave, ScattererConfig

FOUR_PI = 4.0 * math.pi

# Smallest LU pivot below this fraction of the largest matrix entry is
# treated as singular.
PIVOT_RATIO_FLOOR = 1e-10

# Accepted solves must satisfy ||A x - b|| <= RESIDUAL_BOUND ||A|| ||x||.
RESIDUAL_BOUND = 1e-12


class Scheme(enum.Enum):
    """Provenance tag for an amplitude value."""

    EXACT = "exact"
    CLOSED_FORM = "closed_form"
    NEUMANN = "neumann"
    RB_FAR_ZONE = "rb_far_zone"
    FIRST_BORN = "first_born"


@dataclass(frozen=True)
class AmplitudeResult:
    """Far-field amplitude (coefficient of exp(ikr)/r) with provenance."""

    value: complex
    scheme: Scheme

    def __post_init__(self):
        z = complex(self.value)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"amplitude must be finite, got {z}")
        object.__setattr__(self, "value", z)


@dataclass(eq=False)
class CoefficientMatrix:
    """The N x N system matrix together with its (lazy) LU factorization."""

    entries: np.ndarray
    k: float

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"entries must be square, got shape {arr.shape}")
        arr.setflags(write=False)
        self.entries = arr

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def factorization(self) -> tuple[np.ndarray, np.ndarray]:
        """LU factorization with partial pivoting (LAPACK zgetrf)."""
        return scipy.linalg.lu_factor(self.entries, check_finite=False)

    @cached_property
    def smallest_pivot(self) -> float:
        lu, _ = self.factorization
        return float(np.min(np.abs(np.diag(lu))))

    def raise_if_singular(self) -> None:
        floor = PIVOT_RATIO_FLOOR * float(np.max(np.abs(self.entries)))
        if self.smallest_pivot < floor:
            raise SpectralSingularityError(
                f"coefficient matrix is singular (spectral singularity): "
                f"smallest pivot {self.smallest_pivot:.3e} below threshold {floor:.3e}",
                smallest_pivot=self.smallest_pivot,
            )


def build_matrix(config: ScattererConfig, k: float) -> CoefficientMatrix:
    """Assemble the system matrix for a configuration at wavenumber k.

    Diagonal: 1/z_n + ik/(4 pi). Off-diagonal: the free Green's function of
    the inter-scatterer separation. Constructed exactly symmetric.
    """
    if not (math.isfinite(k) and k > 0.0):
        raise ValueError(f"wavenumber must be positive and finite, got {k}")
    if not all(s.is_active for s in config.scatterers):
        raise ValueError(
            "configuration contains zero (absent) couplings; "
            "restrict it with ScattererConfig.active() first"
        )
    pos = config.positions
    z = config.couplings
    n = len(config)
    entries = np.empty((n, n), dtype=complex)
    for m in range(n):
        entries[m, m] = 1.0 / z[m] + 1j * k / FOUR_PI
        for jj in range(m + 1, n):
            d = float(np.linalg.norm(pos[m] - pos[jj]))
            g = complex(np.exp(1j * k * d)) / (FOUR_PI * d)
            entries[m, jj] = g
            entries[jj, m] = g
    return CoefficientMatrix(entries, float(k))


@dataclass(eq=False)
class SolveResult:
    """Solution X of A X = b for one incident wave, reusable across all
    outgoing directions."""

    x: np.ndarray
    config: ScattererConfig
    wave: IncidentWave
    matrix: CoefficientMatrix
    residual: float

    def __post_init__(self):
        arr = np.array(self.x, dtype=complex)
        arr.setflags(write=False)
        self.x = arr


def solve_system(
    matrix: CoefficientMatrix, wave: IncidentWave, config: ScattererConfig
) -> SolveResult:
    """Solve A X = b by the factorized LU, with singularity and residual
    checks.

    Raises SpectralSingularityError when the smallest pivot falls below
    PIVOT_RATIO_FLOOR relative to the largest entry, or when the residual
    exceeds RESIDUAL_BOUND * ||A|| * ||X||.
    """
    matrix.raise_if_singular()
    b = wave.field(config.positions)
    x = scipy.linalg.lu_solve(matrix.factorization, b, check_finite=False)
    residual = float(np.linalg.norm(matrix.entries @ x - b))
    bound = RESIDUAL_BOUND * float(
        np.linalg.norm(matrix.entries) * np.linalg.norm(x)
    )
    if residual > bound:
        raise SpectralSingularityError(
            f"solve residual {residual:.3e} exceeds bound {bound:.3e} "
            f"(near-singular system)",
            smallest_pivot=matrix.smallest_pivot,
        )
    return SolveResult(x, config, wave, matrix, residual)


def solve_for_wave(config: ScattererConfig, wave: IncidentWave) -> SolveResult | None:
    """Build, factorize and solve for one incident wave.

    Returns None when no scatterer couples (the field is free); callers
    then short-circuit to zero amplitude / incident field.
    """
    active = config.active()
    if active is None:
        return None
    return solve_system(build_matrix(active, wave.k), wave, active)


def amplitude_from_solution(result: SolveResult, s_hat: Direction) -> AmplitudeResult:
    """Far-field amplitude -(1/4 pi) sum_m X_m exp(-i k a_m . s_hat)."""
    k = result.wave.k
    phases = np.exp(-1j * k * (result.config.positions @ s_hat.unit))
    return AmplitudeResult(complex(-(phases @ result.x) / FOUR_PI), Scheme.EXACT)


def amplitudes_for_directions(result: SolveResult, directions: np.ndarray) -> np.ndarray:
    """Vectorized far-field amplitudes for an (M, 3) array of unit outgoing
    directions, reusing one solve."""
    dirs = np.asarray(directions, dtype=float)
    k = result.wave.k
    phases = np.exp(-1j * k * (dirs @ result.config.positions.T))
    return -(phases @ result.x) / FOUR_PI


def amplitude_exact(
    config: ScattererConfig, wave: IncidentWave, s_hat: Direction
) -> AmplitudeResult:
    """Exact scattering amplitude for one (incident, outgoing) pair.

    Scanning many outgoing directions? Use solve_for_wave once and
    amplitude_from_solution / amplitudes_for_directions to amortize the
    factorization.
    """
    result = solve_for_wave(config, wave)
    if result is None:
        return AmplitudeResult(0.0j, Scheme.EXACT)
    return amplitude_from_solution(result, s_hat)


def total_field_from_solution(result: SolveResult, points) -> np.ndarray:
    """Total field u(r) = u0(r) - sum_n X_n G(|r - a_n|) at one point (3,)
    or many points (..., 3). Points may not coincide with a scatterer."""
    pts = np.asarray(points, dtype=float)
    k = result.wave.k
    seps = np.linalg.norm(
        pts[..., np.newaxis, :] - result.config.positions, axis=-1
    )
    if np.any(seps == 0.0):
        raise ValueError("field evaluation point coincides with a scatterer")
    scattered = (np.exp(1j * k * seps) / (FOUR_PI * seps)) @ result.x
    return result.wave.field(pts) - scattered


def total_field(config: ScattererConfig, wave: IncidentWave, r) -> complex:
    """Total field at a single point; prefers the solve-reusing variant for
    grids of points."""
    result = solve_for_wave(config, wave)
    if result is None:
        return complex(wave.field(np.asarray(r, dtype=float)))
    return complex(total_field_from_solution(result, r))
