"""Domain types for scalar waves, point scatterers, and the mirrored
conjugate-coupling (PT-symmetric) pair, plus the geometric helpers used
throughout the library.

All types are immutable values and safe to share between threads. The
library is unit-agnostic: positions carry a length unit, wavenumbers its
reciprocal, and the caller keeps them consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Constructors reject direction vectors whose norm deviates from 1 by more
# than this (silently normalizing would hide caller bugs).
UNIT_NORM_SLACK = 1e-6
# Vectors already unit to this precision are kept bitwise, which makes
# normalization idempotent.
_ALREADY_UNIT = 1e-14

# Couplings below this magnitude act as "scatterer not there".
COUPLING_FLOOR = 1e-300


def _as_vec3(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a real 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Direction:
    """Unit vector: incident-wave or observation direction.

    The constructor expects a vector that is already unit length (within
    ``UNIT_NORM_SLACK``); use :meth:`normalized` to build one from an
    arbitrary nonzero vector.
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        n = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(n) or abs(n - 1.0) > UNIT_NORM_SLACK:
            raise ValueError(
                f"direction ({self.x}, {self.y}, {self.z}) has norm {n:.9g}; "
                "pass a unit vector or use Direction.normalized()"
            )
        if abs(n - 1.0) > _ALREADY_UNIT:
            object.__setattr__(self, "x", self.x / n)
            object.__setattr__(self, "y", self.y / n)
            object.__setattr__(self, "z", self.z / n)

    @classmethod
    def normalized(cls, vector) -> "Direction":
        """Direction along an arbitrary nonzero 3-vector."""
        arr = np.asarray(vector, dtype=float)
        if arr.shape != (3,):
            raise ValueError(f"expected a 3-vector, got shape {arr.shape}")
        n = float(np.linalg.norm(arr))
        if not math.isfinite(n) or n == 0.0:
            raise ValueError(f"cannot normalize vector {arr} with norm {n}")
        if abs(n - 1.0) > _ALREADY_UNIT:
            arr = arr / n
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    @property
    def unit(self) -> np.ndarray:
        """The direction as a fresh (3,) float array."""
        return np.array([self.x, self.y, self.z])

    def __neg__(self) -> "Direction":
        return Direction(-self.x, -self.y, -self.z)


def orthonormal_frame(axis: Direction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-handed orthonormal frame (e1, e2, axis).

    Deterministic: the in-plane pair is seeded from the coordinate axis
    least aligned with ``axis``, so equal inputs give bitwise-equal frames.
    """
    a = axis.unit
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(a)))] = 1.0
    e1 = np.cross(helper, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    return e1, e2, a


@dataclass(frozen=True)
class IncidentWave:
    """Unit-amplitude scalar plane wave exp(i k a.r)."""

    k: float
    direction: Direction

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0.0):
            raise ValueError(f"wavenumber must be positive and finite, got {self.k}")

    def field(self, points) -> np.ndarray:
        """Incident field at one point (3,) or many points (..., 3)."""
        pts = np.asarray(points, dtype=float)
        return np.exp(1j * self.k * (pts @ self.direction.unit))


@dataclass(frozen=True, eq=False)
class PointScatterer:
    """One point scatterer: position and renormalized complex coupling.

    A coupling with magnitude below ``COUPLING_FLOOR`` is treated as an
    absent scatterer by the solve pipeline (see ScattererConfig.active).
    """

    position: np.ndarray
    coupling: complex

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position, "position"))
        z = complex(self.coupling)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"coupling must be finite, got {z}")
        object.__setattr__(self, "coupling", z)

    @property
    def is_active(self) -> bool:
        return abs(self.coupling) >= COUPLING_FLOOR


@dataclass(frozen=True, eq=False)
class ScattererConfig:
    """Ordered collection of N >= 1 point scatterers at distinct positions."""

    scatterers: tuple[PointScatterer, ...]

    def __post_init__(self):
        scs = tuple(self.scatterers)
        if len(scs) < 1:
            raise ValueError("at least one scatterer is required")
        object.__setattr__(self, "scatterers", scs)
        pos = self.positions
        for m in range(len(scs)):
            for n in range(m + 1, len(scs)):
                if np.linalg.norm(pos[m] - pos[n]) == 0.0:
                    raise ValueError(
                        f"scatterers {m} and {n} coincide at {pos[m].tolist()}"
                    )

    def __len__(self) -> int:
        return len(self.scatterers)

    @property
    def positions(self) -> np.ndarray:
        """(N, 3) array of positions."""
        return np.array([s.position for s in self.scatterers])

    @property
    def couplings(self) -> np.ndarray:
        """(N,) complex array of couplings."""
        return np.array([s.coupling for s in self.scatterers], dtype=complex)

    def active(self) -> "ScattererConfig | None":
        """Configuration restricted to scatterers that actually couple.

        Returns None when every coupling is below ``COUPLING_FLOOR``
        (the wave then propagates freely).
        """
        kept = tuple(s for s in self.scatterers if s.is_active)
        if not kept:
            return None
        if len(kept) == len(self.scatterers):
            return self
        return ScattererConfig(kept)


@dataclass(frozen=True, eq=False)
class PTDoubleDeltaParams:
    """Mirrored pair at +-r0 with complex-conjugate couplings.

    The couplings are z1 = -k^2 alpha (sigma + i gamma) at +r0 and
    z2 = conj(z1) at -r0: invariant under the combined parity flip
    r -> -r and complex conjugation. alpha, sigma, gamma are the
    renormalized real parameters; only the products alpha*sigma and
    alpha*gamma enter any observable, but the three are stored separately
    as the natural user-facing inputs.
    """

    r0: np.ndarray
    alpha: float
    sigma: float
    gamma: float
    k: float

    def __post_init__(self):
        object.__setattr__(self, "r0", _as_vec3(self.r0, "r0"))
        for name in ("alpha", "sigma", "gamma", "k"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if np.linalg.norm(self.r0) == 0.0:
            raise ValueError("r0 = 0 places both scatterers at the origin (coincident)")
        if not self.k > 0.0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")
        if self.alpha == 0.0 or (self.sigma == 0.0 and self.gamma == 0.0):
            raise ValueError(
                "degenerate coupling: alpha*(sigma + i gamma) must be nonzero"
            )

    @property
    def r0_mag(self) -> float:
        """Half-separation |r0|."""
        return float(np.linalg.norm(self.r0))

    @property
    def strength(self) -> complex:
        """Combined coupling scale alpha*sigma + i alpha*gamma.

        Its real part is the Hermitian (strength) product, its imaginary
        part the gain/loss product; the couplings are -k^2 * strength and
        -k^2 * conj(strength).
        """
        return complex(self.alpha * self.sigma, self.alpha * self.gamma)


def pt_to_config(params: PTDoubleDeltaParams) -> ScattererConfig:
    """Expand the mirrored-pair parameters into an explicit two-scatterer
    configuration: z1 = -k^2 alpha (sigma + i gamma) at +r0 and the exact
    complex conjugate at -r0."""
    z1 = -(params.k**2) * params.strength
    z2 = z1.conjugate()
    return ScattererConfig(
        (
            PointScatterer(params.r0, z1),
            PointScatterer(-params.r0, z2),
        )
    )


def interference_phases(
    params: PTDoubleDeltaParams, a_hat: Direction, s_hat: Direction
) -> tuple[float, float]:
    """Geometric phase arguments of the pair's interference pattern.

    Returns (k r0.(a+s), k r0.(a-s)) for incident direction a and outgoing
    direction s; the second vanishes in the forward direction, the first
    for backscattering.
    """
    plus = params.k * float(np.dot(params.r0, a_hat.unit + s_hat.unit))
    minus = params.k * float(np.dot(params.r0, a_hat.unit - s_hat.unit))
    return plus, minus
