"""Free-space outgoing Green's function for the 3D Helmholtz operator, its
far-zone surrogate, and the cutoff-regularized on-site value.

G(x) = exp(ikx) / (4 pi x) is the outgoing fundamental solution. Its
on-site value G(0) diverges, which is the whole reason point scatterers
need coupling renormalization; requesting it raises rather than returning
infinity. The sharp-momentum-cutoff regularization

    G_L(0) = (1/2 pi^2) PV int_0^L p^2 / (p^2 - k^2) dp  +  i k / (4 pi)

keeps the outgoing prescription exactly (imaginary part k/4pi) while its
real part carries the linear divergence L/(2 pi^2) that the renormalized
coupling absorbs.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from .errors import OnSiteSingularityError

FOUR_PI = 4.0 * math.pi

# Absolute tolerance for each adaptive-quadrature piece of the PV integral.
_PV_ABS_TOL = 1e-12


def green(x: float, k: float) -> complex:
    """Outgoing Green's function exp(ikx)/(4 pi x) at separation x > 0.

    The modulus is exactly 1/(4 pi x); the wavenumber only rotates the
    phase.
    """
    if not (math.isfinite(k) and k > 0.0):
        raise ValueError(f"wavenumber must be positive and finite, got {k}")
    if x == 0.0:
        raise OnSiteSingularityError(
            "Green's function is singular at zero separation; "
            "use regularized_onsite for the on-site value"
        )
    if not (math.isfinite(x) and x > 0.0):
        raise ValueError(f"separation must be positive and finite, got {x}")
    return complex(np.exp(1j * k * x)) / (FOUR_PI * x)


def far_zone_green(r, r_prime, k: float) -> complex:
    """Far-zone surrogate (exp(ik|r|)/(4 pi |r|)) exp(-ik s.r'), s = r/|r|.

    Replaces G(|r - r'|) and is valid only for |r| much larger than |r'|;
    see far_zone_error for how badly it does outside that regime.
    """
    rv = np.asarray(r, dtype=float)
    rp = np.asarray(r_prime, dtype=float)
    if not (math.isfinite(k) and k > 0.0):
        raise ValueError(f"wavenumber must be positive and finite, got {k}")
    rmag = float(np.linalg.norm(rv))
    if rmag == 0.0:
        raise ValueError("far-zone evaluation point r = 0 is invalid")
    s_hat = rv / rmag
    return complex(np.exp(1j * k * rmag)) / (FOUR_PI * rmag) * complex(
        np.exp(-1j * k * float(np.dot(s_hat, rp)))
    )


def far_zone_error(r, r_prime, k: float) -> float:
    """Relative error |G_true - G_farzone| / |G_true| of the far-zone
    surrogate for a source at r' observed at r.

    Decays like |r'|/|r| once |r| dominates; evaluated at |r| = |r'| (the
    regime where the surrogate is not admissible) it is O(1).
    """
    rv = np.asarray(r, dtype=float)
    rp = np.asarray(r_prime, dtype=float)
    sep = float(np.linalg.norm(rv - rp))
    if sep == 0.0:
        raise OnSiteSingularityError("observation and source points coincide")
    exact = green(sep, k)
    return abs(exact - far_zone_green(rv, rp, k)) / abs(exact)


def regularized_onsite(k: float, cutoff: float) -> complex:
    """Cutoff-regularized on-site Green's value G_L(0) for momentum cutoff L.

    The principal value is computed by symmetric excision of a window
    around the pole p = k (the excised part folds into a regular integrand)
    plus adaptive quadrature on the remainder, each piece to 1e-12 absolute.
    The imaginary part is k/(4 pi) exactly by construction. The real part
    is monotone increasing in L and approaches L/(2 pi^2) for L >> k.
    """
    if not (math.isfinite(k) and k > 0.0):
        raise ValueError(f"wavenumber must be positive and finite, got {k}")
    if not (math.isfinite(cutoff) and cutoff > k):
        raise ValueError(
            f"cutoff must exceed the wavenumber (pole not enclosed): "
            f"cutoff={cutoff}, k={k}"
        )

    delta = 0.5 * min(k, cutoff - k)

    # p^2/(p^2 - k^2) = 1 + k^2/(p^2 - k^2); the constant integrates exactly.
    def tail(p):
        return k * k / (p * p - k * k)

    # Excised window folded to t in (0, delta]: regular, -> 3/2 as t -> 0.
    def folded(t):
        gp = (k + t) ** 2 / (2.0 * k + t)
        gm = (k - t) ** 2 / (2.0 * k - t)
        return (gp - gm) / t

    left, _ = quad(tail, 0.0, k - delta, epsabs=_PV_ABS_TOL, epsrel=_PV_ABS_TOL, limit=200)
    right, _ = quad(tail, k + delta, cutoff, epsabs=_PV_ABS_TOL, epsrel=_PV_ABS_TOL, limit=200)
    window, _ = quad(folded, 0.0, delta, epsabs=_PV_ABS_TOL, epsrel=_PV_ABS_TOL, limit=200)

    principal_value = (cutoff - 2.0 * delta) + left + right + window
    return complex(principal_value / (2.0 * math.pi**2), k / FOUR_PI)
