"""Exception types shared across the library."""


class OnSiteSingularityError(ValueError):
    """Green's function requested at zero separation.

    The on-site value diverges; callers must go through the regularized
    path (``greens.regularized_onsite``) instead.
    """


class SpectralSingularityError(ArithmeticError):
    """The coefficient matrix is singular or numerically rank deficient.

    Zeros of det A are physically meaningful (spectral singularities /
    lasing points), so they are surfaced as errors rather than regularized
    away. ``smallest_pivot`` carries the magnitude of the smallest LU pivot
    (or of the determinant, for the closed-form path) that tripped the
    threshold.
    """

    def __init__(self, message: str, smallest_pivot: float | None = None):
        super().__init__(message)
        self.smallest_pivot = smallest_pivot
