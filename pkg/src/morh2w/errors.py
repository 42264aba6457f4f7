"""Exception hierarchy shared across the package."""


class Morh2wError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(Morh2wError):
    """Matrix shapes are incompatible with the requested operation."""


class ParseError(Morh2wError):
    """A model or config file could not be parsed."""


class SingularShift(Morh2wError):
    """Shifted system (sI - A) is numerically singular."""


class DefectiveMatrix(Morh2wError):
    """Eigenvalue gap too small for a reliable spectral factorization."""


class NoConvergence(Morh2wError):
    """An iterative dense kernel (QR/SVD) failed to converge."""


class SpectrumOverlap(Morh2wError):
    """Spectra of the Sylvester coefficients are not sufficiently disjoint."""


class NotHurwitz(Morh2wError):
    """Matrix expected to be Hurwitz has an eigenvalue in the closed RHP."""


class NotPSD(Morh2wError):
    """Matrix expected positive semidefinite has a negative eigenvalue."""


class UnstableSystem(Morh2wError):
    """Operation requires an asymptotically stable system."""


class NonzeroFeedthrough(Morh2wError):
    """H2 norm requested for a system with nonzero feedthrough."""


class RankDeficient(Morh2wError):
    """Input matrix does not have full column rank."""


class PivotBreakdown(Morh2wError):
    """Biorthogonalization hit a near-orthogonal column pair."""


class SingularCorrection(Morh2wError):
    """Correction matrix V^T W is singular; use the biorthogonal mode."""


class RankTooLow(Morh2wError):
    """Requested reduced order exceeds the numerical rank available."""


class PerturbationUnstable(Morh2wError):
    """A finite-difference perturbation destabilized the system."""


class InvalidBand(Morh2wError):
    """Invalid frequency band specification."""


class NumericalInconsistency(Morh2wError):
    """Two computations that must agree disagreed beyond tolerance."""


class UnstableIterateWarning(UserWarning):
    """A reduction iterate produced a non-Hurwitz projected matrix."""
