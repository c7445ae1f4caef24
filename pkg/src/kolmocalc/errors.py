"""Exception types raised by the library.

Every failure mode that a caller can trigger through bad input or an
under-resolved computation gets its own class so scripts can react
selectively.  All inherit from :class:`KolmoError`.
"""

__all__ = [
    "KolmoError",
    "ConfigError",
    "StructureError",
    "NonMonotoneBlocks",
    "NonNullStarBlock",
    "RankDeficientBlock",
    "StructureMismatch",
    "NonPositiveLambda",
    "InsufficientOracleOrder",
    "StepUnderflow",
    "GammaOutOfRange",
    "DomainTooSmall",
    "NonIntegrableTail",
    "CoreDivergence",
    "NormalizationFailure",
    "TailDominance",
]


class KolmoError(Exception):
    """Base class for all library errors."""


class ConfigError(KolmoError):
    """Malformed configuration, structure file, or CLI arguments."""


class StructureError(KolmoError):
    """Invalid drift-matrix block structure."""


class NonMonotoneBlocks(StructureError):
    """Block sizes must satisfy d_0 >= d_1 >= ... >= d_r >= 1."""


class NonNullStarBlock(StructureError):
    """An entry outside the subdiagonal blocks exceeds tolerance."""


class RankDeficientBlock(StructureError):
    """Some subdiagonal block B_j has rank below d_j."""


class StructureMismatch(KolmoError):
    """Operands built over different group structures were combined."""


class NonPositiveLambda(KolmoError):
    """Dilation parameters must be strictly positive."""


class InsufficientOracleOrder(KolmoError):
    """A derivative of higher order than the handle supports was requested."""


class StepUnderflow(KolmoError):
    """Finite-difference step shrank below the resolvable scale."""


class GammaOutOfRange(KolmoError):
    """Fractional order outside (0, m_X) for the requested vector field."""


class DomainTooSmall(KolmoError):
    """|u| on the integration-domain boundary exceeds 1e-10 of its peak."""


class NonIntegrableTail(KolmoError):
    """The estimated h > h_max tail carries a non-negligible share of the integral."""


class CoreDivergence(KolmoError):
    """The small-zeta integrand grows fast enough to signal a divergent functional."""


class NormalizationFailure(KolmoError):
    """Mollifier mass re-quadrature disagreed with the reference value."""


class TailDominance(KolmoError):
    """An endpoint cell of the lambda-grid dominates the interpolation integral."""
