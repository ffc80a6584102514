"""Exception types shared across the library."""


class SchmidtProbeError(Exception):
    """Base class for all library-specific failures."""


class InvalidDimension(SchmidtProbeError):
    """Dimension is not a prime >= 2."""


class InvalidResidue(SchmidtProbeError):
    """Residue outside {0, ..., p-1} or not invertible mod p."""


class RealizationFailure(SchmidtProbeError):
    """Gram matrix is not positive semidefinite beyond tolerance."""


class DegenerateProjection(SchmidtProbeError):
    """A projected state has (numerically) zero norm; the overlap is undefined."""


class DegenerateSystem(SchmidtProbeError):
    """A linear system that should determine the unknowns is rank deficient."""


class InconsistentRecord(SchmidtProbeError):
    """Measured overlaps violate the model assumptions (complex Gram fed to a
    real-case solver, excessive noise, or corrupted data)."""


class RankDeficient(SchmidtProbeError):
    """The parameter-inversion system has less than full column rank."""


class DomainViolation(SchmidtProbeError):
    """An intermediate quantity left the domain of a square root."""


class SolverFailure(SchmidtProbeError):
    """An iterative solver did not converge."""
