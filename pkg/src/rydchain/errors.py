"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 2, ConvergenceError -> 3,
SingularityError / InfeasibleGeometryError -> 4.
"""


class RydchainError(Exception):
    """Base class for all package errors."""


class TableError(RydchainError):
    """Parameter-table file is missing, malformed, or violates an invariant."""


class ConfigError(RydchainError):
    """Run configuration is missing, malformed, or contains unknown keys."""


class SingularityError(RydchainError):
    """A forbidden resonance (e.g. Delta_l = V_ll') was hit."""


class ConvergenceError(RydchainError):
    """The inversion solver did not reach the residual tolerance.

    Carries the last iterate and residual for diagnostics.
    """

    def __init__(self, message, residual=None, last_iterate=None):
        super().__init__(message)
        self.residual = residual
        self.last_iterate = last_iterate


class InfeasibleGeometryError(RydchainError):
    """A solution would require an interatomic spacing below the hardware floor."""
