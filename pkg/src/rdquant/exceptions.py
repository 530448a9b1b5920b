"""Exception hierarchy.

Errors split into two families so callers (and the CLI exit codes) can tell
bad input apart from a computation that could not be carried out.
"""


class RdquantError(Exception):
    """Base class for every error raised by this package."""


class InputError(RdquantError, ValueError):
    """Malformed, inconsistent or infeasible input."""


class FormatError(InputError):
    """A file does not follow its documented layout."""


class SchemaError(InputError):
    """A named column is missing from a table."""


class ValidationError(InputError):
    """Values are present but violate a domain constraint."""


class DomainTooSmallError(ValidationError):
    pass


class ConstraintError(InputError):
    """A width floor, feasibility or ordering constraint is violated."""


class DomainError(InputError):
    """An argument lies outside the domain of the operation."""


class InsufficientDataError(InputError):
    pass


class EstimationError(RdquantError):
    """A well-formed problem that could not be estimated or solved."""


class BandwidthTooSmallError(EstimationError):
    pass


class CollinearityError(EstimationError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class InconsistencyError(EstimationError):
    """Internal invariant broken; indicates a bug rather than bad input."""
