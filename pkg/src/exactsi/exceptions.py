"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, numeric and
singularity problems exit 2, verification failures exit 3.
"""


class ExactSIError(Exception):
    """Base class for all package errors."""


class ValidationError(ExactSIError):
    """Malformed inputs: bad files, bad configs, violated data invariants."""


class SingularTimeError(ExactSIError):
    """A field or coefficient was requested at a time where it is singular."""


class SingularScoreError(ExactSIError):
    """The score denominator B(t) vanishes at the requested time."""


class NotApplicableError(ExactSIError):
    """The operation is undefined for the given inputs (wrong family, wrong d)."""


class NumericError(ExactSIError):
    """Non-finite values where finite ones are required."""


class InsufficientDataError(ExactSIError):
    """Too few samples for the estimator to be meaningful."""
