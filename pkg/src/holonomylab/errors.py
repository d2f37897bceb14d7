"""Exception hierarchy.

Errors split into two families that the command-line front end maps to
distinct exit codes: bad input (2) and numerical trouble (3).
"""


class HolonomyLabError(Exception):
    """Base class for every error raised by this package."""


class InputError(HolonomyLabError):
    """Malformed or inconsistent user input."""


class NumericalError(HolonomyLabError):
    """A computation hit a singularity, a domain violation or an ambiguity."""


class ExprSyntaxError(InputError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(InputError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class ExprDomainError(NumericalError):
    def __init__(self, message, point=None):
        if point is not None:
            message = f"{message} at point {tuple(float(v) for v in point)}"
        super().__init__(message)
        self.point = point


class ConfigError(InputError):
    pass


class NotKContactError(InputError):
    pass


class PartitionError(InputError):
    pass


class CurveDomainError(InputError):
    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t = {t!r})")
        self.t = t


class ScaleError(InputError):
    pass


class SingularMetricError(NumericalError):
    pass


class NotPositiveDefiniteError(NumericalError):
    pass


class ClusteringAmbiguityError(NumericalError):
    pass


class MatchingTieError(NumericalError):
    pass


class EmptySampleError(NumericalError):
    pass
