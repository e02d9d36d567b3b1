"""Exception types shared across the package."""


class RelgenError(Exception):
    """Base class for all errors raised by relgen."""


class ModelError(RelgenError):
    """A factor graph or parametric factor graph violates a structural invariant."""


class AssignmentError(ModelError):
    """A joint assignment is incomplete or assigns a value outside a variable's range."""


class DegenerateFactorError(ModelError):
    """A factor table is all zeros, which makes the model unnormalizable."""


class TooLargeError(RelgenError):
    """The joint state space exceeds the enumeration cap."""


class ZeroSupportError(RelgenError):
    """A Gibbs full conditional has zero mass in the current state."""

    def __init__(self, rv: str, state: dict):
        self.rv = rv
        self.state = dict(state)
        super().__init__(
            f"full conditional of {rv!r} has zero mass at state {self.state!r}; "
            "consider learning with Laplace smoothing (delta > 0)"
        )


class LoadError(RelgenError):
    """A schema, data, cluster, or model file failed to load or validate."""


class QueryError(RelgenError):
    """A count query referenced an unknown column or cluster."""


class ParameterError(RelgenError):
    """A user-supplied parameter is out of its documented range."""
