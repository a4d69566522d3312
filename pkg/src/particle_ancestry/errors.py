"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates an operation's contract."""


class CoarseningError(ParameterError):
    """The target partition is not obtainable by merging blocks of the source."""


class ResourceError(ParameterError):
    """An exact enumeration was requested at a size too large to run."""


class DegenerateTableError(RuntimeError):
    """A contingency table collapsed onto a single category on one side."""


class ZeroSupportError(RuntimeError):
    """Rejection sampling accepted no replicate at all.

    Carries ``raw_reps`` so callers can tell how hard the conditioning
    event was tried before giving up.
    """

    def __init__(self, raw_reps: int):
        super().__init__(
            f"conditioning event never occurred in {raw_reps} replicates; "
            "increase reps"
        )
        self.raw_reps = int(raw_reps)
