"""Exception hierarchy shared by all modules."""


class QLMassError(Exception):
    """Base class for library errors."""


class ConfigurationError(QLMassError, ValueError):
    """Invalid parameter or configuration value."""


class DimensionError(QLMassError, ValueError):
    """Fields live on incompatible grids or have the wrong shape."""


class GeometryError(QLMassError, ValueError):
    """A metric fails positivity or another geometric sanity check.

    Attributes
    ----------
    worst_node : tuple or None
        Grid index of the offending node.
    worst_value : float or None
        The offending value (for example the smallest eigenvalue).
    """

    def __init__(self, message, worst_node=None, worst_value=None):
        super().__init__(message)
        self.worst_node = worst_node
        self.worst_value = worst_value


class PreconditionError(QLMassError, ValueError):
    """An operation was called on data that violates its precondition."""


class ConvergenceError(QLMassError, RuntimeError):
    """An iterative solver failed to reach its tolerance.

    Attributes
    ----------
    history : list
        Per-iteration diagnostics recorded by the solver.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class AdmissibilityError(QLMassError, RuntimeError):
    """A time function or surface fails an admissibility gate."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
