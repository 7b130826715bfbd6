"""Exception hierarchy shared by all modules."""


class DWADMMError(Exception):
    """Base class for every error raised by this package."""


class NumericsError(DWADMMError, ValueError):
    """Bad matrix input: wrong shape, asymmetry, indefiniteness, non-finite values."""


class GraphError(DWADMMError, ValueError):
    pass


class ObjectiveError(DWADMMError, ValueError):
    pass


class SolverError(DWADMMError, RuntimeError):
    """A local subproblem solve failed.

    ``node`` is set by the engine so that failures can be traced to a row.
    """

    def __init__(self, message, node=None, iteration=None):
        super().__init__(message)
        self.node = node
        self.iteration = iteration

    def __str__(self):
        msg = super().__str__()
        where = []
        if self.iteration is not None:
            where.append(f"iteration {self.iteration}")
        if self.node is not None:
            where.append(f"node {self.node}")
        return f"{msg} ({', '.join(where)})" if where else msg


class AttackError(DWADMMError, ValueError):
    pass


class PolicyError(DWADMMError, ValueError):
    pass


class ScenarioError(DWADMMError, ValueError):
    """Invalid scenario configuration.

    ``field`` names the offending config key path and ``line`` the line of a
    JSON syntax error, when known.
    """

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line

    def __str__(self):
        msg = super().__str__()
        if self.line is not None:
            msg = f"line {self.line}: {msg}"
        if self.field is not None:
            msg = f"{self.field}: {msg}"
        return msg
