"""Exception hierarchy shared by the solvers and the command line."""


class WbaryError(Exception):
    """Base class for all errors raised by :mod:`wbary`."""


class MeasureError(WbaryError, ValueError):
    """Invalid measure data (empty, non-finite, degenerate weights)."""


class SolverError(WbaryError):
    """A numerical solver failed to produce a certified answer."""


class InfeasibleError(SolverError):
    pass


class UnboundedError(SolverError):
    pass


class IterationLimitError(SolverError):
    pass


class SizeCapError(WbaryError):
    """Problem exceeds a configured size cap (combinatorial or LP size)."""
