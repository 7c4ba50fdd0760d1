"""Exception hierarchy shared by all modules.

The CLI maps each family to a distinct exit code (see ``loophodge.cli``).
"""


class LoopHodgeError(Exception):
    """Base class for all package errors."""


# -- I/O and geometry --------------------------------------------------------

class ParseError(LoopHodgeError):
    pass


class GeometryError(LoopHodgeError):
    """Base for invalid-mesh conditions."""


class NonManifoldError(GeometryError):
    pass


class OpenSurfaceError(GeometryError):
    pass


class OrientationError(GeometryError):
    pass


class DisconnectedError(GeometryError):
    pass


class DegenerateJacobianError(GeometryError):
    pass


class SingularFieldError(GeometryError):
    pass


# -- numerics ----------------------------------------------------------------

class SolverError(LoopHodgeError):
    pass


class NonConvergenceError(SolverError):
    pass


class IncompatibleRhsError(SolverError):
    pass


class QuadratureDivergenceError(SolverError):
    pass


class LinearDependenceError(LoopHodgeError):
    pass
