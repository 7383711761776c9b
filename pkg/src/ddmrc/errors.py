"""Exception hierarchy.

Everything derives from ``DdmrcError`` so the CLI can map failures to exit
codes without catching unrelated exceptions.
"""


class DdmrcError(Exception):
    pass


class InputError(DdmrcError, ValueError):
    """Malformed input: wrong shapes, non-finite entries, bad schema."""


class DimensionError(InputError):
    pass


class NonFiniteError(InputError):
    pass


class AsymmetryError(InputError):
    pass


class SchemaError(InputError):
    pass


class NotInPiClass(InputError):
    """A QMI matrix lacks the structure needed for sampling or synthesis."""


class DegenerateAssumption(DdmrcError):
    """Psi(1) is numerically singular, so the eigenvalue test is undefined."""


class UnstableExperiment(DdmrcError):
    """A simulated trajectory left the admissible range."""


class SolverError(DdmrcError):
    """Numerical breakdown inside the conic backend."""
