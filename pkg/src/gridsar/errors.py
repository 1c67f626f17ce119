"""Exception types shared across the package."""


class GridSarError(Exception):
    """Base class for all gridsar errors."""


class InvalidDistribution(GridSarError, ValueError):
    """A probability vector failed validation (negative mass, bad sum, duplicates)."""


class ZeroProbabilityObservation(GridSarError):
    """Bayes update requested for an observation with (near-)zero likelihood."""


class BudgetExceeded(GridSarError):
    """An enumeration or solve exceeded its configured budget."""


class TerminalStateStep(GridSarError):
    """transition() called on a state that already terminated."""


class UnreachableStratum(GridSarError):
    """A policy was queried at a (robot, battery) stratum it was never solved for."""


class InfeasiblePath(GridSarError):
    """An open-loop action sequence steps through a battery-terminal state.

    Callers are expected to run feasibility_truncate() first.
    """


class PathError(GridSarError, ValueError):
    """Base class for user-path validation failures."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NonAdjacentStep(PathError):
    """Consecutive path cells are not Manhattan-adjacent."""


class WrongStartCell(PathError):
    """Path does not begin at the scenario start cell."""


class StayNotSupported(PathError):
    """Path repeats a cell; there is no stay-in-place action."""


class DimensionMismatch(GridSarError, ValueError):
    """Feature vectors or weights of different lengths were combined."""


class UnknownTemplateSet(GridSarError, KeyError):
    """render_explanation() was asked for a template set that does not exist."""


class ScenarioValidationError(GridSarError, ValueError):
    """A scenario document failed validation.

    ``field`` holds a dotted path to the offending entry so API responses can
    point at it.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
