"""Exception types shared across the package."""


class RoccetLabError(Exception):
    """Base class for all package errors."""


class ScenarioError(RoccetLabError):
    """Invalid scenario, sweep, or parameter configuration."""


class SimulationError(RoccetLabError):
    """Runtime fault inside the simulator (audit failure, internal bug)."""


class MetricsError(RoccetLabError):
    """Metric computation rejected its inputs (empty window, zero baseline)."""


class TraceFormatError(RoccetLabError):
    """A trace or event file could not be parsed."""
