class SpanTreeError(Exception):
    """Base class for errors raised by the sampling core."""


class GeometryError(SpanTreeError, ValueError):
    """Invalid region geometry, or a lattice too coarse for the region."""


class DisconnectedGraphError(GeometryError):
    """The constructed region graph has more than one component."""


class ForcedTreeError(SpanTreeError, ValueError):
    """A forced tree fragment is cyclic or disconnected."""


class DegenerateInputError(SpanTreeError, ValueError):
    """Empty curves, curves that are too short, or out-of-range cover parameters."""
