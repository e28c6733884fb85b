"""Exception types raised by the simulator."""


class PscSimError(Exception):
    """Base class for all simulator errors."""


class PlacementError(PscSimError):
    """Rejection sampling could not find a feasible position or obstacle slot."""


class MobilityError(PscSimError):
    """A mobility model reached a state it cannot continue from."""


class GroupConstraintError(MobilityError):
    """A slave offset satisfying the group constraint was not found in time."""


class RadioConfigError(ValueError, PscSimError):
    """Unsupported radio parameters (e.g. an unknown antenna configuration)."""


class TraceError(ValueError, PscSimError):
    """A position trace cannot be exported or parsed."""
