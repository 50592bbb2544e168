"""Exception types shared across the package."""


class SemlocError(Exception):
    """Base class for all semloc errors."""


class ParseError(SemlocError):
    """A document (map, log, config) is structurally malformed."""


class ValidationError(SemlocError):
    """A parsed document violates a map-model invariant.

    Carries the full violation list; the message names the first one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        first = str(self.violations[0]) if self.violations else "unknown violation"
        super().__init__(first)


class OutOfBoundsError(SemlocError):
    """A query pose or point lies outside the occupancy grid."""


class NoFreeSpaceError(SemlocError):
    """No FREE cell is available to sample from."""


class NoMatchingRoomError(SemlocError):
    """No room matches any of the requested categories."""


class NonPositiveFactorError(SemlocError):
    """A weight update factor was zero, negative or non-finite."""


class EmptyInjectionRegionError(SemlocError):
    """A text box contains no FREE cell to inject particles into."""


class TooFewSessionsError(SemlocError):
    """Stability analysis needs at least two sessions."""


class WaypointInObstacleError(SemlocError):
    """A trajectory waypoint is not on a FREE cell."""


class EmptyOverlapError(SemlocError):
    """Two trajectories share no time-aligned poses."""
