"""Exception types shared across the simulator."""


class EndoteleopError(Exception):
    """Base class for all simulator errors."""


class InvalidCommand(EndoteleopError):
    """A slave-side command is malformed (non-finite values, wrong target layout)."""


class InvalidInput(EndoteleopError):
    """A master-side axes record is malformed; the session tick was rejected."""


class CodecError(EndoteleopError):
    """Wire message could not be decoded.

    Carries the byte offset at which decoding failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class SceneError(EndoteleopError):
    """Scene configuration is invalid."""


class DegenerateMarkers(EndoteleopError):
    """Marker chain cannot yield a bend angle (zero axial displacement)."""


class NotCompleted(EndoteleopError):
    """Completion time requested for a trial that never started or never finished."""


class ReplayDivergence(EndoteleopError):
    """Replay produced a state digest different from the recorded one."""

    def __init__(self, tick: int, expected: str, actual: str):
        super().__init__(
            f"replay diverged at tick {tick}: recorded {expected}, got {actual}"
        )
        self.tick = tick
        self.expected = expected
        self.actual = actual


class InvalidSweep(EndoteleopError):
    """Hysteresis sweep parameters are degenerate."""


class InvalidSample(EndoteleopError):
    """Statistical routine called with an empty sample."""
