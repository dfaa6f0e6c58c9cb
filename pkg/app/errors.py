class QECError(Exception):
    """Base class for every error raised by the simulator."""


class ParameterRangeError(QECError, ValueError):
    pass


class DimensionError(QECError, ValueError):
    pass


class ChannelError(QECError):
    pass


class CodeConstructionError(QECError):
    pass


class SyndromeCollisionError(CodeConstructionError):
    """Two correctable errors share a syndrome but need different corrections."""


def check_probability(name, value):
    """Rejects channel parameters outside [0, 1]."""
    if not 0.0 <= value <= 1.0:
        raise ParameterRangeError(f"{name} must lie in [0, 1], got {value}")
    return float(value)
