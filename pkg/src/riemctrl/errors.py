"""Exception hierarchy shared by every module."""


class RiemctrlError(Exception):
    """Base class for all library errors."""


class NumericError(RiemctrlError):
    """A numerical precondition failed (SPD, chart, non-finite)."""


class NotPositiveDefinite(NumericError):
    pass


class ChartDomain(NumericError):
    pass


class NonFinite(NumericError):
    pass


class DimensionMismatch(RiemctrlError, ValueError):
    pass


class UnknownModel(RiemctrlError, KeyError):
    pass


class InvalidParams(RiemctrlError, ValueError):
    pass


class NoChartLink(RiemctrlError):
    pass


class NoConvergence(RiemctrlError):
    """Raised by the shooting solver when Newton stalls.

    The best iterate found is kept on ``result`` so callers can still report it.
    """

    def __init__(self, iterations, residual, result=None):
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual
        self.result = result


class ConfigError(RiemctrlError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.line = line
        self.key = key


class ValidationError(ConfigError):
    def __init__(self, field, message=None):
        super().__init__(field if message is None else f"{field}: {message}")
        self.field = field


class IoError(RiemctrlError, OSError):
    """Reading or writing an output file failed."""
