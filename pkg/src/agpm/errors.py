class AgpmError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(AgpmError, ValueError):
    pass


class GraphFormatError(AgpmError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedError(AgpmError):
    pass


class PatternLookupError(AgpmError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class OracleRefusal(AgpmError):
    """Raised by brute-force diagnostics when the input is too large."""
