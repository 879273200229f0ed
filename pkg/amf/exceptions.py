class AMFError(Exception):
    pass


class InvalidBounds(AMFError, ValueError):
    pass


class DimensionMismatch(AMFError, ValueError):
    pass


class ConfigurationError(AMFError, ValueError):
    pass


class NonFiniteFitness(AMFError, ArithmeticError):
    pass


class EventNotInHistory(AMFError, LookupError):
    pass


class SpecError(ConfigurationError):
    def __init__(self, message: str, path: str = "", line: int | None = None):
        super().__init__(message)
        self.path = path
        self.line = line

    def render(self, source: str) -> str:
        """Formats the error as ``<source>:<line>: <path>: <message>``."""
        location = f"{source}:{self.line}" if self.line is not None else source
        key = f" {self.path}:" if self.path else ""
        return f"{location}:{key} {self.args[0]}"
