"""Exception hierarchy shared by all dtnlab modules."""


class DtnError(Exception):
    """Base class for every error raised by dtnlab."""


class InvalidDomainError(DtnError, ValueError):
    pass


class ResolutionError(DtnError, ValueError):
    pass


class NoInteriorBallError(DtnError):
    pass


class HypothesisViolation(DtnError, ValueError):
    """A conductivity field fails symmetry or uniform ellipticity."""

    def __init__(self, hypothesis, message):
        super().__init__(f"{hypothesis} violated: {message}")
        self.hypothesis = hypothesis


class UnsupportedConfiguration(DtnError, NotImplementedError):
    pass


class OutOfDomainError(DtnError, ValueError):
    pass


class SolverDivergence(DtnError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual


class AssemblyInconsistency(DtnError, RuntimeError):
    pass


class ResourceError(DtnError, MemoryError):
    pass


class ConfigError(DtnError, ValueError):
    """Invalid experiment configuration; ``key`` and ``line`` locate the problem when known."""

    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.message = message
        self.key = key
        self.line = line
