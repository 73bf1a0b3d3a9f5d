"""Exception hierarchy shared by all anyonsim modules."""


class AnyonsimError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(AnyonsimError, ValueError):
    pass


class DimensionMismatchError(InvalidInputError):
    pass


class IndeterminateSyndromeError(AnyonsimError):
    """State is not an eigenstate of every stabilizer."""


class NonCyclicEvolutionError(AnyonsimError):
    """Composed operation does not return the input ray onto itself."""


class PhysicsInvariantError(AnyonsimError, RuntimeError):
    """A conserved quantity drifted beyond its tolerance during evolution."""


class NonConvergenceError(AnyonsimError, RuntimeError):
    pass


class ConfigError(AnyonsimError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
