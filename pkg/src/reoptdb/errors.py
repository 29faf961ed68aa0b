"""Exception hierarchy shared by every module."""


class ReoptError(Exception):
    """Base class for all errors raised by reoptdb."""


class CatalogError(ReoptError):
    pass


class CorruptCatalogError(CatalogError):
    pass


class CsvFormatError(CatalogError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class ParseError(ReoptError):
    def __init__(self, message, position=None, token=None):
        where = "" if position is None else f" at position {position}"
        got = "" if token is None else f" (near {token!r})"
        super().__init__(f"{message}{where}{got}")
        self.position = position
        self.token = token


class QueryError(ReoptError):
    """A query references a relation or column that does not exist."""


class PlanError(ReoptError):
    pass


class EmptySampleError(ReoptError):
    """A base sample has no rows, so sampling cannot produce an estimate."""


class InvariantViolation(ReoptError):
    """Raised when a property that theory guarantees fails to hold."""
