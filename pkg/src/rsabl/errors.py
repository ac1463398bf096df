"""Exception hierarchy shared by every rsabl module."""


class RsablError(Exception):
    """Base class for data and usage errors (CLI exit code 2)."""


class ParseError(RsablError):
    pass


class SchemaError(RsablError):
    pass


class DomainError(RsablError):
    pass


class UnknownAttribute(RsablError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class UnknownObject(RsablError, IndexError):
    pass


class AttributeAlreadyInBase(RsablError, ValueError):
    pass


class CapExceeded(RsablError):
    pass


class LengthMismatch(RsablError, ValueError):
    pass


class EmptyBatch(RsablError, ValueError):
    pass


class ConfigError(RsablError, ValueError):
    pass
