"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """An argument violates an operation's precondition."""


class NumericError(ArithmeticError):
    """A numerical routine produced a non-finite or unusable result."""


class IntegrabilityError(NumericError):
    """An integral that must be finite appears to diverge."""


class CapabilityError(NotImplementedError):
    """The requested operation is not available for this kernel family."""


class ConfigError(ValueError):
    """An experiment configuration is malformed.

    ``field`` is the dotted path of the offending key, ``line`` the line in the
    source file when it could be located.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
