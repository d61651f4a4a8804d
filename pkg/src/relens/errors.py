"""Exception hierarchy shared by every relens module."""


class RelensError(Exception):
    """Base class for all errors raised by relens."""


class MissingAttribute(RelensError):
    pass


class TypeMismatch(RelensError):
    """Raised when values of different scalar kinds are compared."""


class Unevaluable(RelensError):
    pass


class BadRename(RelensError):
    pass


class DomainMismatch(RelensError):
    pass


class UnboundVariable(RelensError):
    pass


class NotTreeForm(RelensError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class FDViolation(RelensError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class Overlap(RelensError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotMinimal(RelensError):
    pass


class PreconditionViolated(RelensError):
    pass


class LensTypeError(RelensError):
    """A lens expression failed to type check.

    ``rule`` names the typing rule whose side condition failed.
    """

    def __init__(self, rule, message, witness=None):
        super().__init__(f"[{rule}] {message}")
        self.rule = rule
        self.witness = witness


class UnsupportedVariant(LensTypeError):
    def __init__(self, message):
        super().__init__("join", message)


class SchemaViolation(RelensError):
    def __init__(self, constraint, message, witness=None):
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint
        self.witness = witness


class UnknownTable(RelensError):
    pass


class KeyCollision(RelensError):
    pass


class Unrenderable(RelensError):
    pass


class ParseError(RelensError):
    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)
        self.line = line
        self.column = column
