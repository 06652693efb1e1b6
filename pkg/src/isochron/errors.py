"""Exception hierarchy shared by every module of the package."""


class IsochronError(Exception):
    """Base class for all errors raised by isochron."""


# parsing
class ExpressionSyntaxError(IsochronError, SyntaxError):
    """Malformed expression text; carries 1-based line and column."""

    def __init__(self, message, text="", pos=0):
        self.text = text
        self.pos = pos
        self.line, self.column = _line_col(text, pos)
        full = f"{self.line}:{self.column}: {message}"
        IsochronError.__init__(self, full)
        self.msg = full
        self.lineno, self.offset = self.line, self.column

    def __str__(self):
        return self.msg


class UnknownVariable(ExpressionSyntaxError):
    """Name that is neither a state variable nor a declared parameter."""


class NegativeExponent(ExpressionSyntaxError):
    pass


class MalformedRationalExponent(ExpressionSyntaxError):
    pass


class DomainError(IsochronError, ArithmeticError):
    """Evaluation hit a pole or a branch cut."""


# exact arithmetic
class VariableContextMismatch(IsochronError):
    pass


class UnboundVariableInNumericMode(IsochronError):
    pass


class MissingWeight(IsochronError):
    pass


class ZeroPolynomial(IsochronError):
    pass


class LengthMismatch(IsochronError):
    pass


# power series
class NonInvertibleConstantTerm(IsochronError):
    pass


class NonzeroInnerConstant(IsochronError):
    pass


class NonUnitLinearCoefficient(IsochronError):
    pass


class BadConstantTerm(IsochronError):
    pass


# Liénard machinery
class MalformedSystem(IsochronError):
    pass


class MismatchedBase(IsochronError):
    pass


class ZeroV(IsochronError):
    pass


# C-algorithm
class NonlinearCOccurrence(IsochronError):
    pass


class TruncationSensitivity(IsochronError):
    pass


class UnboundParameter(IsochronError):
    pass


class NonPositiveK2(IsochronError):
    pass


class UnconventionalName(IsochronError):
    pass


# Gröbner
class ResourceLimit(IsochronError):
    pass


# numerics
class StepSizeUnderflow(IsochronError):
    pass


class BlowUp(IsochronError):
    pass


class NoReturnDetected(IsochronError):
    pass


class DomainErrorOnOrbit(IsochronError):
    pass


class InsufficientSamples(IsochronError):
    pass


# catalog
class ConstraintViolation(IsochronError):
    pass


class UnknownFamily(IsochronError):
    pass


def _line_col(text, pos):
    pos = max(0, min(pos, len(text)))
    line = text.count("\n", 0, pos) + 1
    start = text.rfind("\n", 0, pos) + 1
    return line, pos - start + 1
