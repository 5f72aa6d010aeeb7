"""Exception hierarchy shared by every module of the package."""


class UnitFreeError(Exception):
    """Base class for all errors raised by ``unitfree``."""


class ExprError(UnitFreeError):
    pass


class ExprSyntaxError(ExprError, SyntaxError):
    """Malformed expression text.

    ``offset`` is the byte offset (0-based) of the offending token in the
    UTF-8 encoding of the input.
    """

    def __init__(self, message, offset, text=None):
        super().__init__(f"{message} (at byte offset {offset})")
        self.msg = message
        self.offset = offset
        self.text = text


class UnknownFunction(ExprError):
    def __init__(self, name, offset=None):
        super().__init__(f"unknown function {name!r}")
        self.name = name
        self.offset = offset


class EvalError(ExprError, ArithmeticError):
    """Division by zero, ``ln`` of a nonpositive value, ``sqrt`` of a negative."""


class ChartMismatch(UnitFreeError, ValueError):
    pass


class EmptySampleSet(UnitFreeError, ValueError):
    pass


class ZeroConversionFactor(UnitFreeError, ValueError):
    pass


class ZeroDenominator(UnitFreeError, ValueError):
    pass


class PointOffSurface(UnitFreeError, ValueError):
    pass


class PointOutOfRegion(UnitFreeError, ValueError):
    pass


class MissingInverse(UnitFreeError, ValueError):
    pass


class NonIntegrableInput(UnitFreeError, ValueError):
    pass


class NonSymmetricMetric(UnitFreeError, ValueError):
    pass


class NonPositiveDefinite(UnitFreeError, ValueError):
    pass


class StepFailure(UnitFreeError, RuntimeError):
    pass


class TooFewSamples(UnitFreeError, ValueError):
    pass
