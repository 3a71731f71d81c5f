"""Exception hierarchy for ringsim."""


class RingSimError(Exception):
    """Base class for every error raised by the library."""


class InvalidModulus(RingSimError, ValueError):
    pass


class InvalidPolynomial(RingSimError, ValueError):
    pass


class ConstructionFailure(RingSimError, RuntimeError):
    pass


class RingMismatch(RingSimError, ValueError):
    pass


class NotAUnit(RingSimError, ArithmeticError):
    pass


class UnsupportedRing(RingSimError, ValueError):
    pass


class InvalidThreshold(RingSimError, ValueError):
    pass


class NotInvertibleModulus(RingSimError, ValueError):
    pass


class UnknownGate(RingSimError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown gate"


class NotInvertible(RingSimError, ArithmeticError):
    pass


class WitnessInapplicable(RingSimError):
    """Raised when the conjugate of epsilon is not its negative.

    The offending gate already fails the sigma-state norm test; that state
    is attached as ``sigma``.
    """

    def __init__(self, message, sigma=None):
        super().__init__(message)
        self.sigma = sigma


class ContainsPrep(RingSimError, ValueError):
    pass


class NonInvertibleGate(RingSimError, ValueError):
    pass


class UnsupportedModulus(RingSimError, ValueError):
    pass


class CannotLower(RingSimError, ValueError):
    pass


class TooManyBranches(RingSimError, ValueError):
    pass


class TooManyVariables(RingSimError, ValueError):
    pass


class WidthError(RingSimError, ValueError):
    """A state or circuit is wider than the configured cap, or wires are bad."""


class ParseError(RingSimError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
