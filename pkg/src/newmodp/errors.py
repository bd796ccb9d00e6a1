"""Exception types raised across the package."""


class NewModPError(Exception):
    pass


class RingMismatch(NewModPError):
    pass


class NotPIntegral(NewModPError):
    def __init__(self, index, msg=None):
        self.index = index
        super().__init__(msg or f"coefficient {index} is not p-integral")


class NonIntegralSeries(NewModPError):
    pass


class NonUnit(NewModPError):
    pass


class Unsupported(NewModPError):
    pass


class IncompleteFixtures(NewModPError):
    def __init__(self, level, weight, missing):
        self.level, self.weight, self.missing = level, weight, missing
        super().__init__(f"level {level} weight {weight}: {missing} dimension(s) missing")


class PrecisionTooLow(NewModPError):
    pass


class BadPrime(NewModPError):
    pass


class NotStable(NewModPError):
    def __init__(self, m, msg=None):
        self.m = m
        super().__init__(msg or f"image of U_{m} leaves the span")


class NotApplicable(NewModPError):
    pass


class BadCongruence(NewModPError):
    pass


class PairingDegenerate(NewModPError):
    pass


class ParseError(NewModPError):
    def __init__(self, line, msg):
        self.line = line
        super().__init__(f"line {line}: {msg}")


class InvariantViolation(NewModPError):
    def __init__(self, name, index=None, msg=None):
        self.name, self.index = name, index
        where = f" at {index}" if index is not None else ""
        super().__init__(msg or f"{name} violated{where}")


class Inconsistent(NewModPError):
    pass
