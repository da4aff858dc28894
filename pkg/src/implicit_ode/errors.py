"""Exception hierarchy shared by every module of the package."""


class ImplicitODEError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ImplicitODEError):
    """Raised when expression text does not conform to the grammar.

    ``offset`` is the byte offset of the offending character in the input.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifier(ParseError):
    pass


class MalformedExponent(ParseError):
    pass


class EvaluationError(ImplicitODEError):
    pass


class UnboundVariable(EvaluationError):
    def __init__(self, name):
        super().__init__(f"variable {name!r} is not bound")
        self.name = name


class DomainViolation(EvaluationError):
    pass


class DiniPreconditionError(ImplicitODEError):
    """A hypothesis of the implicit function theorem fails at the base point."""


class ResidualTooLarge(DiniPreconditionError):
    def __init__(self, residual, tolerance):
        super().__init__(
            f"|F(T0)| = {residual:.3e} exceeds the residual tolerance {tolerance:.3e}"
        )
        self.residual = residual
        self.tolerance = tolerance


class Degenerate(DiniPreconditionError):
    def __init__(self, variable, value, tolerance):
        super().__init__(
            f"|dF/d{variable}(T0)| = {abs(value):.3e} <= {tolerance:.3e}; "
            f"cannot solve for {variable}"
        )
        self.variable = variable
        self.value = value
        self.tolerance = tolerance


class SolverError(ImplicitODEError):
    """Base class for failures of the local solvers and numerical routines."""


class NoRootFound(SolverError):
    pass


class WrongMode(SolverError):
    pass


class NoRealBranch(SolverError):
    pass


class NoZeroCrossing(SolverError):
    pass


class UnderDetermined(SolverError):
    pass


class NoRealRoot(SolverError):
    pass


class StepTooLarge(SolverError):
    pass


class RootLost(SolverError):
    pass


class IntervalMismatch(SolverError):
    pass
