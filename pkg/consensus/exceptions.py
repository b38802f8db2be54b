"""Domain errors. Each class carries the exit code the ``sim`` command reports for it."""


class ConsensusError(Exception):
    exit_code = 1

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


# ───── configuration faults (exit 2) ─────

class ScenarioError(ConsensusError):
    exit_code = 2


class ParseError(ScenarioError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class ScenarioValidationError(ScenarioError):
    def __init__(self, constraint: str, field: str | None = None):
        self.field = field
        self.constraint = constraint
        super().__init__(f"{field}: {constraint}" if field else constraint)


class DimensionMismatch(ScenarioError):
    pass


class NotClassifiable(ScenarioError):
    pass


class GammaTooSmall(ScenarioError):
    pass


class DelayBoundViolated(ScenarioError):
    pass


# ───── criteria (exit 3) ─────

class Infeasible(ConsensusError):
    exit_code = 3


# ───── numerical failures (exit 4) ─────

class NumericalError(ConsensusError):
    exit_code = 4


class DegenerateSpectrum(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class SingularInertia(NumericalError):
    pass


class SingularInputGain(NumericalError):
    pass


class SingularCorrection(NumericalError):
    pass


class AsymmetricArgument(NumericalError):
    pass


class NonFiniteState(NumericalError):
    pass


class OutOfSpan(NumericalError):
    pass


class ZeroDisturbance(NumericalError):
    pass
