"""Exception hierarchy shared by the numerical modules and the CLI."""


class FltwaveError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 4


class ValidationError(FltwaveError, ValueError):
    exit_code = 2


class DomainError(FltwaveError, ValueError):
    exit_code = 3


class NonConvergence(FltwaveError, RuntimeError):
    exit_code = 4


class StiffnessFailure(NonConvergence):
    pass


class InvalidBracket(FltwaveError, RuntimeError):
    exit_code = 4


class NoAdmissibleJump(DomainError):
    pass


class SpeedBelowEntropic(DomainError):
    pass


class QuadratureFailure(NonConvergence):
    pass


class FitUnstable(NonConvergence):
    pass


class CflViolation(NonConvergence):
    pass


class NonFinite(NonConvergence):
    pass
