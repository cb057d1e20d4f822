"""Exception hierarchy shared by the engine and the CLI.

The CLI maps these onto process exit codes: :class:`ScenarioError` -> 2,
:class:`ContractViolation` -> 3, :class:`InvariantFailure` -> 4.
"""


class DHModelError(Exception):
    """Base class for every error raised by this package."""


class UsageError(DHModelError, ValueError):
    """Caller supplied arguments that violate an operation's precondition."""


class ScenarioError(UsageError):
    """A scenario file failed schema or range validation."""


class ContractViolation(DHModelError, ArithmeticError):
    """A numerical contract failed (e.g. a probability far outside [0, 1])."""


class InvariantFailure(DHModelError, AssertionError):
    """An internal invariant that should hold by construction was broken."""
