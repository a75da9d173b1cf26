"""Exception types raised across the package."""


class PiggybackError(ValueError):
    """Base class for all domain errors."""


class DegenerateDenominator(PiggybackError):
    """A relay with nonzero power receives no signal (and relay noise is ignored)."""


class InsufficientSamples(PiggybackError):
    pass


class NonFiniteSample(PiggybackError):
    pass


class StepTooLarge(PiggybackError):
    pass


class NonPositiveEta(PiggybackError):
    pass


class NonMonotoneMmse(PiggybackError):
    pass


class InfeasibleBudget(PiggybackError):
    pass


class InvariantViolation(PiggybackError):
    """An emitted record breaks the chain-rule or gap-sign invariant."""


class ConfigInvalid(PiggybackError):
    """Raised with one diagnostic per offending config field."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("invalid config:\n" + "\n".join(f"  {d}" for d in self.diagnostics))
