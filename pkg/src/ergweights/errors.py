"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-range input (bad horizons, shapes, parameters)."""


class HypothesisError(ValueError):
    """A mathematical hypothesis required by an operation does not hold.

    ``hypothesis`` names the violated assumption (e.g. ``"power-boundedness"``)
    and ``witness`` optionally carries data demonstrating the violation.
    """

    def __init__(self, message, hypothesis, witness=None):
        super().__init__(message)
        self.hypothesis = hypothesis
        self.witness = witness
