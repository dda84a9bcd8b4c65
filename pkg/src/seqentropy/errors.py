"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input object violates its invariants (bad distribution, bad counts)."""


class PreconditionViolated(ValueError):
    """An estimator was called under conditions where it cannot terminate or is undefined."""


class CapExceeded(RuntimeError):
    """A sample stream hit its ``max_draws`` safety cap.

    The evaluation that raised this is a failure; its partial value is never used.
    """

    def __init__(self, max_draws):
        super().__init__(f"sample stream exhausted its cap of {max_draws} draws")
        self.max_draws = max_draws
