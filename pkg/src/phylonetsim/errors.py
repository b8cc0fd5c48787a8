"""Exceptions shared across the package."""


class EventCapError(RuntimeError):
    """A simulation exceeded its event cap (never a silent truncation)."""

    def __init__(self, cap: int, state: int):
        super().__init__(f"event cap {cap} exceeded while in state {state}")
        self.cap = cap
        self.state = state


class RetryBudgetError(RuntimeError):
    """A rejection sampler exhausted its retry budget."""

    def __init__(self, message: str, attempts: int, acceptance_rate: float):
        super().__init__(f"{message} (attempts={attempts}, acceptance~{acceptance_rate:.3g})")
        self.attempts = attempts
        self.acceptance_rate = acceptance_rate


class PoleError(ArithmeticError):
    """Continued-fraction evaluation approached a pole (argument beyond radius)."""

    def __init__(self, z: float, depth: int):
        super().__init__(f"denominator vanished at z={z} (depth {depth}); beyond radius")
        self.z = z
        self.depth = depth


class DivergentTailError(ArithmeticError):
    """A continued-fraction tail produced a nonpositive denominator."""


class GlueError(ValueError):
    """Structural mismatch while assembling a glued network."""


class NumericalFailure(RuntimeError):
    """Root finding or bracket search failed with a diagnostic message."""
