"""Model parameters for the branching-death-coalescence-mutation particle system.

Rates are per lineage: branching at rate 1, death at rate ``alpha``,
mutation (new color) at rate ``mu``; same-color pairs coalesce at rate
``2*beta`` per pair, i.e. an aggregate ``k*(k-1)*beta`` from state ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    beta: float
    mu: float

    def __post_init__(self):
        for name in ("alpha", "beta", "mu"):
            v = getattr(self, name)
            if not (v > 0.0):
                raise ValueError(f"{name} must be strictly positive, got {v}")

    def rho(self, k: int) -> float:
        """Per-lineage down-jump rate from state k: alpha + mu + (k-1)*beta."""
        if k < 1:
            raise ValueError(f"rho(k) requires k >= 1, got k={k}")
        return self.alpha + self.mu + (k - 1) * self.beta


def rho(params: ModelParams, k: int) -> float:
    """Functional form of :meth:`ModelParams.rho`."""
    return params.rho(k)
