"""Physical and rescaled equation parameters."""
from dataclasses import dataclass, field
import math

__all__ = ["PhysicalParams", "ScaledParams", "rescale"]


@dataclass(frozen=True)
class PhysicalParams:
    """Parameters of the L-periodic problem.

    beta is the Reynolds number, gamma the electric field strength (0..2),
    L the period in both directions.
    """

    beta: float
    gamma: float
    L: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0.0 <= self.gamma <= 2.0:
            raise ValueError(f"gamma must lie in [0, 2], got {self.gamma}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")


@dataclass(frozen=True)
class ScaledParams:
    """Coefficients of the equation on the 2*pi torus.

    eta_t + eta eta_x + (beta-1) eta_xx - eta_yy - delta Lambda^3 eta
        + epsilon Delta^2 eta = 0
    """

    beta: float
    delta: float
    epsilon: float
    physical: PhysicalParams | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("beta", "delta", "epsilon"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.delta < 0:
            raise ValueError(f"delta must be non-negative, got {self.delta}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    def as_dict(self):
        d = {"beta": self.beta, "delta": self.delta, "epsilon": self.epsilon}
        if self.physical is not None:
            d["physical"] = {
                "beta": self.physical.beta,
                "gamma": self.physical.gamma,
                "L": self.physical.L,
            }
        return d


def rescale(p: PhysicalParams) -> ScaledParams:
    """Map an L-periodic problem onto the 2*pi torus (lambda = 2*pi/L)."""
    lam = 2.0 * math.pi / p.L
    return ScaledParams(beta=p.beta, delta=p.gamma * lam, epsilon=lam * lam, physical=p)
