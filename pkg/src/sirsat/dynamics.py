"""SIR vector field with saturated incidence and saturated treatment.

    dS/dt = A - beta*S*I/(1 + alpha*I) - d*S - u1*S
    dI/dt = beta*S*I/(1 + alpha*I) - (d + delta + gamma)*I - r*u2*I/(1 + b*u2*I)
    dR/dt = r*u2*I/(1 + b*u2*I) + gamma*I + u1*S - d*R

u1 is the vaccination fraction and u2 the treatment effort, both in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields


@dataclass(frozen=True)
class ModelParams:
    A: float        # recruitment rate
    beta: float     # transmission rate
    alpha: float    # inhibitory coefficient of the incidence
    d: float        # natural mortality
    delta: float    # disease-induced mortality
    gamma: float    # natural recovery
    r: float        # cure rate
    b: float        # treatment-delay parameter

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise TypeError(f"{f.name} must be a real number, got {value!r}")
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{f.name} must be finite and non-negative, got {value!r}")
        if self.A <= 0:
            raise ValueError(f"A must be positive, got {self.A!r}")
        if self.d <= 0:
            raise ValueError(f"d must be positive, got {self.d!r}")

    @property
    def removal(self) -> float:
        """Per-capita exit rate from I without treatment, d + delta + gamma."""
        return self.d + self.delta + self.gamma

    @property
    def carrying_bound(self) -> float:
        """A/d, the upper bound on total population in the invariant region."""
        return self.A / self.d


@dataclass(frozen=True)
class ControlPair:
    u1: float = 0.0
    u2: float = 0.0

    def __post_init__(self):
        for name in ("u1", "u2"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class SirState:
    S: float
    I: float
    R: float

    def __post_init__(self):
        for name in ("S", "I", "R"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.S, self.I, self.R)

    @property
    def total(self) -> float:
        return self.S + self.I + self.R


def incidence_rate(S: float, I: float, p: ModelParams) -> float:
    """New infections per unit time, beta*S*I/(1 + alpha*I)."""
    if S < 0 or I < 0:
        raise ValueError(f"S and I must be non-negative, got S={S!r}, I={I!r}")
    return p.beta * S * I / (1.0 + p.alpha * I)


def treatment_rate(I: float, u2: float, p: ModelParams) -> float:
    """Cures per unit time, r*u2*I/(1 + b*u2*I); saturates at r/b."""
    if I < 0:
        raise ValueError(f"I must be non-negative, got {I!r}")
    if not (0.0 <= u2 <= 1.0):
        raise ValueError(f"u2 must lie in [0, 1], got {u2!r}")
    return p.r * u2 * I / (1.0 + p.b * u2 * I)


def rhs(S: float, I: float, R: float, u1: float, u2: float, p: ModelParams) -> tuple[float, float, float]:
    # Unvalidated float kernel for the integrators; intermediate RK4 stages may
    # leave the non-negative orthant slightly.
    inc = p.beta * S * I / (1.0 + p.alpha * I)
    cure = p.r * u2 * I / (1.0 + p.b * u2 * I)
    dS = p.A - inc - (p.d + u1) * S
    dI = inc - p.removal * I - cure
    dR = cure + p.gamma * I + u1 * S - p.d * R
    return dS, dI, dR


def state_rhs(x: SirState, u: ControlPair, p: ModelParams) -> tuple[float, float, float]:
    """Right-hand side (dS/dt, dI/dt, dR/dt) of the controlled model."""
    return rhs(x.S, x.I, x.R, u.u1, u.u2, p)


def invariant_region_contains(x: SirState, p: ModelParams) -> bool:
    """True iff S + I + R <= A/d (boundary included)."""
    if p.d <= 0:
        raise ValueError("invariant region undefined for d = 0")
    return x.total <= p.A / p.d
