"""Equilibria, reproduction number, stability and bifurcation analysis.

All results are for constant controls (u1, u2). Endemic equilibria are the
positive roots of the quadratic C1*I^2 + C2*I + C3 = 0 obtained by clearing
denominators in the equilibrium gap

    H(I) = A/(beta*I + (d+u1)(1+alpha*I)) - r*u2/(beta*(1+b*u2*I)) - (d+delta+gamma)/beta.

Throughout, ``g = d + delta + gamma`` and ``m = d + u1``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

from .dynamics import ControlPair, ModelParams, SirState, treatment_rate

HYPERBOLICITY_EPS = 1e-9
ROOT_REL_TOL = 1e-9


class Kind(str, Enum):
    DISEASE_FREE = "DiseaseFree"
    ENDEMIC = "Endemic"


class Stability(str, Enum):
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    UNSTABLE = "Unstable"
    GLOBALLY_ASYMPTOTICALLY_STABLE = "GloballyAsymptoticallyStable"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class EndemicCoefficients:
    c1: float
    c2: float
    c3: float

    @property
    def discriminant(self) -> float:
        return self.c2 * self.c2 - 4.0 * self.c1 * self.c3

    def __call__(self, I: float) -> float:
        return (self.c1 * I + self.c2) * I + self.c3


@dataclass(frozen=True)
class EquilibriumPoint:
    state: SirState
    kind: Kind
    stability: Stability = Stability.UNDETERMINED


@dataclass(frozen=True)
class BranchSample:
    r0: float
    beta: float
    points: tuple[EquilibriumPoint, ...] = ()

    @property
    def i_values(self) -> list[tuple[float, Stability]]:
        return [(pt.state.I, pt.stability) for pt in self.points]


@dataclass(frozen=True)
class DfeStability:
    stability: Stability
    r0: float
    a11: float                      # centre-manifold coefficient, meaningful near R0 = 1
    globally_attracting: bool       # alpha >= b*u2 (Dulac condition)
    eigenvalues: tuple[complex, complex, complex]


@dataclass(frozen=True)
class TranscriticalThreshold:
    u2: float
    admissible: bool  # 0 <= u2 <= 1


# ---------------------------------------------------------------------------
# Reproduction number and the disease-free state


def disease_free_equilibrium(p: ModelParams, u1: float) -> SirState:
    if p.d <= 0:
        raise ValueError("disease-free equilibrium undefined for d = 0")
    m = p.d + u1
    return SirState(p.A / m, 0.0, u1 * p.A / (p.d * m))


def basic_reproduction_number(p: ModelParams, u: ControlPair) -> float:
    m = p.d + u.u1
    q = p.removal + p.r * u.u2
    if m <= 0 or q <= 0:
        raise ValueError("R0 undefined: zero denominator")
    return p.beta * p.A / (m * q)


def beta_for_r0(r0: float, p: ModelParams, u: ControlPair) -> float:
    """Transmission rate that places the model at the given R0."""
    return r0 * (p.d + u.u1) * (p.removal + p.r * u.u2) / p.A


# ---------------------------------------------------------------------------
# Endemic equilibria


def equilibrium_gap(I: float, p: ModelParams, u: ControlPair) -> tuple[float, float]:
    """Return (H(I), H'(I)); endemic equilibria are the positive zeros of H."""
    if I < 0:
        raise ValueError(f"I must be non-negative, got {I!r}")
    if p.beta <= 0:
        raise ValueError("equilibrium gap undefined for beta = 0")
    m = p.d + u.u1
    k = p.beta + p.alpha * m
    D = p.beta * I + m * (1.0 + p.alpha * I)
    s = 1.0 + p.b * u.u2 * I
    H = p.A / D - p.r * u.u2 / (p.beta * s) - p.removal / p.beta
    dH = p.r * p.b * u.u2 ** 2 / (p.beta * s * s) - p.A * k / (D * D)
    return H, dH


def _gap_scale(I: float, p: ModelParams, u: ControlPair) -> float:
    D = p.beta * I + (p.d + u.u1) * (1.0 + p.alpha * I)
    return p.A / D + p.r * u.u2 / (p.beta * (1.0 + p.b * u.u2 * I)) + p.removal / p.beta


def endemic_coefficients(p: ModelParams, u: ControlPair) -> EndemicCoefficients:
    g = p.removal
    m = p.d + u.u1
    k = p.beta + p.alpha * m
    bu2 = p.b * u.u2
    c1 = bu2 * g * k
    c2 = bu2 * (m * g - p.beta * p.A) + (g + p.r * u.u2) * k
    c3 = m * (g + p.r * u.u2) - p.beta * p.A
    return EndemicCoefficients(c1, c2, c3)


def _positive_roots(c: EndemicCoefficients) -> list[float]:
    if c.c1 == 0.0:
        if c.c2 == 0.0:
            return []
        roots = [-c.c3 / c.c2]
    else:
        disc = c.discriminant
        if disc < 0:
            return []
        # sign-matched form avoids cancellation when c3 -> 0
        q = -0.5 * (c.c2 + math.copysign(math.sqrt(disc), c.c2))
        if q == 0.0:
            roots = [0.0]
        else:
            roots = [q / c.c1, c.c3 / q]
    return sorted({x for x in roots if x > 0.0 and math.isfinite(x)})


def endemic_state(I: float, p: ModelParams, u: ControlPair) -> SirState:
    """Complete an endemic I value to (S, I, R) using dS/dt = dR/dt = 0."""
    if p.d <= 0:
        raise ValueError("endemic R component undefined for d = 0")
    S = p.A * (1.0 + p.alpha * I) / (p.beta * I + (p.d + u.u1) * (1.0 + p.alpha * I))
    R = (treatment_rate(I, u.u2, p) + p.gamma * I + u.u1 * S) / p.d
    return SirState(S, I, R)


def endemic_equilibria(p: ModelParams, u: ControlPair) -> list[EquilibriumPoint]:
    """Endemic equilibria sorted by ascending I, each tagged with its stability."""
    if p.d <= 0:
        raise ValueError("endemic equilibria undefined for d = 0")
    if p.beta <= 0:
        return []
    points = []
    for I in _positive_roots(endemic_coefficients(p, u)):
        pt = EquilibriumPoint(endemic_state(I, p, u), Kind.ENDEMIC)
        points.append(replace(pt, stability=endemic_stability(pt, p, u)))
    return points


# ---------------------------------------------------------------------------
# Linearisation


def jacobian(x: SirState, u: ControlPair, p: ModelParams) -> list[list[float]]:
    S, I = x.S, x.I
    inc_i = p.beta * I / (1.0 + p.alpha * I)
    inc_s = p.beta * S / (1.0 + p.alpha * I) ** 2
    cure_i = p.r * u.u2 / (1.0 + p.b * u.u2 * I) ** 2
    return [
        [-inc_i - p.d - u.u1, -inc_s, 0.0],
        [inc_i, inc_s - p.removal - cure_i, 0.0],
        [u.u1, cure_i + p.gamma, -p.d],
    ]


def characteristic_coefficients(x: SirState, u: ControlPair, p: ModelParams) -> tuple[float, float]:
    """(K1, K2) with det(J - lambda I) = -(lambda + d)(lambda^2 + K1*lambda + K2).

    The third column of J is (0, 0, -d), so the upper-left 2x2 block carries
    the remaining two eigenvalues: K1 is minus its trace and K2 = G(0) its
    determinant.
    """
    J = jacobian(x, u, p)
    K1 = -(J[0][0] + J[1][1])
    K2 = J[0][0] * J[1][1] - J[0][1] * J[1][0]
    return K1, K2


def analytic_eigenvalues(x: SirState, u: ControlPair, p: ModelParams) -> tuple[complex, complex, complex]:
    K1, K2 = characteristic_coefficients(x, u, p)
    disc = K1 * K1 - 4.0 * K2
    if disc >= 0:
        q = -0.5 * (K1 + math.copysign(math.sqrt(disc), K1))
        pair = (q, K2 / q) if q != 0.0 else (0.0, 0.0)
        lam = tuple(complex(v) for v in pair)
    else:
        w = cmath.sqrt(disc)
        lam = ((-K1 + w) / 2.0, (-K1 - w) / 2.0)
    return (complex(-p.d), lam[0], lam[1])


# ---------------------------------------------------------------------------
# Stability of the disease-free equilibrium


def centre_manifold_coefficient(p: ModelParams, u: ControlPair) -> float:
    """Quadratic coefficient of the reduced flow at the DFE when R0 = 1."""
    m = p.d + u.u1
    q = p.removal + p.r * u.u2
    return p.d * m * (q * (p.beta + m * p.alpha) - m * p.r * p.b * u.u2 ** 2)


def dfe_stability(p: ModelParams, u: ControlPair, eps: float = HYPERBOLICITY_EPS) -> DfeStability:
    r0 = basic_reproduction_number(p, u)
    a11 = centre_manifold_coefficient(p, u)
    dulac = p.alpha >= p.b * u.u2
    x = disease_free_equilibrium(p, u.u1)
    eig = analytic_eigenvalues(x, u, p)

    if r0 < 1.0 - eps:
        tag = Stability.GLOBALLY_ASYMPTOTICALLY_STABLE if dulac else Stability.ASYMPTOTICALLY_STABLE
    elif r0 > 1.0 + eps:
        tag = Stability.UNSTABLE
    elif a11 < 0:
        tag = Stability.ASYMPTOTICALLY_STABLE
    elif a11 > 0:
        tag = Stability.UNSTABLE
    else:
        tag = Stability.UNDETERMINED
    return DfeStability(tag, r0, a11, dulac, eig)


def transcritical_u2_threshold(p: ModelParams, u1: float) -> Optional[TranscriticalThreshold]:
    """Treatment level at which R0 crosses 1, or None if R0 < 1 even untreated."""
    if p.r <= 0:
        raise ValueError("transcritical threshold undefined for r = 0")
    m = p.d + u1
    if not p.beta * p.A > m * p.removal:
        return None
    u2 = p.beta * p.A / (p.r * m) - p.removal / p.r
    return TranscriticalThreshold(u2, 0.0 <= u2 <= 1.0)


# ---------------------------------------------------------------------------
# Backward bifurcation


def backward_bifurcation_condition(p: ModelParams, u2: float) -> tuple[bool, float]:
    """(holds, margin) with margin = b*r*u2^2*A - q*(q + alpha*A), q = r*u2 + g."""
    q = p.r * u2 + p.removal
    margin = p.b * p.r * u2 ** 2 * p.A - q * (q + p.alpha * p.A)
    return margin > 0, margin


def slope_dI_dR0_at_one(p: ModelParams, u2: float) -> float:
    """Slope of the endemic branch I(R0) where it leaves the DFE at R0 = 1."""
    q = p.r * u2 + p.removal
    denom = q * (q + p.alpha * p.A) - p.b * p.r * u2 ** 2 * p.A
    if denom == 0.0:
        raise ZeroDivisionError("degenerate bifurcation: slope denominator vanishes")
    return p.A * q / denom


def find_r0_star(p: ModelParams, u: ControlPair, *, max_scan: int = 5000,
                 max_bisect: int = 200) -> Optional[float]:
    """R0 value below 1 where the two endemic equilibria are born.

    Returns None when the backward-bifurcation condition fails. The
    discriminant is followed downward from R0 = 1 in 1% steps of beta until it
    changes sign, then the crossing is bisected.
    """
    holds, _ = backward_bifurcation_condition(p, u.u2)
    if not holds:
        return None

    def disc(r0: float) -> float:
        return endemic_coefficients(replace(p, beta=beta_for_r0(r0, p, u)), u).discriminant

    hi = 1.0
    if disc(hi) <= 0:
        return None
    lo = hi
    for _ in range(max_scan):
        lo *= 0.99
        if disc(lo) < 0:
            break
        hi = lo
    else:
        return None

    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if disc(mid) < 0:
            lo = mid
        else:
            hi = mid
    return hi


def bifurcation_scan(p: ModelParams, u: ControlPair, r0_grid: Sequence[float]) -> list[BranchSample]:
    samples = []
    for r0 in r0_grid:
        if not r0 > 0:
            raise ValueError(f"R0 grid values must be positive, got {r0!r}")
        beta = beta_for_r0(r0, p, u)
        pb = replace(p, beta=beta)
        samples.append(BranchSample(float(r0), beta, tuple(endemic_equilibria(pb, u))))
    return samples


# ---------------------------------------------------------------------------
# Endemic stability


def endemic_stability(pt: EquilibriumPoint, p: ModelParams, u: ControlPair) -> Stability:
    """Classify an endemic equilibrium from the factored characteristic polynomial.

    K2 = G(0) < 0 forces a positive real eigenvalue. With K2 > 0 the point is
    stable iff K1 > 0; when K1 <= 0 this is reported as Undetermined since the
    trace condition used to guarantee stability does not apply.
    """
    x = pt.state
    if pt.kind is not Kind.ENDEMIC or x.I <= 0:
        raise ValueError("endemic_stability needs an endemic equilibrium (I > 0)")
    H, _ = equilibrium_gap(x.I, p, u)
    S_expected = endemic_state(x.I, p, u).S
    if (abs(H) > ROOT_REL_TOL * _gap_scale(x.I, p, u)
            or abs(x.S - S_expected) > ROOT_REL_TOL * S_expected):
        raise ValueError(f"state {x} is not an endemic equilibrium (H(I) = {H:.3e})")

    K1, K2 = characteristic_coefficients(x, u, p)
    if K2 < 0:
        return Stability.UNSTABLE
    if K2 > 0 and K1 > 0:
        return Stability.ASYMPTOTICALLY_STABLE
    return Stability.UNDETERMINED


def sufficient_stability_condition(p: ModelParams, u2: float) -> bool:
    """beta >= max(r*b*u2^2, r*alpha*u2): guarantees K1 > 0 at endemic points."""
    return p.beta >= max(p.r * p.b * u2 ** 2, p.r * p.alpha * u2)
