"""Optimal vaccination/treatment by the forward-backward sweep.

Minimises  J = int_0^T (a1*S + a2*I + b1*u1^2 + b2*u2^2) dt  subject to the
controlled SIR dynamics, with 0 <= u1, u2 <= 1. Each sweep integrates the
state forward, the adjoint backward from zero terminal data, and updates the
controls from the pointwise minimiser of the Hamiltonian.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .dynamics import ControlPair, ModelParams, SirState, rhs
from .numerics import (IntegrationError, TimeGrid, Trajectory, rk4_integrate_backward,
                       rk4_integrate_forward, simpson_integral)

log = logging.getLogger(__name__)

Active = Literal["both", "u1_only", "u2_only", "none"]
Strategy = Literal["none", "str1", "str2", "both"]

STRATEGY_CHANNELS: dict[str, str] = {
    "none": "none",
    "str1": "u1_only",   # vaccination only
    "str2": "u2_only",   # treatment only
    "both": "both",
}

_CUBIC_TOL = 1e-12


class FbsDivergenceError(ArithmeticError):
    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class CostWeights:
    a1: float   # loss per susceptible per unit time
    a2: float   # loss per infected per unit time
    b1: float   # quadratic vaccination cost
    b2: float   # quadratic treatment cost

    def __post_init__(self):
        for name in ("a1", "a2"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)!r}")
        for name in ("b1", "b2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")


@dataclass(frozen=True)
class AdjointState:
    l1: float
    l2: float
    l3: float


@dataclass(frozen=True)
class OcOptions:
    tol: float = 1e-8
    max_iter: int = 500
    relax: float = 0.5

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if isinstance(self.max_iter, bool) or not isinstance(self.max_iter, int) or self.max_iter < 1:
            raise ValueError(f"max_iter must be an integer >= 1, got {self.max_iter!r}")
        if not 0 < self.relax <= 1:
            raise ValueError(f"relax must lie in (0, 1], got {self.relax!r}")


@dataclass(frozen=True, eq=False)
class OcSolution:
    u1: np.ndarray
    u2: np.ndarray
    states: Trajectory
    adjoints: Trajectory
    objective: float
    iterations: int
    converged: bool
    active: str = "both"

    @property
    def grid(self) -> TimeGrid:
        return self.states.grid


@dataclass(frozen=True, eq=False)
class StrategyReport:
    strategy: str
    cumulative_infected: float
    baseline_cumulative_infected: float
    efficiency_index: float
    solution: OcSolution
    baseline: Trajectory


# ---------------------------------------------------------------------------
# Pointwise pieces


def hamiltonian(l: AdjointState, x: SirState, u: ControlPair, w: CostWeights, p: ModelParams) -> float:
    dS, dI, dR = rhs(x.S, x.I, x.R, u.u1, u.u2, p)
    return (w.a1 * x.S + w.a2 * x.I + w.b1 * u.u1 ** 2 + w.b2 * u.u2 ** 2
            + l.l1 * dS + l.l2 * dI + l.l3 * dR)


def _adjoint(l1, l2, l3, S, I, u1, u2, w: CostWeights, p: ModelParams):
    inc_i = p.beta * I / (1.0 + p.alpha * I)
    inc_s = p.beta * S / (1.0 + p.alpha * I) ** 2
    cure_i = p.r * u2 / (1.0 + p.b * u2 * I) ** 2
    dl1 = -w.a1 + (l1 - l2) * inc_i + p.d * l1 + u1 * (l1 - l3)
    dl2 = (-w.a2 + (l1 - l2) * inc_s + (l2 - l3) * cure_i
           + (p.d + p.delta) * l2 + p.gamma * (l2 - l3))
    dl3 = p.d * l3
    return dl1, dl2, dl3


def adjoint_rhs(l: AdjointState, x: SirState, u: ControlPair, w: CostWeights,
                p: ModelParams) -> tuple[float, float, float]:
    """Costate derivatives, d(lambda_i)/dt = -dH/d(state_i)."""
    return _adjoint(l.l1, l.l2, l.l3, x.S, x.I, u.u1, u.u2, w, p)


def _solve_treatment_cubic(c: np.ndarray, bI: np.ndarray) -> np.ndarray:
    """Non-negative root of u*(1 + bI*u)^2 = c for c > 0, elementwise.

    The left side is increasing on u >= 0 and (1 + bI*u)^2 >= 1, so the root
    lies in [0, c]. Newton steps that leave the bracket fall back to bisection.
    """
    lo = np.zeros_like(c)
    hi = c.copy()
    u = c / (1.0 + bI * c) ** 2   # lies in [0, c], exact when bI = 0
    for _ in range(200):
        s = 1.0 + bI * u
        phi = u * s * s - c
        lo = np.where(phi < 0, u, lo)
        hi = np.where(phi > 0, u, hi)
        dphi = s * (1.0 + 3.0 * bI * u)
        step = phi / dphi
        nxt = u - step
        outside = (nxt <= lo) | (nxt >= hi)
        nxt = np.where(outside, 0.5 * (lo + hi), nxt)
        done = (phi == 0) | (np.abs(nxt - u) <= _CUBIC_TOL * np.maximum(u, 1e-300))
        u = np.where(phi == 0, u, nxt)
        if np.all(done):
            break
    return u


def treatment_cubic_root(c: float, b: float, I: float) -> float:
    """Unclamped non-negative root of u*(1 + b*u*I)^2 = c (0 when c <= 0)."""
    if c <= 0:
        return 0.0
    return float(_solve_treatment_cubic(np.array([c], float), np.array([b * I], float))[0])


def optimal_u1_pointwise(l1: float, l3: float, S: float, b1: float) -> float:
    return min(max((l1 - l3) * S / (2.0 * b1), 0.0), 1.0)


def optimal_u2_pointwise(l2: float, l3: float, I: float, b2: float, b: float, r: float) -> float:
    """Minimiser of the Hamiltonian in u2, clamped to [0, 1]."""
    if I < 0:
        raise ValueError(f"I must be non-negative, got {I!r}")
    c = (l2 - l3) * r * I / (2.0 * b2)
    return min(treatment_cubic_root(c, b, I), 1.0)


def _u1_candidate(states: np.ndarray, lam: np.ndarray, w: CostWeights) -> np.ndarray:
    return np.clip((lam[:, 0] - lam[:, 2]) * states[:, 0] / (2.0 * w.b1), 0.0, 1.0)


def _u2_candidate(states: np.ndarray, lam: np.ndarray, w: CostWeights, p: ModelParams) -> np.ndarray:
    I = states[:, 1]
    c = (lam[:, 1] - lam[:, 2]) * p.r * I / (2.0 * w.b2)
    out = np.zeros_like(c)
    pos = c > 0
    if np.any(pos):
        out[pos] = _solve_treatment_cubic(c[pos], p.b * I[pos])
    return np.minimum(out, 1.0)


# ---------------------------------------------------------------------------
# Trajectory-level pieces


def simulate(p: ModelParams, x0: SirState, grid: TimeGrid, u1=0.0, u2=0.0) -> Trajectory:
    """Forward RK4 of the state under constant or node-valued controls."""
    n = grid.n + 1
    ctx = np.column_stack([np.broadcast_to(np.asarray(u1, float), (n,)),
                           np.broadcast_to(np.asarray(u2, float), (n,))])
    if np.any(ctx < 0) or np.any(ctx > 1):
        raise ValueError("control values must lie in [0, 1]")

    def f(t, y, c):
        return np.array(rhs(y[0], y[1], y[2], c[0], c[1], p))

    return rk4_integrate_forward(f, x0.as_tuple(), grid, context=ctx)


def solve_adjoint(p: ModelParams, w: CostWeights, states: Trajectory, u1, u2) -> Trajectory:
    """Backward RK4 of the costates from zero terminal values."""
    grid = states.grid
    n = grid.n + 1
    ctx = np.column_stack([states.samples[:, :2],
                           np.broadcast_to(np.asarray(u1, float), (n,)),
                           np.broadcast_to(np.asarray(u2, float), (n,))])

    def g(t, lam, c):
        return np.array(_adjoint(lam[0], lam[1], lam[2], c[0], c[1], c[2], c[3], w, p))

    return rk4_integrate_backward(g, np.zeros(3), grid, context=ctx)


def objective_value(states: Trajectory, u1s, u2s, w: CostWeights) -> float:
    n = states.grid.n + 1
    u1s = np.broadcast_to(np.asarray(u1s, float), (n,)) if np.ndim(u1s) == 0 else np.asarray(u1s, float)
    u2s = np.broadcast_to(np.asarray(u2s, float), (n,)) if np.ndim(u2s) == 0 else np.asarray(u2s, float)
    if u1s.shape != (n,) or u2s.shape != (n,):
        raise ValueError("control schedules must have one value per state node")
    x = states.samples
    integrand = w.a1 * x[:, 0] + w.a2 * x[:, 1] + w.b1 * u1s ** 2 + w.b2 * u2s ** 2
    return simpson_integral(integrand, states.grid.h)


def cumulative_infected(states: Trajectory) -> float:
    """Integral of I over the horizon (Simpson's 1/3 rule)."""
    return simpson_integral(states.column(1), states.grid.h)


def efficiency_index(a_controlled: float, a_uncontrolled: float) -> float:
    """Percentage reduction of cumulative infections relative to no control."""
    if a_uncontrolled <= 0:
        raise ValueError("uncontrolled cumulative infected must be positive")
    return (1.0 - a_controlled / a_uncontrolled) * 100.0


def control_gradient(sol: OcSolution, p: ModelParams, w: CostWeights) -> tuple[np.ndarray, np.ndarray]:
    """(dH/du1, dH/du2) at every node of a solution."""
    x, lam = sol.states.samples, sol.adjoints.samples
    S, I = x[:, 0], x[:, 1]
    g1 = 2.0 * w.b1 * sol.u1 - (lam[:, 0] - lam[:, 2]) * S
    g2 = 2.0 * w.b2 * sol.u2 - (lam[:, 1] - lam[:, 2]) * p.r * I / (1.0 + p.b * sol.u2 * I) ** 2
    return g1, g2


def directional_derivative(sol: OcSolution, p: ModelParams, w: CostWeights, du1, du2) -> float:
    """First-order change of J along (du1, du2), from the adjoint gradient."""
    g1, g2 = control_gradient(sol, p, w)
    return simpson_integral(g1 * np.asarray(du1, float) + g2 * np.asarray(du2, float), sol.grid.h)


# ---------------------------------------------------------------------------
# Forward-backward sweep


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    diff = float(np.abs(new - old).sum())
    if diff == 0.0:
        return 0.0
    return diff / max(float(np.abs(new).sum()), np.finfo(float).tiny)


def fbs_solve(p: ModelParams, w: CostWeights, x0: SirState, grid: TimeGrid,
              opts: Optional[OcOptions] = None, active: Active = "both") -> OcSolution:
    """Forward-backward sweep with relaxed control updates.

    Starts from u = 0. Converged when the relative L1 change of the controls,
    the states and the adjoints between consecutive sweeps each drop below
    ``opts.tol``. The returned controls are the ones that produced the
    returned state and adjoint trajectories. Hitting ``max_iter`` returns the
    last iterate with ``converged=False``.
    """
    opts = opts or OcOptions()
    if active not in ("both", "u1_only", "u2_only", "none"):
        raise ValueError(f"unknown active set {active!r}")
    # Hessian of H in (u1, u2) is diag(2*b1, 2*b2 + ...) which needs b1, b2 > 0.
    assert w.b1 > 0 and w.b2 > 0
    use_u1 = active in ("both", "u1_only")
    use_u2 = active in ("both", "u2_only")

    n = grid.n + 1
    u1 = np.zeros(n)
    u2 = np.zeros(n)
    prev_x = prev_l = None
    converged = False
    for it in range(1, opts.max_iter + 1):
        try:
            states = simulate(p, x0, grid, u1, u2)
            adjoints = solve_adjoint(p, w, states, u1, u2)
        except IntegrationError as exc:
            raise FbsDivergenceError(f"sweep {it} diverged: {exc}", iteration=it) from exc

        x, lam = states.samples, adjoints.samples
        c1 = _u1_candidate(x, lam, w) if use_u1 else np.zeros(n)
        c2 = _u2_candidate(x, lam, w, p) if use_u2 else np.zeros(n)
        new1 = opts.relax * c1 + (1.0 - opts.relax) * u1
        new2 = opts.relax * c2 + (1.0 - opts.relax) * u2

        if prev_x is not None:
            d_ctrl = _rel_change(np.concatenate([new1, new2]), np.concatenate([u1, u2]))
            d_x = _rel_change(x, prev_x)
            d_l = _rel_change(lam, prev_l)
            log.debug("sweep %d: control %.3e state %.3e adjoint %.3e", it, d_ctrl, d_x, d_l)
            if d_ctrl < opts.tol and d_x < opts.tol and d_l < opts.tol:
                converged = True
                break
        if it == opts.max_iter:
            break
        u1, u2 = new1, new2
        prev_x, prev_l = x, lam

    if not converged:
        log.warning("forward-backward sweep did not converge in %d iterations", opts.max_iter)
    J = objective_value(states, u1, u2, w)
    return OcSolution(u1=u1, u2=u2, states=states, adjoints=adjoints, objective=J,
                      iterations=it, converged=converged, active=active)


def run_strategy(strategy: Strategy, p: ModelParams, w: CostWeights, x0: SirState,
                 grid: TimeGrid, opts: Optional[OcOptions] = None) -> StrategyReport:
    """Optimise one control strategy and score it against the uncontrolled run.

    str1 is vaccination only (u2 = 0), str2 treatment only (u1 = 0).
    """
    if strategy not in STRATEGY_CHANNELS:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {sorted(STRATEGY_CHANNELS)}")
    baseline = simulate(p, x0, grid)
    a_o = cumulative_infected(baseline)
    sol = fbs_solve(p, w, x0, grid, opts, active=STRATEGY_CHANNELS[strategy])
    a_c = cumulative_infected(sol.states)
    return StrategyReport(strategy, a_c, a_o, efficiency_index(a_c, a_o), sol, baseline)
