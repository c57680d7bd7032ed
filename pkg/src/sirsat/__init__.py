"""SIR epidemic model with saturated incidence and saturated treatment.

Equilibrium and bifurcation analysis for constant controls, and optimal
vaccination/treatment schedules by the forward-backward sweep.
"""

from .dynamics import (ControlPair, ModelParams, SirState, incidence_rate,
                       invariant_region_contains, state_rhs, treatment_rate)
from .equilibria import (BranchSample, EndemicCoefficients, EquilibriumPoint, Kind, Stability,
                         backward_bifurcation_condition, basic_reproduction_number,
                         bifurcation_scan, dfe_stability, disease_free_equilibrium,
                         endemic_coefficients, endemic_equilibria, endemic_stability,
                         equilibrium_gap, find_r0_star, jacobian, slope_dI_dR0_at_one,
                         transcritical_u2_threshold)
from .numerics import (IntegrationError, TimeGrid, Trajectory, rk4_integrate_backward,
                       rk4_integrate_forward, simpson_integral)
from .optctl import (AdjointState, CostWeights, FbsDivergenceError, OcOptions, OcSolution,
                     adjoint_rhs, cumulative_infected, efficiency_index, fbs_solve,
                     objective_value, optimal_u1_pointwise, optimal_u2_pointwise,
                     run_strategy, simulate)

__version__ = "0.1.0"
