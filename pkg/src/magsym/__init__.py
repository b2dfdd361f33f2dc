"""Symplectic Magnus-based integrators for ``x'' + M(t) x = 0``."""

from ._kernels import DEFAULT_BACKEND, HAVE_COMPILED
from .baselines import GaussLegendreMethod, ImplicitRKConfig, RK4Method, gauss_legendre_irk_step, rk4_step
from .decomposition import DecompositionScheme, step_upsilon
from .linalg import CostLedger, PhasePoint, identity_fundamental, l1_norm, symplecticity_defect
from .magnus import omega6_oracle, reference_solution, sample_nodes
from .methods import make_method
from .problems import HillPascalProblem, MathieuProblem, WaveProblem, wave_analytic_g0, wave_discretize, wave_initial_state
from .splitting import SplittingMethod, SplittingTableau, step_psi_matrix, step_psi_vector, tableau_psi11

__version__ = "0.1.0"

__all__ = [
    "CostLedger",
    "DEFAULT_BACKEND",
    "DecompositionScheme",
    "GaussLegendreMethod",
    "HAVE_COMPILED",
    "HillPascalProblem",
    "ImplicitRKConfig",
    "MathieuProblem",
    "PhasePoint",
    "RK4Method",
    "SplittingMethod",
    "SplittingTableau",
    "WaveProblem",
    "gauss_legendre_irk_step",
    "identity_fundamental",
    "l1_norm",
    "make_method",
    "omega6_oracle",
    "reference_solution",
    "rk4_step",
    "sample_nodes",
    "step_psi_matrix",
    "step_psi_vector",
    "step_upsilon",
    "symplecticity_defect",
    "tableau_psi11",
    "wave_analytic_g0",
    "wave_discretize",
    "wave_initial_state",
]
