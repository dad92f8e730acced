"""flocsim: chemostat models with flocculation.

Simulates the three-compartment substrate/planktonic/flocked systems and
their multi-species extensions, reduces them to density-dependent
chemostat models on the fast attachment timescale, and analyzes the
reduced models: break-even concentrations, nullclines, equilibria with
stability classification, bistability basins, and the multi-species
positive equilibrium.
"""

from .backend import backend_name, compiled_available, simulate
from .errors import (
    BracketError,
    ConfigError,
    DomainError,
    FlocsimError,
    IntegrationError,
    NumericsError,
)
from .models import (
    Constant,
    Freter,
    FullModel,
    FullState,
    GrowthLaw,
    MassAction,
    Monod,
    MultiSpeciesModel,
    SubstrateDependent,
    TotalDensity,
    Zero,
    growth_dominates,
    rhs_full,
    rhs_multi,
)
from .reduction import (
    ConvergenceTable,
    MultiReduced,
    ReducedModel,
    reduce,
    reduce_multi,
    slow_manifold_u,
    slow_manifold_u_generic,
    tikhonov_convergence,
    tikhonov_convergence_multi,
)
from .analysis_single import (
    BreakEven,
    Equilibrium,
    HypothesisReport,
    break_even,
    check_hypotheses,
    classify,
    find_equilibria,
    gamma,
    phi,
    separatrix,
)
from .analysis_multi import (
    MultiEquilibrium,
    MultiReducedModel,
    X_i,
    arrowhead_matrix,
    arrowhead_stability,
    h_i,
    solve_positive_equilibrium,
)
from .numerics import IntegratorConfig, Trajectory, eigenvalues, find_root, integrate

__version__ = "0.1.0"
