"""Flux reconstruction in 1D with swappable polynomial / Gaussian RBF element bases."""

__version__ = "0.1.0"

from .element import (
    LAYOUTS,
    BasisSpec,
    BasisVariant,
    ElementOperators,
    NodeKind,
    NodeSet,
    build_operators,
    node_set,
    quadrature,
)
from .rbf import Kernel, RbfConfig, StableBasis, stable_basis_build
from .solver import (
    BurgersEnsembleConfig,
    Mesh1D,
    PdeParams,
    SolutionState,
    TimeStepRule,
    energy_spectrum,
    integrate,
    run_case,
)
from .analysis import (
    FourierConfig,
    assemble_Q,
    combined_analysis,
    dispersion_dissipation,
    max_dissipation_sweep,
    sbp_report,
)

__all__ = [
    "LAYOUTS", "BasisSpec", "BasisVariant", "ElementOperators", "NodeKind", "NodeSet",
    "build_operators", "node_set", "quadrature", "Kernel", "RbfConfig", "StableBasis",
    "stable_basis_build", "BurgersEnsembleConfig", "Mesh1D", "PdeParams", "SolutionState",
    "TimeStepRule", "energy_spectrum", "integrate", "run_case", "FourierConfig", "assemble_Q",
    "combined_analysis", "dispersion_dissipation", "max_dissipation_sweep", "sbp_report",
]
