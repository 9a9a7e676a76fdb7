"""Van Vleck-Primas perturbation theory and its Lie-series phase-space twin."""
from .core import (
    DegenerateSpectrum,
    DimensionMismatch,
    HermitianOperator,
    NonHermitianInput,
    OperatorSeries,
    PerturbationError,
    PerturbationProblem,
    commutator,
    lie_transform,
    validate_problem,
)
from .vvp import VvpSolution, eigenvectors, energies, residuals, vvp_expand
from .classical import (
    HoriSolution,
    PhaseSpaceState,
    QuadraticObservable,
    hori_expand,
    poisson_bracket,
    resonance_scan,
)
from .oracle import exact_spectrum, match_eigenpairs

__version__ = "0.1.0"
