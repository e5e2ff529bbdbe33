"""grushin-lab: bordered-system spectral computations at desk scale.

The library studies a square matrix (or a family of them) through an enlarged
invertible system: border the operator with well-chosen injection/restriction
blocks, invert the bordered matrix, and read everything off the lower-right
block of the inverse (the effective Hamiltonian).  Modules cover the core
block identities, the Moore-Penrose pseudoinverse, Jordan-block perturbation
experiments, threshold-projector pseudospectra, contour trace formulas, and a
1-D boundary-value reduction whose effective Hamiltonian is the
Neumann-to-Dirichlet map.
"""

__version__ = "0.1.0"

from .core import (
    BorderedSystem,
    GrushinInverse,
    Split,
    assemble,
    circulant_effective,
    effective_index,
    feshbach_effective,
    invert_system,
    iterate,
    recover_resolvent,
    schur_check,
    transfer,
)
from .linops import Contour, contour_integrate, eigenvalues, solve_linear, svd
from .pseudoinverse import canonical_borders, mp_residuals, pseudo_inverse

__all__ = [
    "BorderedSystem",
    "Contour",
    "GrushinInverse",
    "Split",
    "__version__",
    "assemble",
    "canonical_borders",
    "circulant_effective",
    "contour_integrate",
    "effective_index",
    "eigenvalues",
    "feshbach_effective",
    "invert_system",
    "iterate",
    "mp_residuals",
    "pseudo_inverse",
    "recover_resolvent",
    "schur_check",
    "solve_linear",
    "svd",
    "transfer",
]
