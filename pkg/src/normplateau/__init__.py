"""Mass-minimizing polyhedral chains in finite-dimensional normed spaces."""
from __future__ import annotations

from .geometry import Subspace, sample_subspaces, simplex_volume, wedge_norm
from .norms import Norm, alpha, busemann_b, psi, random_crystalline, section_volume
from .chains import R, Z, Zq, PolyhedralChain, boundary, hausdorff_mass
from .contractors import (
    DensityContractor,
    burago_ivanov,
    busemann_projector,
    hahn_projector,
    min_lipschitz_projector,
    verify_contractor,
)
from .gross import ContractorField, RectifiableTestSet, gross_estimate, zeta_chain, zeta_set
from .plateau import SimplicialComplex, build_program, simplicial_flat_norm, solve, support_reduction

__version__ = "0.1.0"

__all__ = [
    "Subspace",
    "sample_subspaces",
    "simplex_volume",
    "wedge_norm",
    "Norm",
    "alpha",
    "busemann_b",
    "psi",
    "random_crystalline",
    "section_volume",
    "R",
    "Z",
    "Zq",
    "PolyhedralChain",
    "boundary",
    "hausdorff_mass",
    "DensityContractor",
    "burago_ivanov",
    "busemann_projector",
    "hahn_projector",
    "min_lipschitz_projector",
    "verify_contractor",
    "ContractorField",
    "RectifiableTestSet",
    "gross_estimate",
    "zeta_chain",
    "zeta_set",
    "SimplicialComplex",
    "build_program",
    "simplicial_flat_norm",
    "solve",
    "support_reduction",
    "__version__",
]
