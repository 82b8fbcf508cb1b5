"""Classification, reduction and simulation of cubic Klein-Gordon systems in two unknowns."""
from .classifier import classify
from .cubic_system import (
    Coefficients,
    GL2Transform,
    ModelSystemId,
    model_catalog,
    transform_by_substitution,
)
from .matrix_rep import StructureMatrix, coeffs_to_matrix, conjugate, matrix_to_coeffs, rank_of
from .reducer import reduce

__all__ = [
    "Coefficients",
    "GL2Transform",
    "ModelSystemId",
    "StructureMatrix",
    "classify",
    "coeffs_to_matrix",
    "conjugate",
    "matrix_to_coeffs",
    "model_catalog",
    "rank_of",
    "reduce",
    "transform_by_substitution",
]
