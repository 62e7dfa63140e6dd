"""Growth vectors, degeneration loci and canonical frames of rank-2
distributions on 4-dimensional charts."""
from .errors import EngelError
from .flags import GrowthVector, growth_vector, is_engel_at
from .symcalc import Coframe2, Frame2, OneForm, PolyExpr, VectorField, lie_bracket

__all__ = ["EngelError", "GrowthVector", "growth_vector", "is_engel_at", "Coframe2", "Frame2",
           "OneForm", "PolyExpr", "VectorField", "lie_bracket"]
__version__ = "0.1.0"
