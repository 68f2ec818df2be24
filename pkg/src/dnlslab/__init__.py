"""dnlslab: a pseudospectral laboratory for dispersive decay of the
derivative nonlinear Schrodinger equation."""

__version__ = "0.1.0"

from .errors import BlowUpError, BoundaryError, ShapeMismatchError
from .grid import ComplexField, GridSpec

__all__ = [
    "BlowUpError",
    "BoundaryError",
    "ComplexField",
    "GridSpec",
    "ShapeMismatchError",
    "__version__",
]
