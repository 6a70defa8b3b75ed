"""Operator-orbit quantum metrology: Pauli algebra, Lie closures and Fisher information."""
from .errors import CapExceededError, ValidationError
from .pauli import LocalGenerator, PauliString, PauliSum, SymmetrizedPauli

__version__ = "0.1.0"

__all__ = [
    "CapExceededError",
    "LocalGenerator",
    "PauliString",
    "PauliSum",
    "SymmetrizedPauli",
    "ValidationError",
]
