"""Closed-loop learning of quantum metrology probes driven by purity loss."""
from .kernels import backend
from .qcore import CapacityError, QuantumState, ValidationError

__version__ = "0.1.0"

__all__ = ["CapacityError", "QuantumState", "ValidationError", "backend", "__version__"]
