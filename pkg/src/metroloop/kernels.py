"""Hot-loop backend selection.

The compiled extension is used when it imports; otherwise the NumPy
fallback. :func:`use_backend` switches explicitly (tests and benchmarks
exercise both).
"""
from __future__ import annotations

import logging
from types import ModuleType

import numpy as np

from . import _kernels_py

logger = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

__all__ = [
    "available_backends",
    "backend",
    "use_backend",
    "evolve_segments",
    "evolve_controls",
    "coherence_spectrum",
    "coherence_spectrum_pure",
    "qfi_spectral_sum",
]

_active: ModuleType = _compiled if _compiled is not None else _kernels_py


def available_backends() -> list[str]:
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return names


def backend() -> str:
    return _active.BACKEND


def use_backend(name: str) -> str:
    """Select ``"compiled"`` or ``"python"``; returns the previous backend name."""
    global _active
    previous = backend()
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        _active = _compiled
    elif name == "python":
        _active = _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")
    logger.debug("kernel backend: %s -> %s", previous, name)
    return previous


def _c(a, dtype):
    return np.ascontiguousarray(a, dtype=dtype)


def evolve_segments(gens, dts, psi) -> np.ndarray:
    """Propagate ``psi`` through ``exp(-i dts[m] gens[m])``, segment 0 first."""
    return _active.evolve_segments(_c(gens, complex), _c(dts, float), _c(psi, complex))


def evolve_controls(drift, bx, by, dts, scale: float, psi) -> np.ndarray:
    """Propagate ``psi`` under ``diag(drift) + scale * sum_i (bx I_x^i + by I_y^i)`` per segment."""
    return _active.evolve_controls(_c(drift, float), _c(bx, float), _c(by, float), _c(dts, float),
                                   float(scale), _c(psi, complex))


def coherence_spectrum(rho, popcount, n: int) -> np.ndarray:
    return _active.coherence_spectrum(_c(rho, complex), _c(popcount, np.int64), int(n))


def coherence_spectrum_pure(psi, popcount, n: int) -> np.ndarray:
    return _active.coherence_spectrum_pure(_c(psi, complex), _c(popcount, np.int64), int(n))


def qfi_spectral_sum(evals, h_eig, eps: float) -> float:
    return float(_active.qfi_spectral_sum(_c(evals, float), _c(h_eig, complex), float(eps)))
