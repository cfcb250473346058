"""Spin-chain physics: local spin operators, Ising drift and control propagators."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .qcore import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    QuantumState,
    ValidationError,
    expm_hermitian_generator,
    kron,
)

_PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

# Single-qubit preset: three 10 us segments, T = 30 us.
EXPERIMENT_TOTAL_TIME = 30e-6
EXPERIMENT_SEGMENTS = 3
# Raw amplitude units of 50 Hz nutation: 1000 units over one 10 us segment is a pi rotation.
EXPERIMENT_FIELD_SCALE = 2 * np.pi * 50.0


@dataclass(frozen=True)
class SpinSystemSpec:
    """Physical setting of a control problem.

    With ``has_drift`` the generator of segment ``m`` is
    ``2*pi*(J * sum I_z I_z + sum_i bx_i I_x^i + by_i I_y^i)`` applied for
    ``dt[m]``. Without drift (single qubit) it is
    ``field_scale * (bx I_x + by I_y)`` applied for ``total_time / M``.
    """

    n_qubits: int = 1
    coupling_j: float = 1.0
    segments_m: int = 2
    has_drift: bool = True
    amplitude_bound: float = 4.0
    dt_bounds: tuple[float, float] | None = (0.01, 0.5)
    total_time: float = EXPERIMENT_TOTAL_TIME
    field_scale: float = EXPERIMENT_FIELD_SCALE

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be >= 1")
        if self.segments_m < 1:
            raise ValidationError("segments_m must be >= 1")
        if not self.amplitude_bound > 0:
            raise ValidationError("amplitude_bound must be positive")
        if self.has_drift:
            if self.dt_bounds is None:
                raise ValidationError("dt_bounds required when has_drift")
            lo, hi = self.dt_bounds
            if not 0 < lo <= hi:
                raise ValidationError(f"invalid dt_bounds {self.dt_bounds}")
            object.__setattr__(self, "dt_bounds", (float(lo), float(hi)))
        else:
            if self.n_qubits != 1:
                raise ValidationError("driftless preset is single-qubit")
            if not self.total_time > 0:
                raise ValidationError("total_time must be positive")
            object.__setattr__(self, "dt_bounds", None)

    @classmethod
    def chain(cls, n_qubits: int, segments_m: int | None = None, **kw) -> "SpinSystemSpec":
        """Spin-chain defaults: J = 1, M = 2N, dt in [0.01, 0.5]/J, |B| <= 4J."""
        j = kw.pop("coupling_j", 1.0)
        kw.setdefault("amplitude_bound", 4.0 * j)
        kw.setdefault("dt_bounds", (0.01 / j, 0.5 / j))
        return cls(n_qubits=n_qubits, coupling_j=j, segments_m=segments_m or 2 * n_qubits,
                   has_drift=True, **kw)

    @classmethod
    def experiment(cls, segments_m: int = EXPERIMENT_SEGMENTS, **kw) -> "SpinSystemSpec":
        kw.setdefault("amplitude_bound", 1000.0)
        return cls(n_qubits=1, coupling_j=0.0, segments_m=segments_m, has_drift=False,
                   dt_bounds=None, **kw)

    @property
    def per_segment(self) -> int:
        return 2 * self.n_qubits + 1 if self.has_drift else 2

    @property
    def n_params(self) -> int:
        return self.segments_m * self.per_segment

    @property
    def segment_time(self) -> float:
        """Fixed segment duration tau = T / M of the driftless preset."""
        return self.total_time / self.segments_m

    def lower_bounds(self) -> np.ndarray:
        seg = [-self.amplitude_bound] * (2 * self.n_qubits)
        if self.has_drift:
            seg.append(self.dt_bounds[0])
        return np.tile(np.array(seg, dtype=float), self.segments_m)

    def upper_bounds(self) -> np.ndarray:
        seg = [self.amplitude_bound] * (2 * self.n_qubits)
        if self.has_drift:
            seg.append(self.dt_bounds[1])
        return np.tile(np.array(seg, dtype=float), self.segments_m)


@dataclass(frozen=True, eq=False)
class ControlSequence:
    """Piecewise-constant controls; ``bx``/``by`` have shape (M, N), ``dt`` shape (M,)."""

    spec: SpinSystemSpec
    bx: np.ndarray
    by: np.ndarray
    dt: np.ndarray | None = field(default=None)

    def __post_init__(self):
        s = self.spec
        bx = np.array(self.bx, dtype=float).reshape(s.segments_m, s.n_qubits)
        by = np.array(self.by, dtype=float).reshape(s.segments_m, s.n_qubits)
        tol = 1e-12 * s.amplitude_bound
        if np.abs(bx).max() > s.amplitude_bound + tol or np.abs(by).max() > s.amplitude_bound + tol:
            raise ValidationError("field amplitude outside bound")
        if s.has_drift:
            if self.dt is None:
                raise ValidationError("dt required with drift")
            dt = np.array(self.dt, dtype=float).reshape(s.segments_m)
            lo, hi = s.dt_bounds
            if dt.min() < lo - 1e-12 * hi or dt.max() > hi * (1 + 1e-12):
                raise ValidationError("segment duration outside dt_bounds")
        else:
            dt = None
        for arr in (bx, by, dt):
            if arr is not None:
                arr.setflags(write=False)
        object.__setattr__(self, "bx", bx)
        object.__setattr__(self, "by", by)
        object.__setattr__(self, "dt", dt)

    @classmethod
    def from_vector(cls, spec: SpinSystemSpec, params) -> "ControlSequence":
        """Inverse of :meth:`to_vector`; layout is (bx[1..N], by[1..N], dt) per segment."""
        p = np.asarray(params, dtype=float)
        if p.shape != (spec.n_params,):
            raise ValidationError(f"expected {spec.n_params} parameters, got shape {p.shape}")
        seg = p.reshape(spec.segments_m, spec.per_segment)
        n = spec.n_qubits
        dt = seg[:, 2 * n] if spec.has_drift else None
        return cls(spec, seg[:, :n], seg[:, n : 2 * n], dt)

    def to_vector(self) -> np.ndarray:
        parts = [self.bx, self.by]
        if self.spec.has_drift:
            parts.append(self.dt[:, None])
        return np.concatenate(parts, axis=1).reshape(-1)

    @classmethod
    def identity(cls, spec: SpinSystemSpec) -> "ControlSequence":
        z = np.zeros((spec.segments_m, spec.n_qubits))
        dt = np.full(spec.segments_m, spec.dt_bounds[0]) if spec.has_drift else None
        return cls(spec, z, z, dt)


def local_operator(n: int, i: int, axis: str) -> np.ndarray:
    """Spin operator ``sigma_axis / 2`` on qubit ``i`` (1-based) of an ``n``-qubit register."""
    if axis not in _PAULI:
        raise ValidationError(f"axis must be x, y or z, got {axis!r}")
    if not 1 <= i <= n:
        raise ValidationError(f"qubit index {i} out of range 1..{n}")
    return _local_operator(n, i, axis).copy()


@lru_cache(maxsize=256)
def _local_operator(n, i, axis):
    op = np.ones((1, 1), dtype=complex)
    for k in range(1, n + 1):
        op = kron(op, _PAULI[axis] / 2 if k == i else IDENTITY_2)
    op.setflags(write=False)
    return op


def ising_drift(spec: SpinSystemSpec) -> np.ndarray:
    """``2*pi*J * sum_{i>=2} I_z^{i-1} I_z^i`` (zero for a single qubit)."""
    return _ising_drift(spec.n_qubits, float(spec.coupling_j)).copy()


@lru_cache(maxsize=64)
def _ising_drift(n, j):
    diag = np.zeros(2**n)
    z = [np.diag(_local_operator(n, i, "z")).real for i in range(1, n + 1)]
    for i in range(1, n):
        diag += z[i - 1] * z[i]
    out = np.diag(2 * np.pi * j * diag).astype(complex)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def _field_ops(n):
    xs = np.array([_local_operator(n, i, "x") for i in range(1, n + 1)])
    ys = np.array([_local_operator(n, i, "y") for i in range(1, n + 1)])
    return xs, ys


def segment_generators(spec: SpinSystemSpec, c: ControlSequence) -> tuple[np.ndarray, np.ndarray]:
    """Stack of Hermitian generators ``G_m`` and durations, so ``U_m = exp(-i dt_m G_m)``."""
    xs, ys = _field_ops(spec.n_qubits)
    fields = np.tensordot(c.bx, xs, axes=1) + np.tensordot(c.by, ys, axes=1)
    if spec.has_drift:
        gens = _ising_drift(spec.n_qubits, float(spec.coupling_j))[None] + 2 * np.pi * fields
        return gens, np.asarray(c.dt, dtype=float)
    gens = spec.field_scale * fields
    return gens, np.full(spec.segments_m, spec.segment_time)


def segment_propagator(spec: SpinSystemSpec, c: ControlSequence, m: int) -> np.ndarray:
    """Unitary of segment ``m`` (1-based)."""
    if not 1 <= m <= spec.segments_m:
        raise ValidationError(f"segment index {m} out of range 1..{spec.segments_m}")
    gens, dts = segment_generators(spec, c)
    return expm_hermitian_generator(gens[m - 1], dts[m - 1])


def sequence_propagator(spec: SpinSystemSpec, c: ControlSequence) -> np.ndarray:
    """``U_C = U_M ... U_2 U_1``."""
    gens, dts = segment_generators(spec, c)
    u = np.eye(2**spec.n_qubits, dtype=complex)
    for g, t in zip(gens, dts):
        u = expm_hermitian_generator(g, t) @ u
    return u


def prepare_probe(spec: SpinSystemSpec, c: ControlSequence,
                  initial: QuantumState | None = None) -> QuantumState:
    """Pure probe ``U_C |psi_i>``; default initial state is ``|0...0>``."""
    if initial is None:
        initial = QuantumState.zero(spec.n_qubits)
    if not initial.is_pure:
        raise ValidationError("prepare_probe needs a pure initial state")
    if initial.n_qubits != spec.n_qubits:
        raise ValidationError(f"initial state has {initial.n_qubits} qubits, spec has {spec.n_qubits}")
    if spec.has_drift:
        drift = np.diag(_ising_drift(spec.n_qubits, float(spec.coupling_j))).real
        scale, dts = 2 * np.pi, c.dt
    else:
        drift = np.zeros(2)
        scale, dts = spec.field_scale, np.full(spec.segments_m, spec.segment_time)
    psi = kernels.evolve_controls(drift, c.bx, c.by, dts, scale, initial.data)
    # renormalize away rounding drift from M products
    return QuantumState.pure(psi, normalize=True)
