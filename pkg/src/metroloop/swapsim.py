"""Noisy SWAP-test emulation of the purity readout.

Register layout for the circuit simulation is ``ancilla (x) A (x) B`` with the
ancilla as the most significant qubit. The ancilla starts in ``|+>``, is
dephased once before the controlled-SWAP and ``applications - 1`` more times
after it, then goes through a Hadamard before ``I_z`` is read out. Since
``I_z = sigma_z / 2`` the noiseless readout is ``Tr(rho_a rho_b) / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .metrology import (
    FitnessReport,
    PhaseEncoding,
    StrataSet,
    coherence_spectrum,
)
from .qcore import QuantumState, ValidationError

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class NoiseModel:
    p: float = 0.0
    applications: int = 2

    def __post_init__(self):
        _check_p(self.p)
        if self.applications < 0:
            raise ValidationError("applications must be >= 0")

    @property
    def attenuation(self) -> float:
        """Factor multiplying the ancilla readout: ``(1 - 2p) ** applications``."""
        return (1.0 - 2.0 * self.p) ** self.applications


@dataclass(frozen=True)
class SwapTestResult:
    mean_iz: float
    shots: int
    est_overlap: float
    std_err: float


def _check_p(p):
    if not 0.0 <= p < 1.0:
        raise ValidationError(f"dephasing strength must lie in [0, 1), got {p}")


def _dephase_matrix(rho: np.ndarray, n: int, p: float, qubit: int) -> np.ndarray:
    # (1-p) rho + 4p I_z rho I_z == (1-p) rho + p Z rho Z
    idx = np.arange(rho.shape[0])
    signs = 1 - 2 * ((idx >> (n - qubit)) & 1)
    return (1 - p) * rho + p * (signs[:, None] * rho * signs[None, :])


def dephase(state: QuantumState, p: float, qubit: int) -> QuantumState:
    """Dephasing channel on ``qubit`` (1-based, qubit 1 most significant)."""
    _check_p(p)
    n = state.n_qubits
    if not 1 <= qubit <= n:
        raise ValidationError(f"qubit {qubit} out of range 1..{n}")
    return QuantumState.mixed(_dephase_matrix(state.density(), n, p, qubit))


def _cswap_permutation(d: int) -> np.ndarray:
    """Index map of the controlled-SWAP on ``2 * d * d`` basis states."""
    idx = np.arange(2 * d * d)
    ctrl, rest = divmod(idx, d * d)
    a, b = divmod(rest, d)
    swapped = ctrl * d * d + b * d + a
    return np.where(ctrl == 1, swapped, idx)


def swap_test_exact(a: QuantumState, b: QuantumState, noise: NoiseModel = NoiseModel()) -> float:
    """Exact ancilla ``<I_z>`` from a full density-matrix simulation of the circuit."""
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    d = a.dim
    n_total = 1 + 2 * a.n_qubits
    plus = np.full((2, 2), 0.5, dtype=complex)
    rho = np.kron(plus, np.kron(a.density(), b.density()))
    if noise.applications > 0:
        rho = _dephase_matrix(rho, n_total, noise.p, 1)
    perm = _cswap_permutation(d)
    rho = rho[np.ix_(perm, perm)]  # the permutation is an involution
    for _ in range(max(0, noise.applications - 1)):
        rho = _dephase_matrix(rho, n_total, noise.p, 1)
    h = np.kron(_HADAMARD, np.eye(d * d))
    rho = h @ rho @ h
    half = d * d
    p0 = np.trace(rho[:half, :half]).real
    p1 = np.trace(rho[half:, half:]).real
    return 0.5 * (p0 - p1)


def _sample_readout(expected_iz: float, shots: int, attenuation: float, rng) -> SwapTestResult:
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    p_plus = min(1.0, max(0.0, 0.5 + expected_iz))
    n_plus = int(rng.binomial(shots, p_plus))
    mean = (n_plus - (shots - n_plus)) / (2.0 * shots)
    if shots > 1:
        # sample variance of +-1/2 outcomes
        var = (shots / (shots - 1)) * (0.25 - mean * mean)
    else:
        var = 0.0
    std_err = math.sqrt(max(var, 0.0) / shots)
    return SwapTestResult(mean, shots, 2.0 * mean / attenuation, std_err)


def swap_test_sampled(a: QuantumState, b: QuantumState, noise: NoiseModel, shots: int,
                      seed) -> SwapTestResult:
    """Finite-shot readout; outcomes are +-1/2 with ``P(+1/2) = 1/2 + <I_z>``."""
    expected = swap_test_exact(a, b, noise)
    return _sample_readout(expected, shots, noise.attenuation, np.random.default_rng(seed))


@dataclass(frozen=True)
class SampledFitness:
    report: FitnessReport
    probe_term: SwapTestResult
    pair_terms: dict


def sampled_fitness_terms(probe: QuantumState, strata: StrataSet, noise: NoiseModel,
                          shots: int, seed, enc: PhaseEncoding | None = None) -> SampledFitness:
    """Purity loss estimated from one probe SWAP test and ``K(K+1)/2`` pairwise tests.

    Per-term expectations use the circuit identity
    ``<I_z> = attenuation * Tr(rho_a rho_b) / 2`` (checked against
    :func:`swap_test_exact` in the test suite) rather than re-simulating the
    ``2 d^2``-dimensional register for every pair.
    """
    if enc is None:
        enc = PhaseEncoding(probe.n_qubits)
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    n = probe.n_qubits
    k = strata.k
    w = coherence_spectrum(probe)
    diffs = np.arange(-n, n + 1)
    att = noise.attenuation
    pairs = [(j, l) for j in range(k) for l in range(j, k)]
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = root.spawn(1 + len(pairs))

    probe_term = _sample_readout(0.5 * att * float(w.sum()), shots, att,
                                 np.random.default_rng(streams[0]))
    x = strata.points
    pair_terms = {}
    total = 0.0
    for (j, l), stream in zip(pairs, streams[1:]):
        # Tr(rho_j rho_l) = sum_D w[D] exp(-i (x_j - x_l) D); phi cancels
        overlap = float(np.real(np.sum(w * np.exp(-1j * (x[j] - x[l]) * diffs))))
        term = _sample_readout(0.5 * att * overlap, shots, att, np.random.default_rng(stream))
        pair_terms[(j, l)] = term
        total += term.est_overlap * (1.0 if j == l else 2.0)
    purity_avg = total / k**2
    dgamma = probe_term.est_overlap - purity_avg
    dx2 = strata.dx2
    fql = 2.0 * dgamma / dx2 if dx2 > 0 else float("nan")
    report = FitnessReport(probe_term.est_overlap, purity_avg, dgamma, fql, dx2)
    return SampledFitness(report, probe_term, pair_terms)


def sampled_fitness(probe: QuantumState, strata: StrataSet, noise: NoiseModel, shots: int,
                    seed, enc: PhaseEncoding | None = None) -> FitnessReport:
    return sampled_fitness_terms(probe, strata, noise, shots, seed, enc).report


def repetition_budget(delta: float, p: float) -> int:
    """``ceil(4 / (delta (1 - p)^2))`` repetitions to resolve a purity-loss gap ``delta``."""
    if not delta > 0:
        raise ValidationError("delta must be positive")
    _check_p(p)
    return math.ceil(4.0 / (delta * (1.0 - p) ** 2) - 1e-9)
