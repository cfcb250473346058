"""Fast self-checks behind ``metroloop validate --suite invariants``."""
from __future__ import annotations

import numpy as np

from . import kernels, nmopt
from .metrology import (
    PhaseEncoding,
    averaged_state,
    experiment_strata,
    fitness,
    gaussian_strata,
    qfi_mixed,
    qfi_pure,
)
from .qcore import QuantumState, purity
from .spinsys import ControlSequence, SpinSystemSpec, prepare_probe, sequence_propagator
from .swapsim import NoiseModel, swap_test_exact


def random_pure(n: int, rng) -> QuantumState:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return QuantumState.pure(v, normalize=True)


def random_mixed(n: int, rng, rank: int | None = None) -> QuantumState:
    d = 2**n
    a = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = a @ a.conj().T
    return QuantumState.mixed(rho / np.trace(rho).real)


def _unitarity(rng):
    worst = 0.0
    for n in (1, 2, 3):
        spec = SpinSystemSpec.chain(n)
        for _ in range(10):
            x = rng.uniform(spec.lower_bounds(), spec.upper_bounds())
            u = sequence_propagator(spec, ControlSequence.from_vector(spec, x))
            worst = max(worst, np.linalg.norm(u.conj().T @ u - np.eye(2**n)))
    return worst < 1e-8, f"max ||U^dag U - I||_F = {worst:.2e}"


def _kernel_paths(rng):
    worst = 0.0
    for n in (1, 2, 3):
        spec = SpinSystemSpec.chain(n)
        x = rng.uniform(spec.lower_bounds(), spec.upper_bounds())
        c = ControlSequence.from_vector(spec, x)
        ref = sequence_propagator(spec, c)[:, 0]
        worst = max(worst, np.abs(prepare_probe(spec, c).data - ref).max())
    return worst < 1e-9, f"backend={kernels.backend()} max deviation {worst:.2e}"


def _bound(rng):
    strata = gaussian_strata(1001, 1e-4)
    worst = np.inf
    for _ in range(100):
        n = int(rng.integers(1, 4))
        psi = random_pure(n, rng)
        enc = PhaseEncoding(n)
        worst = min(worst, qfi_pure(psi, enc) - fitness(psi, enc, strata).fql)
    return worst >= -1e-3, f"min(F_Q - F_Q^L) = {worst:.3e}"


def _averaging(rng):
    strata = experiment_strata()
    worst = -np.inf
    for _ in range(50):
        n = int(rng.integers(1, 4))
        s = random_mixed(n, rng, rank=2)
        avg = averaged_state(s, PhaseEncoding(n), strata)
        worst = max(worst, purity(avg) - purity(s))
    return worst <= 1e-12, f"max purity increase {worst:.2e}"


def _qfi_agreement(rng):
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 4))
        psi = random_pure(n, rng)
        enc = PhaseEncoding(n)
        worst = max(worst, abs(qfi_mixed(psi.as_mixed(), enc) - qfi_pure(psi, enc)))
    return worst < 1e-8, f"max |qfi_mixed - qfi_pure| = {worst:.2e}"


def _swap_identity(rng):
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 3))
        a, b = random_mixed(n, rng), random_mixed(n, rng)
        exact = swap_test_exact(a, b, NoiseModel(0.0))
        worst = max(worst, abs(exact - 0.5 * np.trace(a.density() @ b.density()).real))
    return worst < 1e-10, f"max deviation {worst:.2e}"


def _attenuation(rng):
    noise = NoiseModel(0.1)
    ratios = []
    for _ in range(10):
        a, b = random_pure(1, rng), random_pure(1, rng)
        ratios.append(swap_test_exact(a, b, noise) / swap_test_exact(a, b, NoiseModel(0.0)))
    spread = max(ratios) - min(ratios)
    return spread < 1e-10 and abs(ratios[0] - noise.attenuation) < 1e-10, f"ratio {ratios[0]:.6f}"


def _strata(rng):
    dx2 = experiment_strata().dx2
    return abs(dx2 - 1.0721) < 1e-4, f"(dx)^2 = {dx2:.5f}"


def _optimizer(rng):
    calls = [0]

    def sphere(x):
        calls[0] += 1
        return float(np.sum(x**2))

    cfg = nmopt.OptimizerConfig(max_iterations=300, init_range=(-1.0, 1.0), seed=int(rng.integers(1 << 30)))
    res = nmopt.run(4, cfg, sphere)
    best = [e.best_value for e in res.events]
    monotone = all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
    counted = (4 + 1) + sum(e.evaluations_used for e in res.events) == calls[0]
    return monotone and counted and res.best_value < 1e-6, f"best {res.best_value:.2e}"


CHECKS = {
    "invariants": [
        ("propagator unitarity", _unitarity),
        ("kernel path matches dense propagator", _kernel_paths),
        ("purity-loss bound F_Q >= F_Q^L", _bound),
        ("averaging never increases purity", _averaging),
        ("qfi_mixed == qfi_pure on pure states", _qfi_agreement),
        ("SWAP test = Tr(rho_a rho_b)/2", _swap_identity),
        ("dephasing attenuation is multiplicative", _attenuation),
        ("experiment strata variance", _strata),
        ("optimizer monotone best / evaluation count", _optimizer),
    ]
}


def run_suite(name: str = "invariants", seed: int = 12345) -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(seed)
    out = []
    for label, check in CHECKS[name]:
        try:
            passed, detail = check(rng)
        except Exception as exc:  # report, keep going
            passed, detail = False, f"raised {exc!r}"
        out.append((label, bool(passed), detail))
    return out
