"""Acceptance checks, one test per criterion.

Each test records a PASS/FAIL line; ``conftest.pytest_terminal_summary``
prints them after the run. ``python3 tests/test_acceptance.py`` runs the
same checks without pytest.
"""
import math
import time

import numpy as np
import pytest

from metroloop import harness, nmopt
from metroloop.metrology import (
    EXPERIMENT_POINTS,
    PhaseEncoding,
    experiment_strata,
    fitness,
    gaussian_strata,
    qfi_pure,
)
from metroloop.qcore import QuantumState
from metroloop.swapsim import NoiseModel, repetition_budget, sampled_fitness, swap_test_exact, swap_test_sampled

RESULTS: list[tuple[str, bool, str]] = []

FIG2_NS = (2, 3, 4, 5)
FIG2_RESTARTS = 5


def report(criterion: str, passed: bool, detail: str):
    RESULTS.append((criterion, bool(passed), detail))
    assert passed, f"{criterion}: {detail}"


def _random_pure(n, rng):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return QuantumState.pure(v, normalize=True)


def _random_mixed(n, rng):
    d = 2**n
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return QuantumState.mixed(rho / np.trace(rho).real)


_FIG2_CACHE: dict = {}


def fig2_records():
    if not _FIG2_CACHE:
        for n in FIG2_NS:
            cfg = harness.fig2_preset(n, restarts=FIG2_RESTARTS, seed=0)
            t0 = time.perf_counter()
            records, ok = harness.run_experiment(cfg, write=False)
            _FIG2_CACHE[n] = (records, ok, time.perf_counter() - t0)
    return _FIG2_CACHE


def test_c1_fig3_single_qubit():
    cfg = harness.fig3_preset(restarts=5, seed=0)
    t0 = time.perf_counter()
    records, ok = harness.run_experiment(cfg, write=False)
    elapsed = time.perf_counter() - t0
    vertices = cfg.spin_spec().n_params + 1
    tail = [float(np.mean(r.series("fq_true")[-8:])) for r in records]
    best = max(tail)
    passed = ok and len(records) == 5 and vertices == 7 and best >= 0.99 and elapsed < 60
    report("C1 fig3 preset", passed,
           f"best mean F_Q (last 8 iterations) = {best:.5f} >= 0.99; {vertices} vertices; "
           f"runtime {elapsed:.2f}s < 60s")


@pytest.mark.slow
def test_c2_fig2_spin_chains():
    cache = fig2_records()
    parts = []
    passed = True
    for n in FIG2_NS:
        records, ok, elapsed = cache[n]
        best = max(r.final["fql"] for r in records)
        need = (0.99 if n <= 3 else 0.95) * n**2
        passed &= ok and best >= need
        parts.append(f"N={n}: {best:.3f} >= {need:.3f} ({best / n**2:.4f} N^2, {elapsed:.0f}s)")
    report("C2 fig2 preset", passed, "; ".join(parts))


@pytest.mark.slow
def test_c3_noon_fidelity():
    cache = fig2_records()
    parts = []
    passed = True
    for n in FIG2_NS:
        records, _, _ = cache[n]
        qualifying = [r for r in records if r.final["fql"] >= 0.95 * n**2]
        fids = [r.final["noon_fidelity"] for r in qualifying]
        passed &= all(f >= 0.95 for f in fids)
        parts.append(f"N={n}: min {min(fids):.4f} over {len(fids)} runs" if fids else f"N={n}: no qualifying run")
    best_n2 = max(r.final["noon_fidelity"] for r in cache[2][0])
    passed &= best_n2 >= 0.999
    report("C3 NOON fidelity", passed, "; ".join(parts) + f"; N=2 best {best_n2:.6f} >= 0.999")


def test_c4_bound_suite():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    fine, coarse = gaussian_strata(1001, 1e-4), gaussian_strata(1001, 1e-2)
    gaps_fine, gaps_coarse, worst = [], [], math.inf
    for _ in range(1000):
        n = int(rng.integers(1, 4))
        psi = _random_pure(n, rng)
        enc = PhaseEncoding(n)
        fq = qfi_pure(psi, enc)
        fql = fitness(psi, enc, fine).fql
        worst = min(worst, fq - fql)
        gaps_fine.append(abs(fq - fql))
        gaps_coarse.append(abs(fq - fitness(psi, enc, coarse).fql))
    elapsed = time.perf_counter() - t0
    med_f, med_c = float(np.median(gaps_fine)), float(np.median(gaps_coarse))
    passed = worst >= -1e-3 and med_f < med_c and elapsed < 30
    report("C4 bound suite", passed,
           f"min(F_Q - F_Q^L) = {worst:.2e} >= -1e-3; median gap {med_f:.2e} (1e-4) < {med_c:.2e} (1e-2); "
           f"runtime {elapsed:.2f}s < 30s")


def test_c5_strata_provenance():
    dx2 = experiment_strata().dx2
    g = gaussian_strata(9, dx2)
    dev = float(np.abs(g.points - np.array(EXPERIMENT_POINTS)).max())
    passed = abs(dx2 - 1.0721) < 1e-4 and dev < 5e-4
    report("C5 strata provenance", passed,
           f"(dx)^2 = {dx2:.6f} (|diff| {abs(dx2 - 1.0721):.1e} < 1e-4); max point deviation {dev:.2e} < 5e-4")


def test_c6_swap_oracle():
    rng = np.random.default_rng(6)
    worst = 0.0
    for k in range(200):
        n = 1 + k % 2
        a = _random_mixed(n, rng) if k % 3 else _random_pure(n, rng)
        b = _random_mixed(n, rng) if k % 4 else _random_pure(n, rng)
        direct = 0.5 * np.trace(a.density() @ b.density()).real
        worst = max(worst, abs(swap_test_exact(a, b, NoiseModel(0.0)) - direct))
    a, b = _random_pure(1, rng), _random_pure(1, rng)
    truth = abs(np.vdot(a.data, b.data)) ** 2
    shots = np.array([10**2, 10**3, 10**4, 10**5])
    rmse = []
    for s in shots:
        errs = [swap_test_sampled(a, b, NoiseModel(0.0), int(s), seed=[int(s), t]).est_overlap - truth
                for t in range(400)]
        rmse.append(math.sqrt(np.mean(np.square(errs))))
    slope = float(np.polyfit(np.log(shots), np.log(rmse), 1)[0])
    passed = worst < 1e-10 and abs(slope + 0.5) <= 0.05
    report("C6 SWAP-test oracle", passed,
           f"max |exact - Tr(rho_a rho_b)/2| = {worst:.1e} < 1e-10; error slope {slope:.3f} in -0.5 +- 0.05")


def _ordering_rate(shots, trials=200):
    # two single-qubit probes cos(d/2)|0> + sin(d/2)|1>; dgamma scales as sin(d)^2
    strata = experiment_strata()
    enc = PhaseEncoding(1)
    noise = NoiseModel(0.025)

    def probe(d):
        return QuantumState.pure([math.cos(d / 2), math.sin(d / 2)])

    hi = probe(math.pi / 2)
    g_hi = fitness(hi, enc, strata).delta_gamma
    lo = probe(math.asin(math.sqrt((g_hi - 0.045) / g_hi)))
    gap = g_hi - fitness(lo, enc, strata).delta_gamma
    correct = 0
    for t in range(trials):
        e_hi = sampled_fitness(hi, strata, noise, shots, seed=[t, 0]).delta_gamma
        e_lo = sampled_fitness(lo, strata, noise, shots, seed=[t, 1]).delta_gamma
        correct += e_hi > e_lo
    return correct / trials, gap


def test_c7_decoherence_ordering():
    delta, p = 0.045, 0.025
    budget = repetition_budget(delta, p)
    # the budget counts repetitions of a unit-variance comparison; each term is
    # resolved to delta, so the per-term count is the budget divided by delta
    shots = math.ceil(budget / delta)
    rate, gap = _ordering_rate(shots)
    literal, _ = _ordering_rate(budget)
    passed = budget == 94 and gap >= 0.045 - 1e-12 and rate >= 0.95
    report("C7 decoherence ordering", passed,
           f"budget {budget}, {shots} shots per term: {rate:.1%} correct >= 95% (gap {gap:.4f}); "
           f"for reference {budget} shots per term gives {literal:.1%}")


def test_c8_optimizer_bowl():
    center = np.array([0.3, -1.2, 0.7, 2.0, -0.4, 1.1])
    scales = np.array([1.0, 2.0, 0.5, 3.0, 1.5, 0.8])
    hits, invariants_ok = 0, True
    for seed in range(50):
        calls = [0]

        def bowl(x):
            calls[0] += 1
            return float(np.sum(scales * (x - center) ** 2))

        cfg = nmopt.OptimizerConfig(max_iterations=500, init_range=(-5.0, 5.0), seed=seed)
        res = nmopt.run(6, cfg, bowl)
        vals = [e.best_value for e in res.events]
        invariants_ok &= all(b <= a for a, b in zip(vals, vals[1:]))
        invariants_ok &= all(1 <= e.evaluations_used <= 8 for e in res.events)
        invariants_ok &= 7 + sum(e.evaluations_used for e in res.events) == calls[0]
        hits += res.best_value <= 1e-4
    rate = hits / 50
    report("C8 optimizer sanity", rate >= 0.9 and invariants_ok,
           f"{hits}/50 seeds within 1e-4 in <= 500 iterations ({rate:.0%} >= 90%); "
           f"invariants {'hold' if invariants_ok else 'violated'}")


if __name__ == "__main__":
    import sys

    for name, fn in list(globals().items()):
        if name.startswith("test_c") and callable(fn):
            try:
                fn()
            except AssertionError:
                pass
    for criterion, passed, detail in RESULTS:
        print(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")
    sys.exit(0 if all(p for _, p, _ in RESULTS) else 1)
