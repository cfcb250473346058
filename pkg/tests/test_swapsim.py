import math

import numpy as np
import pytest

from metroloop.metrology import PhaseEncoding, StrataSet, experiment_strata, fitness
from metroloop.qcore import QuantumState, ValidationError
from metroloop.swapsim import (
    NoiseModel,
    dephase,
    repetition_budget,
    sampled_fitness,
    sampled_fitness_terms,
    swap_test_exact,
    swap_test_sampled,
)

from conftest import random_mixed, random_pure

PLUS = QuantumState.pure([1, 1], normalize=True)


def test_noise_model_validation():
    assert NoiseModel(0.0).attenuation == 1.0
    assert 0 < NoiseModel(0.4).attenuation <= 1
    for p in (-0.1, 1.0):
        with pytest.raises(ValidationError):
            NoiseModel(p)


def test_dephase_examples(rng):
    rho = random_mixed(2, rng)
    assert np.allclose(dephase(rho, 0.0, 1).data, rho.data)
    out = dephase(PLUS, 0.25, 1)
    assert np.isclose(out.data[0, 1], 0.5 * PLUS.density()[0, 1])
    diag = QuantumState.mixed(np.diag([0.6, 0.4]))
    assert np.allclose(dephase(diag, 0.3, 1).data, diag.data)
    with pytest.raises(ValidationError):
        dephase(PLUS, 1.2, 1)
    with pytest.raises(ValidationError):
        dephase(PLUS, 0.1, 2)


def test_dephase_targets_one_qubit(rng):
    rho = random_mixed(2, rng)
    out = dephase(rho, 0.2, 2).data
    assert np.isclose(np.trace(out), 1.0)
    # qubit 2 is the least significant: flips between |x0> and |x1> are damped
    assert np.isclose(out[0, 1], 0.6 * rho.data[0, 1])
    assert np.isclose(out[0, 2], rho.data[0, 2])


def test_swap_exact_examples(rng):
    psi = random_pure(2, rng)
    assert np.isclose(swap_test_exact(psi, psi), 0.5)
    mm = QuantumState.mixed(np.eye(2) / 2)
    assert np.isclose(swap_test_exact(mm, mm), 0.25)
    noise = NoiseModel(0.1)
    assert np.isclose(swap_test_exact(psi, psi, noise), 0.5 * noise.attenuation)
    with pytest.raises(ValidationError):
        swap_test_exact(psi, PLUS)


def test_swap_identity_and_symmetry(rng):
    worst = 0.0
    for k in range(50):
        n = 1 + k % 2
        a, b = random_mixed(n, rng), random_mixed(n, rng)
        v = swap_test_exact(a, b)
        worst = max(worst, abs(v - 0.5 * np.trace(a.data @ b.data).real))
        # equal up to summation order in the final traces
        assert abs(v - swap_test_exact(b, a, NoiseModel(0.0))) < 1e-15
        noisy = NoiseModel(0.07)
        assert abs(swap_test_exact(a, b, noisy) - swap_test_exact(b, a, noisy)) < 1e-15
    assert worst < 1e-10


@pytest.mark.parametrize("applications", [0, 1, 2, 3])
def test_attenuation_is_multiplicative(rng, applications):
    noise = NoiseModel(0.15, applications)
    for _ in range(10):
        a, b = random_mixed(1, rng), random_pure(1, rng)
        ratio = swap_test_exact(a, b, noise) / swap_test_exact(a, b)
        assert np.isclose(ratio, noise.attenuation, rtol=1e-10)


def test_noise_preserves_ranking(rng):
    target = random_pure(2, rng)
    cands = [random_pure(2, rng) for _ in range(8)]
    clean = [swap_test_exact(target, c) for c in cands]
    noisy = [swap_test_exact(target, c, NoiseModel(0.2)) for c in cands]
    assert np.argsort(clean).tolist() == np.argsort(noisy).tolist()


def test_sampled_large_shots(rng):
    psi = random_pure(1, rng)
    res = swap_test_sampled(psi, psi, NoiseModel(0.0), 10**6, seed=5)
    assert abs(res.mean_iz - 0.5) <= 3 * res.std_err + 1e-12
    assert res.shots == 10**6
    mm = QuantumState.mixed(np.eye(2) / 2)
    res = swap_test_sampled(mm, mm, NoiseModel(0.0), 10**6, seed=6)
    assert abs(res.mean_iz - 0.25) <= 4 * res.std_err
    assert 0.23 < res.std_err * 1000 < 0.5


def test_sampled_determinism_and_range(rng):
    a, b = random_pure(1, rng), random_pure(1, rng)
    r1 = swap_test_sampled(a, b, NoiseModel(0.05), 500, seed=11)
    r2 = swap_test_sampled(a, b, NoiseModel(0.05), 500, seed=11)
    assert r1 == r2
    assert abs(r1.mean_iz) <= 0.5
    assert np.isclose(r1.est_overlap, 2 * r1.mean_iz / NoiseModel(0.05).attenuation)
    # per-shot variance of +-1/2 outcomes is at most 1/4
    assert r1.std_err**2 * r1.shots <= 0.25 * 500 / 499 + 1e-12
    with pytest.raises(ValidationError):
        swap_test_sampled(a, b, NoiseModel(), 0, seed=1)


def test_sampled_fitness_term_count():
    out = sampled_fitness_terms(PLUS, experiment_strata(), NoiseModel(0.0), 100, seed=1)
    assert len(out.pair_terms) == 45
    assert all(j <= l for j, l in out.pair_terms)


def test_sampled_fitness_converges_to_exact():
    exact = fitness(PLUS, PhaseEncoding(1), experiment_strata()).delta_gamma
    est = sampled_fitness(PLUS, experiment_strata(), NoiseModel(0.0), 10**7, seed=3)
    assert abs(est.delta_gamma - exact) < 2e-3
    assert np.isclose(exact, 0.3177, atol=1e-4)


def test_sampled_fitness_single_stratum():
    rep = sampled_fitness(PLUS, StrataSet([0.0]), NoiseModel(0.0), 10**6, seed=9)
    assert abs(rep.delta_gamma) < 5e-3
    assert math.isnan(rep.fql)


def test_pair_expectation_matches_circuit(rng):
    # the closed-form per-term expectation equals the full circuit simulation
    psi = random_pure(2, rng)
    strata = StrataSet([-0.3, 0.0, 0.3])
    noise = NoiseModel(0.05)
    enc = PhaseEncoding(2)
    from metroloop.metrology import encode
    out = sampled_fitness_terms(psi, strata, noise, 10**8, seed=4, enc=enc)
    for (j, l), term in out.pair_terms.items():
        a = encode(psi, enc, strata.points[j])
        b = encode(psi, enc, strata.points[l])
        assert abs(term.mean_iz - swap_test_exact(a, b, noise)) < 5 * term.std_err + 1e-6


def test_error_scaling_slope(rng):
    a, b = random_pure(1, rng), random_pure(1, rng)
    truth = abs(np.vdot(a.data, b.data)) ** 2
    shots = np.array([10**2, 10**3, 10**4, 10**5])
    rmse = []
    for s in shots:
        errs = [swap_test_sampled(a, b, NoiseModel(0.0), int(s), seed=[int(s), t]).est_overlap - truth
                for t in range(400)]
        rmse.append(np.sqrt(np.mean(np.square(errs))))
    slope = np.polyfit(np.log(shots), np.log(rmse), 1)[0]
    assert abs(slope + 0.5) < 0.05


def test_repetition_budget_examples():
    assert repetition_budget(0.045, 0.025) == 94
    assert repetition_budget(0.1, 0.0) == 40
    assert repetition_budget(0.3, 0.0) == math.ceil(4 / 0.3)
    assert repetition_budget(1.0, 0.5) == 16
    with pytest.raises(ValidationError):
        repetition_budget(0.0, 0.1)
    with pytest.raises(ValidationError):
        repetition_budget(0.1, 1.0)
