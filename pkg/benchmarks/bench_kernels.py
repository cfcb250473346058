"""Compiled vs NumPy kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat 200]
"""
import argparse
import timeit

import numpy as np

from metroloop import kernels
from metroloop.metrology import _popcounts
from metroloop.spinsys import ControlSequence, SpinSystemSpec, _ising_drift


def cases(rng):
    for n in (1, 2, 3, 4, 5):
        spec = SpinSystemSpec.chain(n)
        x = rng.uniform(spec.lower_bounds(), spec.upper_bounds())
        c = ControlSequence.from_vector(spec, x)
        drift = np.diag(_ising_drift(n, 1.0)).real.copy()
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = 1
        yield f"evolve_controls N={n} M={2 * n}", lambda: kernels.evolve_controls(
            drift, c.bx, c.by, c.dt, 2 * np.pi, psi)

        v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        v /= np.linalg.norm(v)
        pc = _popcounts(n)
        yield f"coherence_spectrum_pure N={n}", lambda: kernels.coherence_spectrum_pure(v, pc, n)
        rho = np.outer(v, v.conj())
        yield f"coherence_spectrum N={n}", lambda: kernels.coherence_spectrum(rho, pc, n)
        lam = rng.dirichlet(np.ones(2**n))
        a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
        h = a + a.conj().T
        yield f"qfi_spectral_sum N={n}", lambda: kernels.qfi_spectral_sum(lam, h, 1e-12)


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the python backend is available")
    rows = {}
    for name in backends:
        prev = kernels.use_backend(name)
        try:
            for label, fn in cases(np.random.default_rng(0)):
                fn()  # warm-up
                t = min(timeit.repeat(fn, number=args.repeat, repeat=3)) / args.repeat
                rows.setdefault(label, {})[name] = t
        finally:
            kernels.use_backend(prev)
    print(f"{'kernel':<32}" + "".join(f"{b + ' (us)':>16}" for b in backends) + f"{'speedup':>10}")
    for label, t in rows.items():
        line = f"{label:<32}" + "".join(f"{t[b] * 1e6:>16.1f}" for b in backends)
        if len(backends) == 2:
            line += f"{t['python'] / t['compiled']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
