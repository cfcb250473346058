"""NumPy implementations of the hot loops, used when the extension is absent."""
import numpy as np

BACKEND = "python"


def evolve_segments(gens, dts, psi_in):
    """Apply exp(-i dts[m] gens[m]) for m = 0..M-1 in order to a state vector."""
    gens = np.asarray(gens, dtype=complex)
    dts = np.asarray(dts, dtype=float)
    psi = np.array(psi_in, dtype=complex, copy=True)
    if gens.ndim != 3 or gens.shape[1] != gens.shape[2] or dts.shape != (gens.shape[0],):
        raise ValueError("generator stack / duration shape mismatch")
    if psi.shape != (gens.shape[1],):
        raise ValueError("state dimension mismatch")
    w, v = np.linalg.eigh(gens)
    phases = np.exp(-1j * w * dts[:, None])
    for m in range(gens.shape[0]):
        psi = v[m] @ (phases[m] * (v[m].conj().T @ psi))
    return psi


def evolve_controls(drift, bx, by, dts, scale, psi_in):
    """Evolve under G_m = diag(drift) + scale * sum_i (bx[m,i] I_x^i + by[m,i] I_y^i).

    Qubit i (0-based) is bit n-1-i of the basis index, i.e. qubit 0 is the
    most significant.
    """
    drift = np.asarray(drift, dtype=float)
    bx = np.asarray(bx, dtype=float)
    by = np.asarray(by, dtype=float)
    m_count, n = bx.shape
    d = drift.shape[0]
    if by.shape != bx.shape or np.shape(dts) != (m_count,) or d != 1 << n:
        raise ValueError("control shape mismatch")
    idx = np.arange(d)
    gens = np.zeros((m_count, d, d), dtype=complex)
    gens[:, idx, idx] = drift
    for q in range(n):
        mask = 1 << (n - 1 - q)
        a = idx[(idx & mask) == 0]
        b = a | mask
        lower = 0.5 * scale * (bx[:, q, None] + 1j * by[:, q, None])
        gens[:, b, a] += lower
        gens[:, a, b] += lower.conj()
    return evolve_segments(gens, dts, psi_in)


def coherence_spectrum(rho, popcount, n):
    """w[D + n] = sum of |rho_ab|^2 over pairs with popcount[b] - popcount[a] = D."""
    rho = np.asarray(rho, dtype=complex)
    popcount = np.asarray(popcount, dtype=np.int64)
    if rho.shape != (popcount.shape[0], popcount.shape[0]):
        raise ValueError("shape mismatch")
    diff = popcount[None, :] - popcount[:, None] + n
    return np.bincount(diff.ravel(), weights=(np.abs(rho) ** 2).ravel(), minlength=2 * n + 1)


def coherence_spectrum_pure(psi, popcount, n):
    """Same as ``coherence_spectrum`` for rho = |psi><psi|, in O(d + n^2)."""
    psi = np.asarray(psi, dtype=complex)
    popcount = np.asarray(popcount, dtype=np.int64)
    if psi.shape != popcount.shape:
        raise ValueError("shape mismatch")
    hist = np.bincount(popcount, weights=np.abs(psi) ** 2, minlength=n + 1)
    # out[q - p + n] = sum h[p] h[q]
    return np.convolve(hist, hist[::-1])


def qfi_spectral_sum(evals, h_eig, eps):
    """2 * sum_{i,j: l_i + l_j > eps} (l_i - l_j)^2 / (l_i + l_j) * |h_ij|^2."""
    evals = np.asarray(evals, dtype=float)
    h_eig = np.asarray(h_eig, dtype=complex)
    if h_eig.shape != (evals.shape[0], evals.shape[0]):
        raise ValueError("shape mismatch")
    s = evals[:, None] + evals[None, :]
    diff2 = (evals[:, None] - evals[None, :]) ** 2
    mask = s > eps
    terms = np.zeros_like(s)
    terms[mask] = diff2[mask] / s[mask] * np.abs(h_eig[mask]) ** 2
    return float(2.0 * terms.sum())
