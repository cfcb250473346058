# cython: language_level=3
"""Compiled hot loops. Semantics match ``metroloop._kernels_py`` exactly."""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin
from libc.stdlib cimport free, malloc
from scipy.linalg.cython_lapack cimport zheevd

cnp.import_array()

BACKEND = "compiled"


cdef struct Workspace:
    int d
    int lwork
    int lrwork
    int liwork
    double complex* a
    double complex* work
    double complex* tmp
    double* w
    double* rwork
    int* iwork


cdef int _ws_alloc(Workspace* ws, int d) except -1:
    ws.d = d
    ws.lwork = 2 * d + d * d
    ws.lrwork = 1 + 5 * d + 2 * d * d
    ws.liwork = 3 + 5 * d
    ws.a = <double complex*>malloc(d * d * sizeof(double complex))
    ws.work = <double complex*>malloc(ws.lwork * sizeof(double complex))
    ws.tmp = <double complex*>malloc(d * sizeof(double complex))
    ws.w = <double*>malloc(d * sizeof(double))
    ws.rwork = <double*>malloc(ws.lrwork * sizeof(double))
    ws.iwork = <int*>malloc(ws.liwork * sizeof(int))
    if (ws.a == NULL or ws.work == NULL or ws.tmp == NULL or ws.w == NULL
            or ws.rwork == NULL or ws.iwork == NULL):
        _ws_free(ws)
        raise MemoryError()
    return 0


cdef void _ws_free(Workspace* ws) noexcept:
    free(ws.a); free(ws.work); free(ws.tmp); free(ws.w); free(ws.rwork); free(ws.iwork)
    ws.a = NULL; ws.work = NULL; ws.tmp = NULL; ws.w = NULL; ws.rwork = NULL; ws.iwork = NULL


cdef int _propagate(Workspace* ws, double dt, double complex[::1] psi) except -1:
    """psi <- exp(-i dt G) psi where ws.a holds G column-major (lower triangle used)."""
    cdef int d = ws.d
    cdef int info = 0
    cdef char jobz = b"V"
    cdef char uplo = b"L"
    cdef Py_ssize_t i, k
    cdef double complex acc
    cdef double phase
    zheevd(&jobz, &uplo, &d, ws.a, &d, ws.w, ws.work, &ws.lwork, ws.rwork, &ws.lrwork,
           ws.iwork, &ws.liwork, &info)
    if info != 0:
        raise ArithmeticError("zheevd failed with info=%d" % info)
    # tmp_k = exp(-i w_k dt) <v_k|psi>, with v_k[i] = a[k*d + i]
    for k in range(d):
        acc = 0
        for i in range(d):
            acc = acc + ws.a[k * d + i].conjugate() * psi[i]
        phase = -ws.w[k] * dt
        ws.tmp[k] = acc * (cos(phase) + 1j * sin(phase))
    for i in range(d):
        acc = 0
        for k in range(d):
            acc = acc + ws.a[k * d + i] * ws.tmp[k]
        psi[i] = acc
    return 0


def evolve_segments(const double complex[:, :, ::1] gens, const double[::1] dts, psi_in):
    """Apply exp(-i dts[m] gens[m]) for m = 0..M-1 in order to a state vector."""
    cdef Py_ssize_t M = gens.shape[0]
    cdef int d = <int>gens.shape[1]
    cdef Py_ssize_t m, i, j
    cdef Workspace ws
    if gens.shape[2] != d or dts.shape[0] != M:
        raise ValueError("generator stack / duration shape mismatch")
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.array(psi_in, dtype=np.complex128, copy=True)
    if out.shape[0] != d:
        raise ValueError("state dimension mismatch")
    cdef double complex[::1] psi = out
    _ws_alloc(&ws, d)
    try:
        for m in range(M):
            for i in range(d):
                for j in range(d):
                    ws.a[j * d + i] = gens[m, i, j]
            _propagate(&ws, dts[m], psi)
    finally:
        _ws_free(&ws)
    return out


def evolve_controls(const double[::1] drift, const double[:, ::1] bx, const double[:, ::1] by,
                    const double[::1] dts, double scale, psi_in):
    """Evolve under G_m = diag(drift) + scale * sum_i (bx[m,i] I_x^i + by[m,i] I_y^i).

    Qubit i (0-based) is bit n-1-i of the basis index, i.e. qubit 0 is the
    most significant.
    """
    cdef Py_ssize_t M = bx.shape[0]
    cdef Py_ssize_t n = bx.shape[1]
    cdef int d = <int>drift.shape[0]
    cdef Py_ssize_t m, i, a, b, q
    cdef Py_ssize_t mask
    cdef double hx, hy
    cdef Workspace ws
    if by.shape[0] != M or by.shape[1] != n or dts.shape[0] != M or d != (1 << n):
        raise ValueError("control shape mismatch")
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.array(psi_in, dtype=np.complex128, copy=True)
    if out.shape[0] != d:
        raise ValueError("state dimension mismatch")
    cdef double complex[::1] psi = out
    _ws_alloc(&ws, d)
    try:
        for m in range(M):
            for i in range(d * d):
                ws.a[i] = 0
            for a in range(d):
                ws.a[a * d + a] = drift[a]
            for q in range(n):
                mask = 1 << (n - 1 - q)
                hx = 0.5 * scale * bx[m, q]
                hy = 0.5 * scale * by[m, q]
                for a in range(d):
                    if a & mask:
                        continue
                    b = a | mask
                    # <b|G|a> with a's bit 0: I_x -> 1/2, I_y -> i/2; store row b >= col a
                    ws.a[a * d + b] = ws.a[a * d + b] + hx + 1j * hy
            _propagate(&ws, dts[m], psi)
    finally:
        _ws_free(&ws)
    return out


def coherence_spectrum(const double complex[:, ::1] rho, const cnp.int64_t[::1] popcount, int n):
    """w[D + n] = sum of |rho_ab|^2 over pairs with popcount[b] - popcount[a] = D."""
    cdef Py_ssize_t d = rho.shape[0]
    cdef Py_ssize_t a, b
    cdef double complex z
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(2 * n + 1)
    cdef double[::1] w = out
    if rho.shape[1] != d or popcount.shape[0] != d:
        raise ValueError("shape mismatch")
    for a in range(d):
        for b in range(d):
            z = rho[a, b]
            w[popcount[b] - popcount[a] + n] += z.real * z.real + z.imag * z.imag
    return out


def coherence_spectrum_pure(const double complex[::1] psi, const cnp.int64_t[::1] popcount, int n):
    """Same as ``coherence_spectrum`` for rho = |psi><psi|, in O(d + n^2)."""
    cdef Py_ssize_t d = psi.shape[0]
    cdef Py_ssize_t a, p, q
    cdef double complex z
    cdef cnp.ndarray[cnp.float64_t, ndim=1] hist = np.zeros(n + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(2 * n + 1)
    cdef double[::1] h = hist
    cdef double[::1] w = out
    if popcount.shape[0] != d:
        raise ValueError("shape mismatch")
    for a in range(d):
        z = psi[a]
        h[popcount[a]] += z.real * z.real + z.imag * z.imag
    for p in range(n + 1):
        for q in range(n + 1):
            w[q - p + n] += h[p] * h[q]
    return out


def qfi_spectral_sum(const double[::1] evals, const double complex[:, ::1] h_eig, double eps):
    """2 * sum_{i,j: l_i + l_j > eps} (l_i - l_j)^2 / (l_i + l_j) * |h_ij|^2."""
    cdef Py_ssize_t d = evals.shape[0]
    cdef Py_ssize_t i, j
    cdef double s, diff, total = 0.0
    cdef double complex z
    if h_eig.shape[0] != d or h_eig.shape[1] != d:
        raise ValueError("shape mismatch")
    for i in range(d):
        for j in range(i + 1, d):
            s = evals[i] + evals[j]
            if s > eps:
                diff = evals[i] - evals[j]
                z = h_eig[i, j]
                total += diff * diff / s * (z.real * z.real + z.imag * z.imag)
    return 4.0 * total
