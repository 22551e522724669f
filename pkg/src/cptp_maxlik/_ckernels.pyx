# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the likelihood and parameterization kernels.

Semantics match ``_pykernels`` to round-off. The fused objectives work on
fixed-size stack buffers, so the joint dimension is capped at MAX_DIM.
"""

import numpy as np
from libc.math cimport log, sqrt, fabs

ctypedef double complex cplx

cdef enum:
    MAXD = 16
    MAXH = 8

MAX_DIM = MAXD
MAX_DIM_H = MAXH

cdef double RETRACTION_REG = 1e-12


cdef inline double _prob(const cplx* S, const cplx[:, :, ::1] A, Py_ssize_t c, int d) noexcept nogil:
    cdef double acc = 0.0
    cdef int a, b
    cdef cplx s, e
    for a in range(d):
        for b in range(d):
            s = S[a * d + b]
            e = A[c, a, b]
            acc += s.real * e.real + s.imag * e.imag
    return acc


cdef double _loglik(const cplx* S, const cplx[:, :, ::1] A, const double[::1] f, double pmin, int d) noexcept nogil:
    cdef double acc = 0.0
    cdef double p
    cdef Py_ssize_t c
    for c in range(A.shape[0]):
        if f[c] > 0.0:
            p = _prob(S, A, c, d)
            if p < pmin:
                p = pmin
            acc += f[c] * log(p)
    return acc


cdef void _gram(const double[::1] params, int d, cplx* G) noexcept nogil:
    # T lower triangular: diag params[:d], then (re, im) pairs row-major below the diagonal
    cdef cplx T[MAXD * MAXD]
    cdef int i, j, m, pos = d
    cdef cplx acc
    for i in range(d * d):
        T[i] = 0
    for i in range(d):
        T[i * d + i] = params[i]
    for i in range(1, d):
        for j in range(i):
            T[i * d + j] = params[pos] + 1j * params[pos + 1]
            pos += 2
    # G = T^dagger T; T[m, a] vanishes for m < a
    for i in range(d):
        for j in range(i, d):
            acc = 0
            for m in range(j, d):
                acc = acc + T[m * d + i].conjugate() * T[m * d + j]
            G[i * d + j] = acc
            G[j * d + i] = acc.conjugate()


cdef void _jacobi(double* A, double* V, double* w, int n) noexcept nogil:
    """Cyclic Jacobi eigen-decomposition of a real symmetric n x n matrix (in place)."""
    cdef int p, q, k, sweep
    cdef double off, total, apq, theta, t, c, s, x, y
    for p in range(n):
        for q in range(n):
            V[p * n + q] = 1.0 if p == q else 0.0
    for sweep in range(100):
        off = 0.0
        total = 0.0
        for p in range(n):
            for q in range(n):
                x = A[p * n + q] * A[p * n + q]
                total += x
                if p != q:
                    off += x
        if off <= 1e-32 * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p * n + q]
                if apq == 0.0:
                    continue
                theta = (A[q * n + q] - A[p * n + p]) / (2.0 * apq)
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    x = A[k * n + p]
                    y = A[k * n + q]
                    A[k * n + p] = c * x - s * y
                    A[k * n + q] = s * x + c * y
                for k in range(n):
                    x = A[p * n + k]
                    y = A[q * n + k]
                    A[p * n + k] = c * x - s * y
                    A[q * n + k] = s * x + c * y
                for k in range(n):
                    x = V[k * n + p]
                    y = V[k * n + q]
                    V[k * n + p] = c * x - s * y
                    V[k * n + q] = s * x + c * y
    for p in range(n):
        w[p] = A[p * n + p]


cdef void _inv_sqrt(const cplx* H, int n, cplx* W) noexcept nogil:
    """Clamped inverse square root of an n x n Hermitian matrix via its real embedding."""
    cdef double M[4 * MAXH * MAXH]
    cdef double V[4 * MAXH * MAXH]
    cdef double w[2 * MAXH]
    cdef double fw[2 * MAXH]
    cdef int m = 2 * n
    cdef int i, j, r
    cdef double top, floor_, acc_re, acc_im, lam
    for i in range(n):
        for j in range(n):
            M[i * m + j] = H[i * n + j].real
            M[(n + i) * m + (n + j)] = H[i * n + j].real
            M[i * m + (n + j)] = -H[i * n + j].imag
            M[(n + i) * m + j] = H[i * n + j].imag
    _jacobi(M, V, w, m)
    top = w[0]
    for i in range(1, m):
        if w[i] > top:
            top = w[i]
    floor_ = 1e-12 * (top if top > 1.0 else 1.0)
    for i in range(m):
        lam = w[i] if w[i] > floor_ else floor_
        fw[i] = 1.0 / sqrt(lam)
    # W = F[:n, :n] + i F[n:, :n] with F = V diag(fw) V^T
    for i in range(n):
        for j in range(n):
            acc_re = 0.0
            acc_im = 0.0
            for r in range(m):
                acc_re += V[i * m + r] * fw[r] * V[j * m + r]
                acc_im += V[(n + i) * m + r] * fw[r] * V[j * m + r]
            W[i * n + j] = acc_re + 1j * acc_im


cdef void _retract(const cplx* S0, int nh, int nk, cplx* S) noexcept nogil:
    cdef cplx rho[MAXH * MAXH]
    cdef cplx W[MAXH * MAXH]
    cdef cplx tmp[MAXD * MAXD]
    cdef int d = nh * nk
    cdef int h, h2, k, k2, a, col
    cdef cplx acc
    for h in range(nh):
        for h2 in range(nh):
            acc = 0
            for k in range(nk):
                acc = acc + S0[(h * nk + k) * d + h2 * nk + k]
            rho[h * nh + h2] = acc
        rho[h * nh + h] = rho[h * nh + h] + RETRACTION_REG
    _inv_sqrt(rho, nh, W)
    # tmp = (W (x) 1) S0
    for h in range(nh):
        for k in range(nk):
            for col in range(d):
                acc = 0
                for a in range(nh):
                    acc = acc + W[h * nh + a] * S0[(a * nk + k) * d + col]
                tmp[(h * nk + k) * d + col] = acc
    # S = tmp (W (x) 1)
    for col in range(d):
        for h2 in range(nh):
            for k2 in range(nk):
                acc = 0
                for a in range(nh):
                    acc = acc + tmp[col * d + a * nk + k2] * W[a * nh + h2]
                S[col * d + h2 * nk + k2] = acc
    for h in range(d):
        for h2 in range(h, d):
            acc = 0.5 * (S[h * d + h2] + S[h2 * d + h].conjugate())
            S[h * d + h2] = acc
            S[h2 * d + h] = acc.conjugate()


def _check_dims(int d, int nh=1):
    if d > MAXD or nh > MAXH:
        raise ValueError(f"compiled kernels support joint dimension <= {MAXD}")


def cell_probabilities(const cplx[:, ::1] S, const cplx[:, :, ::1] effects):
    cdef int d = S.shape[0]
    cdef Py_ssize_t c
    out = np.empty(effects.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    for c in range(effects.shape[0]):
        o[c] = _prob(&S[0, 0], effects, c, d)
    return out


def log_likelihood(const cplx[:, ::1] S, const cplx[:, :, ::1] effects, const double[::1] counts, double pmin):
    return _loglik(&S[0, 0], effects, counts, pmin, S.shape[0])


def r_matrix(const cplx[:, ::1] S, const cplx[:, :, ::1] effects, const double[::1] counts, double pmin):
    cdef int d = S.shape[0]
    cdef Py_ssize_t c
    cdef int a, b
    cdef double p, w
    out = np.zeros((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] R = out
    for c in range(effects.shape[0]):
        if counts[c] > 0.0:
            p = _prob(&S[0, 0], effects, c, d)
            if p < pmin:
                p = pmin
            w = counts[c] / p
            for a in range(d):
                for b in range(d):
                    R[a, b] = R[a, b] + w * effects[c, a, b]
    return out


def factor_from_params(const double[::1] params, int d):
    _check_dims(d)
    t = np.zeros((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] T = t
    cdef int i, j, pos = d
    for i in range(d):
        T[i, i] = params[i]
    for i in range(1, d):
        for j in range(i):
            T[i, j] = params[pos] + 1j * params[pos + 1]
            pos += 2
    return t


def gram_from_params(const double[::1] params, int d):
    _check_dims(d)
    g = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] G = g
    _gram(params, d, &G[0, 0])
    return g


def retract_gram(const cplx[:, ::1] S0, int dim_h, int dim_k):
    _check_dims(dim_h * dim_k, dim_h)
    d = dim_h * dim_k
    s = np.empty((d, d), dtype=np.complex128)
    cdef cplx[:, ::1] S = s
    _retract(&S0[0, 0], dim_h, dim_k, &S[0, 0])
    return s


def neg_loglik_loose(const double[::1] params, const cplx[:, :, ::1] effects,
                     const double[::1] counts, int dim_h, int dim_k, double pmin):
    cdef int d = dim_h * dim_k
    cdef cplx G[MAXD * MAXD]
    cdef double tr = 0.0
    cdef int i
    _check_dims(d)
    _gram(params, d, G)
    for i in range(d):
        tr += G[i * d + i].real
    if not tr > 0.0:
        return float("inf")
    for i in range(d * d):
        G[i] = G[i] * (dim_h / tr)
    return -_loglik(G, effects, counts, pmin, d)


def neg_loglik_retracted(const double[::1] params, const cplx[:, :, ::1] effects,
                         const double[::1] counts, int dim_h, int dim_k, double pmin):
    cdef int d = dim_h * dim_k
    cdef cplx G[MAXD * MAXD]
    cdef cplx S[MAXD * MAXD]
    cdef double tr = 0.0
    cdef int i
    _check_dims(d, dim_h)
    _gram(params, d, G)
    for i in range(d):
        tr += G[i * d + i].real
    if not tr > 0.0:
        return float("inf")
    _retract(G, dim_h, dim_k, S)
    return -_loglik(S, effects, counts, pmin, d)
