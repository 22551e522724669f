"""Pure-Python (numpy) implementations of the hot kernels.

Mirrors the API of the compiled ``_ckernels`` extension; used when the
extension is unavailable or ``CPTP_MAXLIK_PURE_PYTHON=1`` is set.
"""

import numpy as np

from . import linalg

RETRACTION_REG = 1e-12


def cell_probabilities(S, effects):
    # Tr[S A] = sum_ab S[a,b] conj(A[a,b]) for Hermitian A
    return np.real(np.einsum("cab,ab->c", effects.conj(), S))


def log_likelihood(S, effects, counts, pmin):
    p = cell_probabilities(S, effects)
    mask = counts > 0
    return float(np.sum(counts[mask] * np.log(np.maximum(p[mask], pmin))))


def r_matrix(S, effects, counts, pmin):
    p = cell_probabilities(S, effects)
    mask = counts > 0
    w = counts[mask] / np.maximum(p[mask], pmin)
    d = S.shape[0]
    if not np.any(mask):
        return np.zeros((d, d), dtype=np.complex128)
    return np.einsum("c,cab->ab", w, effects[mask])


def factor_from_params(params, d):
    t = np.zeros((d, d), dtype=np.complex128)
    t[np.diag_indices(d)] = params[:d]
    off = np.asarray(params[d:], dtype=float).reshape(-1, 2)
    t[np.tril_indices(d, -1)] = off[:, 0] + 1j * off[:, 1]
    return t


def gram_from_params(params, d):
    t = factor_from_params(params, d)
    return t.conj().T @ t


def retract_gram(S0, dim_h, dim_k):
    rho = linalg.partial_trace_k(S0, dim_h, dim_k) + RETRACTION_REG * np.eye(dim_h)
    w = linalg.psd_power(rho, -0.5)
    x = np.kron(w, np.eye(dim_k))
    return linalg.hermitize(x @ S0 @ x)


def neg_loglik_loose(params, effects, counts, dim_h, dim_k, pmin):
    S0 = gram_from_params(params, dim_h * dim_k)
    tr = np.trace(S0).real
    if not tr > 0:
        return np.inf
    return -log_likelihood(S0 * (dim_h / tr), effects, counts, pmin)


def neg_loglik_retracted(params, effects, counts, dim_h, dim_k, pmin):
    S0 = gram_from_params(params, dim_h * dim_k)
    if not np.trace(S0).real > 0:
        return np.inf
    return -log_likelihood(retract_gram(S0, dim_h, dim_k), effects, counts, pmin)
