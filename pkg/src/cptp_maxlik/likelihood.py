"""Log-likelihood, its Lagrangian form with a multiplier matrix, and the R operator.

With ``A_c = rho_j^T (x) Pi_k`` and ``p_c = Tr[S A_c]``, the multinomial
log-likelihood (up to an S-independent constant) is ``L = sum_c f_c ln p_c``.
Its gradient with respect to S is ``R = sum_c (f_c / p_c) A_c``, and the
stationarity condition of ``L - Tr_H[mu Tr_K S]`` reads
``R S = (mu (x) 1_K) S``; that is the relation the iterative solver enforces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, linalg
from .channels import ChoiMatrix
from .errors import InvalidArgumentError
from .tomography import CountsDataset

P_MIN = 1e-12


@dataclass(frozen=True)
class LikelihoodValue:
    value: float
    finite: bool

    def __float__(self) -> float:
        return self.value


def _choi_array(s, data: CountsDataset) -> np.ndarray:
    m = s.matrix if isinstance(s, ChoiMatrix) else np.asarray(s, dtype=np.complex128)
    d = data.dim_h * data.dim_k
    if m.shape != (d, d):
        raise InvalidArgumentError(f"Choi shape {m.shape} does not match dataset dimension {d}")
    return np.ascontiguousarray(m)


def cell_probabilities(s, data: CountsDataset) -> np.ndarray:
    """Raw (unfloored) ``p_c`` in flat (input, setting, outcome) order."""
    return kernels.cell_probabilities(_choi_array(s, data), data.design.effects)


def log_likelihood(s, data: CountsDataset) -> LikelihoodValue:
    """``sum f ln max(p, P_MIN)`` over cells with positive counts."""
    m = _choi_array(s, data)
    value = kernels.log_likelihood(m, data.design.effects, data.flat_counts, P_MIN)
    return LikelihoodValue(float(value), bool(np.isfinite(value)))


def effective_log_likelihood(s, data: CountsDataset, mu) -> LikelihoodValue:
    """Lagrangian ``L[S] - Tr_H[mu Tr_K S]``."""
    m = _choi_array(s, data)
    mu = linalg.as_hermitian(mu)
    if mu.shape != (data.dim_h, data.dim_h):
        raise InvalidArgumentError(f"multiplier shape {mu.shape} != ({data.dim_h}, {data.dim_h})")
    penalty = np.trace(mu @ linalg.partial_trace_k(m, data.dim_h, data.dim_k)).real
    base = log_likelihood(m, data)
    value = base.value - float(penalty)
    return LikelihoodValue(value, bool(np.isfinite(value)))


def r_operator(s, data: CountsDataset, normalized: bool = False) -> np.ndarray:
    """``R = sum_c (f_c / max(p_c, P_MIN)) A_c``; divided by ``sum f`` when ``normalized``."""
    m = _choi_array(s, data)
    r = kernels.r_matrix(m, data.design.effects, data.flat_counts, P_MIN)
    if normalized:
        total = data.total
        if total > 0:
            r = r / total
    return r
