"""Channel reconstruction methods.

``linear``
    Unconstrained least-squares inversion of the Born-rule model.
``maxlik-loose``
    Likelihood maximized over ``S = T^dagger T`` rescaled to ``Tr S = N``.
    Positivity and the single trace condition hold, but ``Tr_K S = 1_H``
    (N^2 real conditions) is not imposed and is generally violated.
``maxlik-simplex``
    Likelihood maximized over factors ``T`` pushed through
    :func:`cptp_retraction`, so every candidate is CPTP. The factor has
    ``(N K)^2`` real parameters; ``N^2`` of them are gauge directions that
    the retraction annihilates.
``maxlik-iterative``
    Fixed-point iteration ``S <- (mu^-1 (x) 1) R S R (mu^-1 (x) 1)`` with
    ``mu = (Tr_K[R S R])^(1/2)``; every iterate is trace preserving and a
    backtracking dilution step keeps the likelihood nondecreasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, linalg
from .channels import ChoiMatrix, CptpReport, verify_cptp
from .errors import DegenerateFactorError, InvalidArgumentError, NotInformationallyCompleteError
from .likelihood import P_MIN, log_likelihood, r_operator
from .optimize import SimplexResult, SolverConfig, nelder_mead
from .tomography import CountsDataset

METHODS = ("linear", "maxlik-loose", "maxlik-simplex", "maxlik-iterative")
TRACE_JSON_POINTS = 1000
MIN_DILUTION = 1e-4
WARM_START_FLOOR = 1e-6
# accepted likelihood drop per step, relative; absorbs round-off at the optimum
MONOTONE_SLACK = 1e-13


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    choi: ChoiMatrix
    method: str
    likelihood_trace: list = field(repr=False)
    final_mu: np.ndarray | None
    cptp_report: CptpReport = field(repr=False)
    converged: bool
    iterations_used: int

    @property
    def final_likelihood(self) -> float:
        return float(self.likelihood_trace[-1][1])

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "converged": self.converged,
            "iterations": self.iterations_used,
            "final_likelihood": self.final_likelihood,
            "likelihood_trace": [[int(i), float(v)] for i, v in downsample_trace(self.likelihood_trace)],
            "dim_in": self.choi.dim_h,
            "dim_out": self.choi.dim_k,
            "choi": linalg.matrix_to_json(self.choi.matrix),
            "mu": None if self.final_mu is None else linalg.matrix_to_json(self.final_mu),
            "cptp": self.cptp_report.to_json(),
        }


def downsample_trace(trace, max_points: int = TRACE_JSON_POINTS) -> list:
    """Thin a trace to at most ``max_points`` entries, keeping both ends."""
    trace = list(trace)
    if len(trace) <= max_points:
        return trace
    idx = np.unique(np.round(np.linspace(0, len(trace) - 1, max_points)).astype(int))
    return [trace[i] for i in idx]


def _result(s: np.ndarray, data, method, trace, mu, converged, iters, tp=False) -> ReconstructionResult:
    choi = ChoiMatrix(data.dim_h, data.dim_k, s)
    if tp:
        try:
            choi = ChoiMatrix(data.dim_h, data.dim_k, s, trace_preserving=True)
        except ValueError:
            pass
    return ReconstructionResult(
        choi=choi,
        method=method,
        likelihood_trace=trace,
        final_mu=mu,
        cptp_report=verify_cptp(choi),
        converged=converged,
        iterations_used=iters,
    )


# -- factor parameterization ---------------------------------------------------


def factor_from_params(params, d: int) -> np.ndarray:
    """Lower-triangular complex ``T``: real diagonal ``params[:d]``, then (re, im)
    pairs for the strictly lower entries in row-major order."""
    params = np.ascontiguousarray(params, dtype=float)
    if params.size != d * d:
        raise InvalidArgumentError(f"expected {d * d} factor parameters, got {params.size}")
    return kernels.factor_from_params(params, d)


def params_from_factor(t) -> np.ndarray:
    t = linalg.as_matrix(t)
    d = t.shape[0]
    off = t[np.tril_indices(d, -1)]
    return np.concatenate([np.real(np.diag(t)), np.column_stack([off.real, off.imag]).reshape(-1)])


def factor_from_psd(s) -> np.ndarray:
    """Lower-triangular ``T`` with real nonnegative diagonal and ``T^dagger T = S``.

    Works for singular ``S``: with ``S = Q^dagger Q`` from the eigen-decomposition,
    a QL factorization ``Q = W T`` gives ``T^dagger T = S``.
    """
    w, v = linalg.herm_eig(s)
    q = (v * np.sqrt(np.maximum(w, 0.0))).conj().T
    flip = q[:, ::-1]
    _, r = np.linalg.qr(flip)
    t = r[::-1, ::-1]
    diag = np.diag(t)
    phase = np.where(np.abs(diag) > 0, diag.conj() / np.where(np.abs(diag) > 0, np.abs(diag), 1), 1)
    return phase[:, None] * t


def cptp_retraction(t, dim_h: int | None = None, dim_k: int | None = None) -> ChoiMatrix:
    """Map a factor onto the trace-preserving set.

    ``S0 = T^dagger T``, ``rho = Tr_K S0 + 1e-12``, and
    ``S = (rho^-1/2 (x) 1) S0 (rho^-1/2 (x) 1)``. The result is flagged
    trace preserving when it passes that check (it fails only for factors
    whose ``Tr_K S0`` is singular).
    """
    t = linalg.as_matrix(t)
    d = t.shape[0]
    if dim_h is None or dim_k is None:
        root = int(round(np.sqrt(d)))
        dim_h, dim_k = (root, root) if dim_h is None and dim_k is None else (
            dim_h or d // dim_k, dim_k or d // dim_h)
    if t.shape != (dim_h * dim_k, dim_h * dim_k):
        raise InvalidArgumentError(f"factor shape {t.shape} does not match dims ({dim_h}, {dim_k})")
    s0 = t.conj().T @ t
    if not np.trace(s0).real > 0:
        raise DegenerateFactorError("factor has T^dagger T = 0")
    s = kernels.retract_gram(np.ascontiguousarray(s0), dim_h, dim_k)
    try:
        return ChoiMatrix(dim_h, dim_k, s, trace_preserving=True)
    except ValueError:
        return ChoiMatrix(dim_h, dim_k, s)


# -- linear inversion ----------------------------------------------------------


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal basis (under ``Tr[A B]``) of d x d Hermitian matrices."""
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=np.complex128)
        e[i, i] = 1
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j] = e[j, i] = 1 / np.sqrt(2)
            basis.append(e)
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j], e[j, i] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            basis.append(e)
    return np.array(basis)


def linear_inversion(data: CountsDataset) -> np.ndarray:
    """Least-squares Hermitian ``S`` for ``Tr[S A_c] ~ f_c / shots``."""
    d = data.dim_h * data.dim_k
    basis = hermitian_basis(d)
    a = data.design.effects.reshape(len(data.design.effects), -1)
    model = np.real(a.conj() @ basis.reshape(d * d, -1).T)
    sv = np.linalg.svd(model, compute_uv=False)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    if rank < d * d:
        raise NotInformationallyCompleteError(
            f"design not informationally complete (rank {rank} < {d * d})"
        )
    y = data.frequencies().reshape(-1)
    x, *_ = np.linalg.lstsq(model, y, rcond=None)
    return linalg.hermitize(np.einsum("b,bij->ij", x, basis))


def reconstruct_linear(data: CountsDataset, cfg: SolverConfig | None = None) -> ReconstructionResult:
    s = linear_inversion(data)
    ll = log_likelihood(s, data).value
    return _result(s, data, "linear", [(0, ll)], None, True, 1)


def _warm_start(data: CountsDataset, retract: bool) -> np.ndarray:
    d, n = data.dim_h * data.dim_k, data.dim_h
    try:
        s = linalg.psd_project(linear_inversion(data), WARM_START_FLOOR)
    except NotInformationallyCompleteError:
        return np.eye(d, dtype=np.complex128) * (n / d)
    s = s * (n / np.trace(s).real)
    if retract:
        s = kernels.retract_gram(np.ascontiguousarray(s), data.dim_h, data.dim_k)
    return s


# -- maximum likelihood --------------------------------------------------------


def _simplex_fit(data: CountsDataset, cfg: SolverConfig, retract: bool) -> tuple[SimplexResult, np.ndarray]:
    nh, nk = data.dim_h, data.dim_k
    effects, counts = data.design.effects, data.flat_counts
    objective_kernel = kernels.neg_loglik_retracted if retract else kernels.neg_loglik_loose

    def objective(x):
        return objective_kernel(x, effects, counts, nh, nk, P_MIN)

    x0 = params_from_factor(factor_from_psd(_warm_start(data, retract)))
    res = nelder_mead(objective, x0, cfg)
    g = kernels.gram_from_params(np.ascontiguousarray(res.x), nh * nk)
    if retract:
        s = kernels.retract_gram(g, nh, nk)
    else:
        s = g * (nh / np.trace(g).real)
    return res, s


def reconstruct_maxlik_loose(data: CountsDataset, cfg: SolverConfig | None = None) -> ReconstructionResult:
    """Maximize L over PSD ``S`` with ``Tr S = N`` only."""
    cfg = cfg or SolverConfig()
    res, s = _simplex_fit(data, cfg, retract=False)
    trace = [(i, -f) for i, f in res.trace]
    return _result(s, data, "maxlik-loose", trace, None, res.converged, res.iterations)


def reconstruct_maxlik_simplex(data: CountsDataset, cfg: SolverConfig | None = None) -> ReconstructionResult:
    """Maximize L over the CPTP set through the factor retraction."""
    cfg = cfg or SolverConfig()
    res, s = _simplex_fit(data, cfg, retract=True)
    trace = [(i, -f) for i, f in res.trace]
    return _result(s, data, "maxlik-simplex", trace, None, res.converged, res.iterations, tp=True)


def multiplier(s: np.ndarray, data: CountsDataset) -> np.ndarray:
    """``mu = (Tr_K[R S R])^(1/2)`` with the count-normalized R at ``s``."""
    r = r_operator(s, data, normalized=True)
    return linalg.psd_power(linalg.partial_trace_k(r @ s @ r, data.dim_h, data.dim_k), 0.5)


def fixed_point_step(s, data: CountsDataset) -> tuple[np.ndarray, np.ndarray]:
    """One undiluted update; returns ``(S', mu)``."""
    s = s.matrix if isinstance(s, ChoiMatrix) else np.asarray(s, dtype=np.complex128)
    r = r_operator(s, data, normalized=True)
    rsr = linalg.hermitize(r @ s @ r)
    reduced = linalg.partial_trace_k(rsr, data.dim_h, data.dim_k)
    mu = linalg.psd_power(reduced, 0.5)
    x = np.kron(linalg.psd_power(reduced, -0.5), np.eye(data.dim_k))
    return linalg.hermitize(x @ rsr @ x), mu


def reconstruct_maxlik_iterative(
    data: CountsDataset, cfg: SolverConfig | None = None, initial=None
) -> ReconstructionResult:
    """Multiplier fixed-point iteration with likelihood backtracking.

    Starts from the maximally mixed Choi matrix unless ``initial`` is given.
    Stops when the relative likelihood gain or the Frobenius step falls
    below tolerance; ``converged`` is False if the iteration cap is hit or
    no dilution of the step keeps the likelihood from decreasing.
    """
    cfg = cfg or SolverConfig()
    nh, nk = data.dim_h, data.dim_k
    d = nh * nk
    if initial is None:
        s = np.eye(d, dtype=np.complex128) / nk
    else:
        s = initial.matrix if isinstance(initial, ChoiMatrix) else linalg.as_hermitian(initial)
        s = np.array(s, dtype=np.complex128)
    ll = log_likelihood(s, data).value
    trace = [(0, ll)]
    converged = False
    it = 0
    while it < cfg.max_iterations:
        it += 1
        full, _ = fixed_point_step(s, data)
        alpha = cfg.dilution_init
        while True:
            cand = full if alpha >= 1.0 else (1 - alpha) * s + alpha * full
            cand_ll = log_likelihood(cand, data).value
            if cand_ll >= ll - MONOTONE_SLACK * abs(ll):
                break
            alpha *= 0.5
            if alpha < MIN_DILUTION:
                cand = None
                break
        if cand is None:
            it -= 1
            break
        step = np.linalg.norm(cand - s)
        gain = cand_ll - ll
        s, ll = cand, cand_ll
        trace.append((it, ll))
        if abs(gain) <= cfg.tol_likelihood * abs(ll) or step <= cfg.tol_step:
            converged = True
            break
    return _result(s, data, "maxlik-iterative", trace, multiplier(s, data), converged, it, tp=True)


SOLVERS = {
    "linear": reconstruct_linear,
    "maxlik-loose": reconstruct_maxlik_loose,
    "maxlik-simplex": reconstruct_maxlik_simplex,
    "maxlik-iterative": reconstruct_maxlik_iterative,
}


def reconstruct(data: CountsDataset, method: str, cfg: SolverConfig | None = None) -> ReconstructionResult:
    try:
        solver = SOLVERS[method]
    except KeyError:
        raise InvalidArgumentError(f"unknown method {method!r}; choose from {', '.join(METHODS)}") from None
    return solver(data, cfg)
