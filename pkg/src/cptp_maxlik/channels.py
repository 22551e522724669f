"""Choi and Kraus representations of qubit-scale quantum channels.

A channel E from operators on H (dim N) to operators on K (dim K) is stored
as its Choi matrix ``S = sum_{h,h'} |h><h'| (x) E(|h><h'|)`` on H (x) K,
normalized so that ``Tr S = N`` and, for trace-preserving maps,
``Tr_K S = 1_H``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DomainError, InvalidArgumentError

PSD_TOL = 1e-8
TP_TOL = 1e-8
KRAUS_TOL = 1e-10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY_2 = np.eye(2, dtype=np.complex128)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi matrix of a map from H (dim ``dim_h``) to K (dim ``dim_k``).

    Only instances flagged ``trace_preserving`` are checked against both
    CPTP conditions on construction. Unflagged instances are merely
    Hermitian; reconstructions that may violate positivity or trace
    preservation are carried this way so the violation can be reported.
    """

    dim_h: int
    dim_k: int
    matrix: np.ndarray = field(repr=False)
    trace_preserving: bool = False

    def __post_init__(self):
        d = self.dim_h * self.dim_k
        if self.dim_h < 1 or self.dim_k < 1:
            raise InvalidArgumentError("channel dimensions must be positive")
        m = linalg.as_hermitian(self.matrix)
        if m.shape != (d, d):
            raise InvalidArgumentError(
                f"Choi matrix must be {d}x{d} for dims ({self.dim_h}, {self.dim_k}), got {m.shape}"
            )
        object.__setattr__(self, "matrix", _frozen(m))
        if self.trace_preserving:
            w = np.linalg.eigvalsh(m)
            if w[0] < -PSD_TOL * max(np.trace(m).real, 1.0):
                raise DomainError(f"Choi matrix is not PSD: eigenvalue {w[0]:.3e}")
            dev = np.linalg.norm(self.reduced() - np.eye(self.dim_h))
            if dev > TP_TOL:
                raise DomainError(f"Choi matrix is not trace preserving: |Tr_K S - 1| = {dev:.3e}")

    @property
    def dim(self) -> int:
        return self.dim_h * self.dim_k

    def reduced(self) -> np.ndarray:
        """``Tr_K S``, an operator on the input space."""
        return linalg.partial_trace_k(self.matrix, self.dim_h, self.dim_k)


@dataclass(frozen=True)
class KrausSet:
    """Kraus operators ``A_m``, each of shape ``(dim_k, dim_h)``."""

    dim_h: int
    dim_k: int
    operators: tuple

    def __post_init__(self):
        ops = tuple(_frozen(linalg.as_matrix(a)) for a in self.operators)
        if not ops:
            raise InvalidArgumentError("a Kraus set needs at least one operator")
        for a in ops:
            if a.shape != (self.dim_k, self.dim_h):
                raise InvalidArgumentError(
                    f"Kraus operator shape {a.shape} != ({self.dim_k}, {self.dim_h})"
                )
        object.__setattr__(self, "operators", ops)

    def completeness_error(self) -> float:
        acc = sum(a.conj().T @ a for a in self.operators)
        return float(np.linalg.norm(acc - np.eye(self.dim_h)))

    def is_complete(self, tol: float = KRAUS_TOL) -> bool:
        return self.completeness_error() <= tol


@dataclass(frozen=True)
class CptpReport:
    """Constraint diagnostics for a Choi matrix.

    ``deviation`` is ``Tr_K S - 1_H``; ``input_totals`` is its diagonal
    plus one, i.e. the total output probability for each computational
    input basis state.
    """

    min_eigenvalue: float
    deviation: np.ndarray = field(repr=False)
    d_inf: float
    d_fro: float
    input_totals: tuple
    trace: float
    tol: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "min_eigenvalue": self.min_eigenvalue,
            "d_inf": self.d_inf,
            "d_fro": self.d_fro,
            "input_totals": list(self.input_totals),
            "trace": self.trace,
            "tol": self.tol,
            "pass": self.passed,
            "deviation": linalg.matrix_to_json(self.deviation),
        }


def choi_from_kraus(kraus: KrausSet) -> ChoiMatrix:
    """Build ``S = sum_m vec(A_m) vec(A_m)^dagger`` with input-major vec."""
    d = kraus.dim_h * kraus.dim_k
    s = np.zeros((d, d), dtype=np.complex128)
    for a in kraus.operators:
        # vec index h*dim_k + k holds A[k, h]
        v = a.T.reshape(-1)
        s += np.outer(v, v.conj())
    return ChoiMatrix(kraus.dim_h, kraus.dim_k, s, trace_preserving=kraus.is_complete())


def apply_channel(s: ChoiMatrix, rho) -> np.ndarray:
    """Channel action ``rho -> Tr_H[(rho^T (x) 1_K) S]``."""
    r = linalg.as_hermitian(rho)
    if r.shape != (s.dim_h, s.dim_h):
        raise InvalidArgumentError(f"input state shape {r.shape} does not match dim_h={s.dim_h}")
    if abs(np.trace(r) - 1.0) > 1e-10:
        raise InvalidArgumentError("input state must have unit trace")
    t = s.matrix.reshape(s.dim_h, s.dim_k, s.dim_h, s.dim_k)
    # out[k, k'] = sum_{h,h'} rho[h, h'] S[(h,k),(h',k')]
    out = np.einsum("ab,akbl->kl", r, t)
    return linalg.hermitize(out)


def verify_cptp(s: ChoiMatrix, tol: float = 1e-8) -> CptpReport:
    """Report positivity and trace-preservation violations; never raises on bad channels."""
    m = s.matrix
    min_eig = float(np.linalg.eigvalsh(m)[0])
    reduced = s.reduced()
    dev = reduced - np.eye(s.dim_h)
    d_inf = float(np.max(np.abs(dev)))
    d_fro = float(np.linalg.norm(dev))
    totals = tuple(float(x) for x in np.real(np.diag(reduced)))
    return CptpReport(
        min_eigenvalue=min_eig,
        deviation=_frozen(dev),
        d_inf=d_inf,
        d_fro=d_fro,
        input_totals=totals,
        trace=float(np.trace(m).real),
        tol=float(tol),
        passed=bool(min_eig >= -tol and d_inf <= tol),
    )


def _fidelity_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = linalg.herm_eig(m)
    top = float(w[-1])
    if w[0] < -linalg.PSD_DOMAIN_TOL * max(top, 0.0):
        raise DomainError(f"matrix is not positive semidefinite: eigenvalue {w[0]:.6e}")
    # eigenvalues at round-off level are treated as exact zeros
    w = np.where(w > 1e-14 * w.size * top, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def process_fidelity(a: ChoiMatrix, b: ChoiMatrix) -> float:
    """Uhlmann fidelity of the trace-normalized Choi matrices."""
    if (a.dim_h, a.dim_k) != (b.dim_h, b.dim_k):
        raise InvalidArgumentError("process_fidelity needs Choi matrices of equal dimensions")
    x, y = a.matrix, b.matrix
    tx, ty = np.trace(x).real, np.trace(y).real
    if tx <= 0 or ty <= 0:
        raise DomainError("Choi matrices must have positive trace")
    # nuclear norm of sqrt(X) sqrt(Y); singular values stay accurate near rank deficiency
    nuc = np.linalg.svd(_fidelity_sqrt(x) @ _fidelity_sqrt(y), compute_uv=False).sum()
    f = nuc**2 / (tx * ty)
    return float(min(max(f, 0.0), 1.0))


# -- presets -----------------------------------------------------------------


def identity_kraus(dim: int = 2) -> KrausSet:
    return KrausSet(dim, dim, (np.eye(dim),))


def bit_flip_kraus(p: float) -> KrausSet:
    _check_prob(p, "bit-flip")
    return KrausSet(2, 2, (np.sqrt(1 - p) * IDENTITY_2, np.sqrt(p) * PAULI_X))


def phase_flip_kraus(p: float) -> KrausSet:
    _check_prob(p, "phase-flip")
    return KrausSet(2, 2, (np.sqrt(1 - p) * IDENTITY_2, np.sqrt(p) * PAULI_Z))


def depolarizing_kraus(p: float) -> KrausSet:
    """``rho -> (1 - p) rho + p 1/2``; ``p = 1`` is completely depolarizing."""
    _check_prob(p, "depolarizing")
    return KrausSet(
        2,
        2,
        (
            np.sqrt(1 - 3 * p / 4) * IDENTITY_2,
            np.sqrt(p / 4) * PAULI_X,
            np.sqrt(p / 4) * PAULI_Y,
            np.sqrt(p / 4) * PAULI_Z,
        ),
    )


def amplitude_damping_kraus(gamma: float) -> KrausSet:
    _check_prob(gamma, "amplitude-damping")
    a0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=np.complex128)
    a1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=np.complex128)
    return KrausSet(2, 2, (a0, a1))


def random_cptp(seed: int, dim_h: int = 2, dim_k: int = 2) -> ChoiMatrix:
    """Seeded random CPTP map: Gaussian factor pushed through the TP retraction."""
    from .solvers import cptp_retraction

    rng = np.random.default_rng(seed)
    d = dim_h * dim_k
    t = np.tril(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return cptp_retraction(t, dim_h, dim_k)


def _check_prob(p: float, name: str) -> None:
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"{name} parameter must lie in [0, 1], got {p}")


PRESET_NAMES = ("identity", "bit-flip", "phase-flip", "depolarizing", "amplitude-damping", "random")


def preset_channel(spec: str) -> ChoiMatrix:
    """Resolve ``name[:param]`` (e.g. ``amplitude-damping:0.3``, ``random:7``)."""
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    try:
        if name == "identity":
            return choi_from_kraus(identity_kraus())
        if name == "random":
            return random_cptp(int(arg) if arg else 0)
        value = float(arg)
    except ValueError as exc:
        raise InvalidArgumentError(f"bad channel preset parameter in {spec!r}") from exc
    builders = {
        "bit-flip": bit_flip_kraus,
        "phase-flip": phase_flip_kraus,
        "depolarizing": depolarizing_kraus,
        "amplitude-damping": amplitude_damping_kraus,
    }
    if name not in builders:
        raise InvalidArgumentError(
            f"unknown channel preset {name!r}; choose from {', '.join(PRESET_NAMES)}"
        )
    return choi_from_kraus(builders[name](value))


# -- JSON --------------------------------------------------------------------


def channel_to_json(obj) -> dict:
    if isinstance(obj, ChoiMatrix):
        return {
            "dim_in": obj.dim_h,
            "dim_out": obj.dim_k,
            "repr": "choi",
            "choi": linalg.matrix_to_json(obj.matrix),
        }
    if isinstance(obj, KrausSet):
        return {
            "dim_in": obj.dim_h,
            "dim_out": obj.dim_k,
            "repr": "kraus",
            "kraus": [linalg.matrix_to_json(a) for a in obj.operators],
        }
    raise InvalidArgumentError(f"cannot encode {type(obj).__name__} as a channel")


def channel_from_json(obj: dict):
    """Decode channel JSON into a ``ChoiMatrix`` or ``KrausSet`` (no CPTP checks)."""
    try:
        n, k, rep = int(obj["dim_in"]), int(obj["dim_out"]), obj["repr"]
        if rep == "choi":
            return ChoiMatrix(n, k, linalg.matrix_from_json(obj["choi"]))
        if rep == "kraus":
            return KrausSet(n, k, tuple(linalg.matrix_from_json(a) for a in obj["kraus"]))
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError(f"malformed channel JSON: {exc}") from exc
    raise InvalidArgumentError(f"unknown channel representation {rep!r}")


def to_choi(obj) -> ChoiMatrix:
    return choi_from_kraus(obj) if isinstance(obj, KrausSet) else obj
