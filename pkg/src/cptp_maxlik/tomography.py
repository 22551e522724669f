"""Tomography designs, Born-rule probabilities and seeded count simulation.

Sampling uses numpy's PCG64 bit generator. Every (input j, setting s) pair
draws from its own substream seeded by ``SeedSequence([seed, j, s])``, so
the counts of a cell do not depend on how many other cells are sampled or
in which order.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import linalg
from .channels import ChoiMatrix
from .errors import InvalidArgumentError

RNG_NAME = "numpy-PCG64/SeedSequence([seed, input, setting])"
STATE_TOL = 1e-10


def _ket(*amps) -> np.ndarray:
    v = np.array(amps, dtype=np.complex128)
    return v / np.linalg.norm(v)


def _proj(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


KET_0 = _ket(1, 0)
KET_1 = _ket(0, 1)
KET_PLUS = _ket(1, 1)
KET_MINUS = _ket(1, -1)
KET_PLUS_I = _ket(1, 1j)
KET_MINUS_I = _ket(1, -1j)


@dataclass(frozen=True, eq=False)
class TomographyDesign:
    """Input states ``rho_j`` on H and projective/POVM settings on K.

    Every setting must have the same number of outcomes so counts form a
    dense ``(inputs, settings, outcomes)`` tensor.
    """

    dim_h: int
    dim_k: int
    inputs: tuple
    settings: tuple
    name: str = "custom"

    def __post_init__(self):
        inputs = tuple(linalg.as_hermitian(r) for r in self.inputs)
        settings = tuple(tuple(linalg.as_hermitian(e) for e in s) for s in self.settings)
        if not inputs or not settings:
            raise InvalidArgumentError("a design needs at least one input and one setting")
        for r in inputs:
            if r.shape != (self.dim_h, self.dim_h):
                raise InvalidArgumentError(f"input state shape {r.shape} != dim_h {self.dim_h}")
            if abs(np.trace(r) - 1) > STATE_TOL or np.linalg.eigvalsh(r)[0] < -STATE_TOL:
                raise InvalidArgumentError("input states must be PSD with unit trace")
        n_out = len(settings[0])
        for s in settings:
            if len(s) != n_out:
                raise InvalidArgumentError("all settings must have the same number of outcomes")
            for e in s:
                if e.shape != (self.dim_k, self.dim_k):
                    raise InvalidArgumentError(f"effect shape {e.shape} != dim_k {self.dim_k}")
                if np.linalg.eigvalsh(e)[0] < -STATE_TOL:
                    raise InvalidArgumentError("POVM effects must be PSD")
            if np.max(np.abs(sum(s) - np.eye(self.dim_k))) > STATE_TOL:
                raise InvalidArgumentError("the effects of each setting must sum to the identity")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "settings", settings)

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.inputs), len(self.settings), len(self.settings[0])

    @cached_property
    def effects(self) -> np.ndarray:
        """Joint effects ``rho_j^T (x) Pi_k`` flattened in (input, setting, outcome) order."""
        ops = [np.kron(r.T, e) for r in self.inputs for s in self.settings for e in s]
        out = np.ascontiguousarray(np.array(ops, dtype=np.complex128))
        out.setflags(write=False)
        return out

    def gram_rank(self, rtol: float = 1e-10) -> int:
        """Dimension of the real span of the joint effects."""
        a = self.effects.reshape(len(self.effects), -1)
        # real inner products of Hermitian operators
        gram = np.real(a.conj() @ a.T)
        w = np.linalg.eigvalsh(gram)
        return int(np.sum(w > rtol * max(w[-1], 1.0)))

    def is_informationally_complete(self) -> bool:
        return self.gram_rank() == (self.dim_h * self.dim_k) ** 2

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "dim_in": self.dim_h,
            "dim_out": self.dim_k,
            "inputs": [linalg.matrix_to_json(r) for r in self.inputs],
            "settings": [[linalg.matrix_to_json(e) for e in s] for s in self.settings],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TomographyDesign":
        try:
            return cls(
                int(obj["dim_in"]),
                int(obj["dim_out"]),
                tuple(linalg.matrix_from_json(r) for r in obj["inputs"]),
                tuple(tuple(linalg.matrix_from_json(e) for e in s) for s in obj["settings"]),
                name=str(obj.get("name", "custom")),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidArgumentError(f"malformed design JSON: {exc}") from exc


def _pauli_settings() -> tuple:
    return (
        (_proj(KET_PLUS), _proj(KET_MINUS)),
        (_proj(KET_PLUS_I), _proj(KET_MINUS_I)),
        (_proj(KET_0), _proj(KET_1)),
    )


def standard_qubit_design() -> TomographyDesign:
    """Inputs |0>, |1>, |+>, |+i>; Pauli X, Y, Z projective measurements."""
    inputs = tuple(_proj(v) for v in (KET_0, KET_1, KET_PLUS, KET_PLUS_I))
    return TomographyDesign(2, 2, inputs, _pauli_settings(), name="qubit-standard")


def balanced_qubit_design() -> TomographyDesign:
    """All six Pauli eigenstates as inputs; Pauli X, Y, Z measurements.

    The inputs average to the maximally mixed state, which is the condition
    under which a trace-only constrained fit is unbiased on exact data.
    """
    kets = (KET_0, KET_1, KET_PLUS, KET_MINUS, KET_PLUS_I, KET_MINUS_I)
    return TomographyDesign(2, 2, tuple(_proj(v) for v in kets), _pauli_settings(), name="qubit-balanced")


DESIGN_PRESETS = {
    "qubit-standard": standard_qubit_design,
    "qubit-balanced": balanced_qubit_design,
}


def preset_design(name: str) -> TomographyDesign:
    try:
        return DESIGN_PRESETS[name]()
    except KeyError:
        raise InvalidArgumentError(
            f"unknown design preset {name!r}; choose from {', '.join(DESIGN_PRESETS)}"
        ) from None


def exact_probabilities(s: ChoiMatrix | np.ndarray, design: TomographyDesign) -> np.ndarray:
    """Born-rule probabilities ``p[j, s, k] = Tr[S (rho_j^T (x) Pi_k)]``.

    Values within 1e-12 below zero are clamped to zero.
    """
    m = s.matrix if isinstance(s, ChoiMatrix) else linalg.as_matrix(s)
    d = design.dim_h * design.dim_k
    if m.shape != (d, d):
        raise InvalidArgumentError(f"Choi shape {m.shape} does not match design dimension {d}")
    a = design.effects
    p = np.real(np.einsum("cab,ab->c", a.conj(), m))
    p = np.where((p < 0) & (p >= -1e-12), 0.0, p)
    return p.reshape(design.shape)


def multinomial_counts(p, shots, seed: int) -> np.ndarray:
    """Multinomial draw per (input, setting) row of a ``(J, S, K)`` probability tensor."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 3:
        raise InvalidArgumentError("probability tensor must have shape (inputs, settings, outcomes)")
    shots_arr = np.broadcast_to(np.asarray(shots, dtype=np.int64), p.shape[:2])
    if np.any(shots_arr < 1):
        raise InvalidArgumentError("shots must be at least 1")
    if np.any(p < -1e-12):
        raise InvalidArgumentError(f"negative probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    sums = p.sum(axis=2)
    if np.any(np.abs(sums - 1.0) > 1e-9):
        raise InvalidArgumentError("each (input, setting) distribution must sum to 1")
    out = np.zeros(p.shape, dtype=np.int64)
    for j in range(p.shape[0]):
        for s in range(p.shape[1]):
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, j, s])))
            out[j, s] = rng.multinomial(int(shots_arr[j, s]), p[j, s] / sums[j, s])
    return out


@dataclass(frozen=True, eq=False)
class CountsDataset:
    """Observed counts aligned with a design.

    ``counts`` is float so noiseless datasets (counts = shots * p) can be
    represented; sampled datasets hold integral values. ``seed`` is None
    for noiseless data.
    """

    design: TomographyDesign
    counts: np.ndarray = field(repr=False)
    shots: np.ndarray = field(repr=False)
    seed: int | None = None

    def __post_init__(self):
        c = np.array(self.counts, dtype=float)
        if c.shape != self.design.shape:
            raise InvalidArgumentError(f"counts shape {c.shape} != design shape {self.design.shape}")
        if np.any(c < 0):
            raise InvalidArgumentError("counts must be nonnegative")
        sh = np.array(np.broadcast_to(np.asarray(self.shots, dtype=np.int64), c.shape[:2]))
        if np.any(np.abs(c.sum(axis=2) - sh) > 1e-6 * np.maximum(sh, 1)):
            raise InvalidArgumentError("counts in every (input, setting) row must sum to shots")
        c.setflags(write=False)
        sh.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "shots", sh)

    @property
    def exact(self) -> bool:
        return self.seed is None

    @property
    def dim_h(self) -> int:
        return self.design.dim_h

    @property
    def dim_k(self) -> int:
        return self.design.dim_k

    @cached_property
    def flat_counts(self) -> np.ndarray:
        out = np.ascontiguousarray(self.counts.reshape(-1))
        out.setflags(write=False)
        return out

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots[:, :, None]

    def to_json(self) -> dict:
        uniform = bool(np.all(self.shots == self.shots.flat[0]))
        counts = self.counts.tolist()
        if not self.exact:
            counts = [[[int(x) for x in row] for row in block] for block in self.counts]
        return {
            "design": self.design.to_json(),
            "shots": int(self.shots.flat[0]) if uniform else self.shots.tolist(),
            "seed": self.seed,
            "exact": self.exact,
            "rng": RNG_NAME,
            "counts": counts,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CountsDataset":
        try:
            design = TomographyDesign.from_json(obj["design"])
            seed = obj.get("seed")
            return cls(design, np.asarray(obj["counts"], dtype=float), obj["shots"],
                       None if seed is None else int(seed))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidArgumentError):
                raise
            raise InvalidArgumentError(f"malformed dataset JSON: {exc}") from exc

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "setting", "k", "count", "shots"])
        J, S, K = self.counts.shape
        for j in range(J):
            for s in range(S):
                for k in range(K):
                    c = self.counts[j, s, k]
                    w.writerow([j, s, k, int(c) if not self.exact else repr(float(c)), int(self.shots[j, s])])
        return buf.getvalue()


def sample_counts(p, shots: int, seed: int, design: TomographyDesign) -> CountsDataset:
    """Seeded multinomial dataset for probability tensor ``p`` on ``design``."""
    return CountsDataset(design, multinomial_counts(p, shots, seed), shots, seed)


def simulate(choi: ChoiMatrix, design: TomographyDesign, shots: int, seed: int) -> CountsDataset:
    return sample_counts(exact_probabilities(choi, design), shots, seed, design)


def exact_dataset(choi: ChoiMatrix, design: TomographyDesign, shots: int) -> CountsDataset:
    """Noiseless data: counts equal ``shots * p`` without rounding."""
    if shots < 1:
        raise InvalidArgumentError("shots must be at least 1")
    return CountsDataset(design, shots * exact_probabilities(choi, design), shots, None)
