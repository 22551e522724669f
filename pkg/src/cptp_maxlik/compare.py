"""Cross-method comparison runs and the closure-relation diagnostic."""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import linalg
from .channels import ChoiMatrix, process_fidelity, verify_cptp
from .errors import DomainError, InvalidArgumentError, NotApplicableError
from .likelihood import r_operator
from .optimize import SolverConfig
from .solvers import METHODS, ReconstructionResult, reconstruct
from .tomography import CountsDataset, TomographyDesign, exact_dataset, simulate

EXACT = "exact"
EXACT_SHOTS = 10**6
CSV_COLUMNS = (
    "method", "shots", "seed", "d_inf", "d_fro", "min_eig", "fidelity",
    "likelihood", "converged", "iterations", "wall_ms",
)


def closure_residual(result: ReconstructionResult, data: CountsDataset) -> float:
    """Relative residual of the closure relation at ``result.choi``.

    With ``Rt = (mu^-1/2 (x) 1) R_norm (mu^-1/2 (x) 1)`` and
    ``St = (mu^1/2 (x) 1) S (mu^1/2 (x) 1)``, returns
    ``||Rt St - St||_F / ||St||_F``. It vanishes exactly when
    ``R S = (mu (x) 1) S``, i.e. when the rescaled effects resolve the
    identity on the support of the estimate.
    """
    if result.final_mu is None:
        raise NotApplicableError(f"method {result.method!r} carries no multiplier matrix")
    s = result.choi.matrix
    nk = result.choi.dim_k
    mu = result.final_mu
    inv_half = np.kron(linalg.psd_power(mu, -0.5), np.eye(nk))
    half = np.kron(linalg.psd_power(mu, 0.5), np.eye(nk))
    rt = inv_half @ r_operator(s, data, normalized=True) @ inv_half
    st = half @ s @ half
    return float(np.linalg.norm(rt @ st - st) / np.linalg.norm(st))


@dataclass(frozen=True)
class RunRecord:
    method: str
    shots: int | str
    seed: int | None
    d_inf: float
    d_fro: float
    min_eig: float
    fidelity: float
    likelihood: float
    converged: bool
    iterations: int
    wall_ms: float
    error: str | None = None

    @property
    def key(self) -> tuple:
        return (self.method, self.shots, self.seed)


@dataclass(frozen=True)
class MethodSummary:
    method: str
    runs: int
    failures: int
    mean_d_inf: float
    median_d_inf: float
    max_d_inf: float
    mean_fidelity: float
    mean_likelihood: float
    convergence_rate: float


def _nan_stat(fn, values) -> float:
    v = np.asarray([x for x in values if np.isfinite(x)], dtype=float)
    return float(fn(v)) if v.size else float("nan")


def summarize(method: str, records) -> MethodSummary:
    recs = [r for r in records if r.method == method]
    ok = [r for r in recs if r.error is None]
    d = [r.d_inf for r in ok]
    return MethodSummary(
        method=method,
        runs=len(recs),
        failures=len(recs) - len(ok),
        mean_d_inf=_nan_stat(np.mean, d),
        median_d_inf=_nan_stat(np.median, d),
        max_d_inf=_nan_stat(np.max, d),
        mean_fidelity=_nan_stat(np.mean, [r.fidelity for r in ok]),
        mean_likelihood=_nan_stat(np.mean, [r.likelihood for r in ok]),
        convergence_rate=float(np.mean([r.converged for r in ok])) if ok else float("nan"),
    )


@dataclass(eq=False)
class ComparisonReport:
    channel: str
    design: str
    shots_list: list
    seeds: list
    records: list
    results: dict = field(default_factory=dict, repr=False)

    @property
    def summaries(self) -> dict:
        methods = [m for m in METHODS if any(r.method == m for r in self.records)]
        return {m: summarize(m, self.records) for m in methods}

    def result(self, method: str, shots, seed) -> ReconstructionResult:
        """Raw reconstruction behind a record (only for reports built in this process)."""
        return self.results[(method, shots, seed)]

    def record(self, method: str, shots, seed) -> RunRecord:
        for r in self.records:
            if r.key == (method, shots, seed):
                return r
        raise KeyError((method, shots, seed))

    def median_d_inf_by_shots(self) -> dict:
        out = {}
        for shots in self.shots_list:
            for m in METHODS:
                vals = [r.d_inf for r in self.records
                        if r.method == m and r.shots == shots and r.error is None]
                if vals:
                    out[(m, shots)] = float(np.median(vals))
        return out

    def to_json(self) -> dict:
        return {
            "channel": self.channel,
            "design": self.design,
            "shots_list": list(self.shots_list),
            "seeds": list(self.seeds),
            "records": [_json_safe(asdict(r)) for r in self.records],
            "summaries": {m: _json_safe(asdict(s)) for m, s in self.summaries.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ComparisonReport":
        return cls(
            channel=obj["channel"],
            design=obj["design"],
            shots_list=list(obj["shots_list"]),
            seeds=list(obj["seeds"]),
            records=[RunRecord(**_from_json_safe(r)) for r in obj["records"]],
        )

    def to_csv(self, include_wall: bool = True) -> str:
        cols = [c for c in CSV_COLUMNS if include_wall or c != "wall_ms"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.records:
            row = asdict(r)
            w.writerow([_csv_value(row[c]) for c in cols])
        return buf.getvalue()

    def plot_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["shots", "method", "median_d_inf"])
        for (m, shots), v in self.median_d_inf_by_shots().items():
            w.writerow([shots, m, repr(v)])
        return buf.getvalue()

    def table(self) -> str:
        """Per-method median trace-preservation violation, one column per shot count."""
        by = self.median_d_inf_by_shots()
        head = f"{'method':<18}" + "".join(f"{str(s):>16}" for s in self.shots_list)
        lines = ["median |Tr_K S - 1_H|_inf", head]
        for m in METHODS:
            cells = [by.get((m, s)) for s in self.shots_list]
            if all(c is None for c in cells):
                continue
            lines.append(f"{m:<18}" + "".join(
                f"{'-' if c is None else format(c, '.9g'):>16}" for c in cells))
        return "\n".join(lines)


_FLOAT_FIELDS = ("d_inf", "d_fro", "min_eig", "fidelity", "likelihood", "wall_ms")


def _json_safe(row: dict) -> dict:
    # strict JSON has no NaN; undefined metrics are written as null
    return {k: None if isinstance(v, float) and not np.isfinite(v) else v for k, v in row.items()}


def _from_json_safe(row: dict) -> dict:
    return {k: float("nan") if k in _FLOAT_FIELDS and v is None else v for k, v in row.items()}


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return v


def _run_cell(args):
    truth, design, shots, seed, cfg, methods = args
    if shots == EXACT:
        data = exact_dataset(truth, design, EXACT_SHOTS)
    else:
        data = simulate(truth, design, int(shots), int(seed))
    records, results = [], {}
    for method in methods:
        t0 = time.perf_counter()
        try:
            res = reconstruct(data, method, cfg)
        except Exception as exc:  # recorded per cell, never aborts the matrix
            nan = float("nan")
            records.append(RunRecord(method, shots, seed, nan, nan, nan, nan, nan, False, 0,
                                     (time.perf_counter() - t0) * 1e3, f"{type(exc).__name__}: {exc}"))
            continue
        wall = (time.perf_counter() - t0) * 1e3
        rep = res.cptp_report
        try:
            fid = process_fidelity(res.choi, truth)
        except DomainError:
            fid = float("nan")
        records.append(RunRecord(method, shots, seed, rep.d_inf, rep.d_fro, rep.min_eigenvalue, fid,
                                 res.final_likelihood, res.converged, res.iterations_used, wall))
        results[(method, shots, seed)] = res
    return records, results


def default_workers() -> int:
    env = os.environ.get("CPTP_MAXLIK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidArgumentError("CPTP_MAXLIK_THREADS must be an integer") from None
    return os.cpu_count() or 1


def compare_methods(
    truth: ChoiMatrix,
    design: TomographyDesign,
    shots_list,
    seeds,
    cfg: SolverConfig | None = None,
    *,
    methods=METHODS,
    channel_id: str = "custom",
    workers: int | None = None,
) -> ComparisonReport:
    """Run every method on identical data for each (shots, seed) cell.

    ``shots_list`` entries are positive integers or ``"exact"`` (noiseless
    counts at 10^6 shots; run once with seed None). The output is a pure
    function of the inputs apart from the ``wall_ms`` fields.
    """
    cfg = cfg or SolverConfig()
    if not verify_cptp(truth, 1e-8).passed:
        raise InvalidArgumentError("truth channel must be CPTP to 1e-8")
    cells = []
    for shots in shots_list:
        if shots == EXACT:
            cells.append((EXACT, None))
        else:
            if int(shots) < 1:
                raise InvalidArgumentError("shots must be positive")
            cells.extend((int(shots), int(seed)) for seed in seeds)
    jobs = [(truth, design, shots, seed, cfg, tuple(methods)) for shots, seed in cells]
    workers = default_workers() if workers is None else max(1, workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            outputs = list(pool.map(_run_cell, jobs))
    else:
        outputs = [_run_cell(job) for job in jobs]
    records, results = [], {}
    for recs, res in outputs:
        records.extend(recs)
        results.update(res)
    return ComparisonReport(
        channel=channel_id,
        design=design.name,
        shots_list=[s if s == EXACT else int(s) for s in shots_list],
        seeds=[int(s) for s in seeds],
        records=records,
        results=results,
    )
