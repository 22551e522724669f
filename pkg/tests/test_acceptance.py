"""Acceptance criteria, one test per criterion.

Each criterion is a plain function returning ``(passed, detail)`` so the
module also runs as a script (``python3 tests/test_acceptance.py``) and
prints one PASS/FAIL line per criterion.
"""

import functools
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from conftest import ACCEPTANCE_LINES  # noqa: E402
from cptp_maxlik import channels, compare, likelihood, linalg, solvers, tomography  # noqa: E402
from cptp_maxlik.channels import KrausSet  # noqa: E402

AD = "amplitude-damping:0.3"
SEEDS_C1 = list(range(20))
TRUTHS_C2 = ("identity", "bit-flip:0.25", AD)
ORACLE_REL = 1e-9

# iterative traces gathered from every acceptance run, for criterion 4
ITERATIVE_TRACES = {}


def _record_traces(tag, results):
    for key, res in results.items():
        if res.method == "maxlik-iterative":
            ITERATIVE_TRACES[(tag,) + tuple(key)] = res.likelihood_trace


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


# -- criterion 1 and 9 ---------------------------------------------------------


def _enforcement_run():
    truth = channels.preset_channel(AD)
    design = tomography.standard_qubit_design()
    t0 = time.perf_counter()
    report = compare.compare_methods(truth, design, [1000], SEEDS_C1, channel_id=AD)
    return report, time.perf_counter() - t0


@functools.lru_cache(maxsize=None)
def enforcement_report():
    report, elapsed = _enforcement_run()
    _record_traces("c1", report.results)
    return report, elapsed


def criterion_1():
    report, elapsed = enforcement_report()
    rec = {m: [report.record(m, 1000, s) for s in SEEDS_C1] for m in solvers.METHODS}
    errors = [r.error for rs in rec.values() for r in rs if r.error and r.method != "linear"]
    loose_median = float(np.median([r.d_inf for r in rec["maxlik-loose"]]))
    worst = {m: max(r.d_inf for r in rec[m]) for m in ("maxlik-iterative", "maxlik-simplex")}
    # per-input totals of the median loose run: opposite-signed deviations of order 1e-3 .. 1e-2
    order = np.argsort([r.d_inf for r in rec["maxlik-loose"]])
    mid = rec["maxlik-loose"][order[len(order) // 2]].seed
    totals = report.result("maxlik-loose", 1000, mid).cptp_report.input_totals
    dev = np.asarray(totals) - 1
    totals_ok = bool(1e-3 <= np.abs(dev).max() <= 5e-2 and dev.min() < 0 < dev.max())
    passed = (not errors and loose_median >= 1e-3 and all(v <= 1e-7 for v in worst.values())
              and totals_ok and elapsed <= 300)
    detail = (f"loose median d_inf={loose_median:.3e}, iterative max={worst['maxlik-iterative']:.1e}, "
              f"simplex max={worst['maxlik-simplex']:.1e}, loose totals (seed {mid})="
              f"{totals[0]:.9f}/{totals[1]:.9f} vs anchor 0.995163231/1.006669754, {elapsed:.1f}s")
    return passed, detail


def criterion_9():
    first, _ = enforcement_report()
    again, _ = _enforcement_run()
    a, b = first.to_csv(include_wall=False), again.to_csv(include_wall=False)
    passed = a.encode() == b.encode()
    return passed, f"{len(a.encode())} bytes, {len(first.records)} records, identical={passed}"


# -- criterion 2 ---------------------------------------------------------------


def _exact_runs(design):
    out = {}
    for name in TRUTHS_C2:
        truth = channels.preset_channel(name)
        data = tomography.exact_dataset(truth, design, 10**6)
        for method in solvers.METHODS:
            res = solvers.reconstruct(data, method)
            try:
                fid = channels.process_fidelity(res.choi, truth)
            except ValueError:
                fid = float("nan")
            out[(name, method)] = (res, fid)
    return out


@functools.lru_cache(maxsize=None)
def exact_runs(design_name):
    t0 = time.perf_counter()
    runs = _exact_runs(tomography.preset_design(design_name))
    _record_traces("c2-" + design_name, {k: r for k, (r, _) in runs.items()})
    return runs, time.perf_counter() - t0


def _exact_summary(runs):
    fids = [f for _, f in runs.values()]
    cons = [r.cptp_report.d_inf for (_, m), (r, _) in runs.items()
            if m in ("maxlik-simplex", "maxlik-iterative")]
    fid_ok = all(f >= 0.999 for f in fids)
    return fid_ok and max(cons) <= 1e-7, min(fids), max(cons)


def criterion_2():
    runs, elapsed = exact_runs("qubit-balanced")
    passed, fmin, dmax = _exact_summary(runs)
    passed = passed and elapsed <= 120
    return passed, (f"qubit-balanced: min fidelity={fmin:.6f} over 3 channels x 4 methods, "
                    f"constrained max d_inf={dmax:.1e}, {elapsed:.1f}s")


def standard_design_note():
    runs, _ = exact_runs("qubit-standard")
    worst = min(runs.items(), key=lambda kv: kv[1][1])
    (name, method), (_, fid) = worst
    ok, fmin, dmax = _exact_summary(runs)
    return (f"INFO  exact data on qubit-standard: min fidelity={fmin:.4f} ({method} on {name}), "
            f"constrained max d_inf={dmax:.1e}; not gating")


# -- criterion 3 ---------------------------------------------------------------


def criterion_3():
    design = tomography.standard_qubit_design()
    moves, closures = [], []
    for name in TRUTHS_C2:
        truth = channels.preset_channel(name)
        data = tomography.exact_dataset(truth, design, 10**6)
        s_new, _ = solvers.fixed_point_step(truth, data)
        moves.append(float(np.linalg.norm(s_new - truth.matrix)))
        res = solvers.reconstruct_maxlik_iterative(data, initial=truth)
        ITERATIVE_TRACES[("c3", name)] = res.likelihood_trace
        closures.append(compare.closure_residual(res, data))
    passed = max(moves) <= 1e-8 and max(closures) <= 1e-8
    return passed, f"max step={max(moves):.1e}, max closure residual={max(closures):.1e} (3 channels)"


# -- criterion 4 ---------------------------------------------------------------


def criterion_4():
    enforcement_report()
    exact_runs("qubit-balanced")
    exact_runs("qubit-standard")
    agreement_runs()
    if not any(k[0] == "c3" for k in ITERATIVE_TRACES):
        criterion_3()
    worst, steps = 0.0, 0
    for trace in ITERATIVE_TRACES.values():
        values = [v for _, v in trace]
        for a, b in zip(values, values[1:]):
            steps += 1
            worst = max(worst, (a - b) / max(abs(a), 1e-300))
    passed = worst <= 1e-12
    return passed, (f"{len(ITERATIVE_TRACES)} traces, {steps} steps, "
                    f"largest relative decrease={max(worst, 0.0):.1e}")


# -- criterion 5 ---------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def agreement_runs():
    truth = channels.preset_channel(AD)
    design = tomography.standard_qubit_design()
    out = []
    for seed in range(10):
        data = tomography.simulate(truth, design, 10_000, 100 + seed)
        it = solvers.reconstruct(data, "maxlik-iterative")
        sx = solvers.reconstruct(data, "maxlik-simplex")
        ITERATIVE_TRACES[("c5", seed)] = it.likelihood_trace
        out.append((it, sx))
    return tuple(out)


def criterion_5():
    rels, fids = [], []
    for it, sx in agreement_runs():
        a, b = it.final_likelihood, sx.final_likelihood
        rels.append(abs(a - b) / abs(b))
        fids.append(channels.process_fidelity(it.choi, sx.choi))
    passed = max(rels) <= 1e-6 and min(fids) >= 0.999
    return passed, f"max relative L gap={max(rels):.1e}, min pairwise fidelity={min(fids):.8f}"


# -- criterion 6 ---------------------------------------------------------------


def _retraction_vector(x):
    s = solvers.cptp_retraction(solvers.factor_from_params(x, 4), 2, 2).matrix
    iu, ju = np.triu_indices(4)
    iv, jv = np.triu_indices(4, 1)
    return np.concatenate([s[iu, ju].real, s[iv, jv].imag])


def _interior_factor(rng):
    # well-conditioned full-rank Gram, then its triangular factor
    while True:
        g = oracles.random_psd(rng, 4) + 0.5 * np.eye(4)
        if np.linalg.cond(g) <= 100:
            return solvers.params_from_factor(solvers.factor_from_psd(g))


def criterion_6():
    rng = np.random.default_rng(6)
    ranks, s12, s13 = [], [], []
    for _ in range(10):
        x = _interior_factor(rng)
        jac = oracles.fd_jacobian(_retraction_vector, x, 1e-2 * np.abs(x).max())
        sv = np.linalg.svd(jac, compute_uv=False)
        sv = sv / sv[0]
        ranks.append(int(np.sum(sv > 1e-6)))
        s12.append(sv[11])
        s13.append(sv[12])
        if not (np.sum(sv > 1e-6) == 12 and np.sum(sv < 1e-10) == 4):
            ranks[-1] = -ranks[-1]
    passed = all(r == 12 for r in ranks)
    return passed, (f"ranks={sorted(set(ranks))}, min 12th scaled sv={min(s12):.2e}, "
                    f"max 13th={max(s13):.1e}")


# -- criterion 7 ---------------------------------------------------------------


def criterion_7():
    rng = np.random.default_rng(7)
    worst = {"log_likelihood": 0.0, "r_operator": 0.0, "partial_trace_k": 0.0, "kron": 0.0, "choi_from_kraus": 0.0}
    designs = (tomography.standard_qubit_design(), tomography.balanced_qubit_design())
    for i in range(100):
        design = designs[i % 2]
        truth = channels.random_cptp(int(rng.integers(2**31)))
        data = tomography.simulate(truth, design, int(rng.integers(10, 5000)), int(rng.integers(2**31)))
        s = oracles.random_psd(rng, 4)
        s *= 2 / np.trace(s).real
        ll = float(likelihood.log_likelihood(s, data))
        ref = oracles.log_likelihood(s, design.inputs, design.settings, data.counts)
        worst["log_likelihood"] = max(worst["log_likelihood"], abs(ll - ref) / abs(ref))
        worst["r_operator"] = max(worst["r_operator"], _rel(
            likelihood.r_operator(s, data), oracles.r_operator(s, design.inputs, design.settings, data.counts)))

        nh, nk = (int(v) for v in rng.integers(1, 4, size=2))
        m = oracles.random_hermitian(rng, nh * nk)
        worst["partial_trace_k"] = max(worst["partial_trace_k"], _rel(
            linalg.partial_trace_k(m, nh, nk), oracles.partial_trace_k(m, nh, nk)))
        a = rng.normal(size=(nh, nk)) + 1j * rng.normal(size=(nh, nk))
        b = rng.normal(size=(nk, nh)) + 1j * rng.normal(size=(nk, nh))
        worst["kron"] = max(worst["kron"], _rel(linalg.kron(a, b), oracles.kron(a, b)))
        mk = int(rng.integers(1, 4))
        while mk * nk < nh:
            mk += 1
        ops = oracles.random_kraus(rng, nh, nk, mk)
        worst["choi_from_kraus"] = max(worst["choi_from_kraus"], _rel(
            channels.choi_from_kraus(KrausSet(nh, nk, ops)).matrix, oracles.choi_from_kraus(ops, nh, nk)))
    passed = all(v <= ORACLE_REL for v in worst.values())
    return passed, "max relative error " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items())


# -- criterion 8 ---------------------------------------------------------------


def criterion_8():
    rng = np.random.default_rng(8)
    worst = 0.0
    for i in range(100):
        design = tomography.standard_qubit_design() if i % 2 else tomography.balanced_qubit_design()
        truth = channels.random_cptp(int(rng.integers(2**31)))
        data = tomography.simulate(truth, design, int(rng.integers(10, 5000)), int(rng.integers(2**31)))
        s = oracles.random_psd(rng, 4, rank=int(rng.integers(1, 5)))
        s *= 2 / np.trace(s).real
        r = likelihood.r_operator(s, data)
        worst = max(worst, abs(np.trace(r @ s).real - data.total) / data.total)
    return worst <= 1e-9, f"max relative error={worst:.1e} over 100 pairs"


CRITERIA = {
    1: ("CPTP enforcement gap", criterion_1),
    2: ("exact-data consistency", criterion_2),
    3: ("stationarity of the truth", criterion_3),
    4: ("monotone likelihood", criterion_4),
    5: ("cross-solver agreement", criterion_5),
    6: ("effective dimension 12", criterion_6),
    7: ("oracle equivalence", criterion_7),
    8: ("telescoping identity", criterion_8),
    9: ("determinism", criterion_9),
}


def run_criterion(n):
    title, fn = CRITERIA[n]
    passed, detail = fn()
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {n} ({title}): {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed, detail


@pytest.mark.slow
@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    passed, detail = run_criterion(n)
    assert passed, detail


@pytest.mark.slow
def test_standard_design_exact_data_note():
    line = standard_design_note()
    ACCEPTANCE_LINES.append(line)
    print(line)


if __name__ == "__main__":
    results = [run_criterion(n)[0] for n in sorted(CRITERIA)]
    print(standard_design_note())
    sys.exit(0 if all(results) else 1)
