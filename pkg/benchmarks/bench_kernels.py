"""Compiled vs pure-Python kernels.

Times single objective evaluations and full reconstructions with each
backend swapped in. Run: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from cptp_maxlik import channels, kernels, solvers, tomography
from cptp_maxlik.likelihood import P_MIN


def _backends():
    names = ["python"]
    try:
        kernels.get_backend("compiled")
        names.append("compiled")
    except ImportError:
        print("compiled extension not built; timing the python backend only")
    return names


def _swap(name):
    kernels._impl = kernels.get_backend(name)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    truth = channels.preset_channel("amplitude-damping:0.3")
    design = tomography.standard_qubit_design()
    data = tomography.simulate(truth, design, 1000, 0)
    effects, counts = design.effects, data.flat_counts
    x = np.random.default_rng(0).normal(size=16)
    s = truth.matrix

    kernel_cases = {
        "log_likelihood": lambda k: k.log_likelihood(s, effects, counts, P_MIN),
        "r_matrix": lambda k: k.r_matrix(s, effects, counts, P_MIN),
        "neg_loglik_loose": lambda k: k.neg_loglik_loose(x, effects, counts, 2, 2, P_MIN),
        "neg_loglik_retracted": lambda k: k.neg_loglik_retracted(x, effects, counts, 2, 2, P_MIN),
    }
    names = _backends()
    print(f"{'kernel':<24}" + "".join(f"{n + ' [us]':>16}" for n in names) + f"{'speedup':>10}")
    for label, fn in kernel_cases.items():
        times = []
        for name in names:
            k = kernels.get_backend(name)
            n = 2000
            best = min(timeit.repeat(lambda: fn(k), number=n, repeat=args.repeat)) / n
            times.append(best * 1e6)
        speed = f"{times[0] / times[-1]:>9.1f}x" if len(times) > 1 else ""
        print(f"{label:<24}" + "".join(f"{t:>16.2f}" for t in times) + speed)

    print()
    print(f"{'reconstruction':<24}" + "".join(f"{n + ' [ms]':>16}" for n in names) + f"{'speedup':>10}")
    active = kernels._impl
    try:
        for method in ("maxlik-loose", "maxlik-simplex", "maxlik-iterative"):
            times = []
            for name in names:
                _swap(name)
                best = min(timeit.repeat(lambda: solvers.reconstruct(data, method), number=1, repeat=args.repeat))
                times.append(best * 1e3)
            speed = f"{times[0] / times[-1]:>9.1f}x" if len(times) > 1 else ""
            print(f"{method:<24}" + "".join(f"{t:>16.1f}" for t in times) + speed)
    finally:
        kernels._impl = active


if __name__ == "__main__":
    main()
